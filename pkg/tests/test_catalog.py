import json
import math

import numpy as np
import pytest

from finsler_lab import catalog
from finsler_lab.catalog import MetricSpec
from finsler_lab.errors import DomainError, SlitBundleError
from finsler_lab.jets import EvalPoint
from finsler_lab.sampling import halton, tangent_samples, transverse_samples, unit_vectors


def F(spec, x, y):
    return catalog.evaluate_F(spec, EvalPoint(x, y))


def test_listing_has_five_kinds_in_fixed_order():
    names = [s.name for s in catalog.list_catalog()]
    assert names == ["euclidean", "riemannian-sphere", "quartic", "randers-nonconst", "funk-ball"]
    assert len({s.kind for s in catalog.list_catalog()}) == 5
    json.dumps(catalog.catalog_listing())


def test_alias_and_unknown_name():
    assert catalog.get_metric("funk") is catalog.get_metric("funk-ball")
    with pytest.raises(KeyError):
        catalog.get_metric("hyperbolic")


def test_closed_form_values():
    assert F(catalog.get_metric("euclidean"), (0.3, 0.1), (3.0, 4.0)) == pytest.approx(5.0)
    # conformal factor 2 / (1 + |x|^2) at |x| = 1
    assert F(catalog.get_metric("riemannian-sphere"), (1.0, 0.0), (0.0, 2.0)) == pytest.approx(2.0)
    assert F(catalog.get_metric("quartic"), (0, 0), (1.0, 0.0)) == pytest.approx(1.5 ** 0.25)
    assert F(catalog.get_metric("randers-nonconst"), (0.0, 0.0), (1.0, 0.0)) == pytest.approx(1.2)
    assert F(catalog.get_metric("randers-nonconst"), (math.pi / 2, 0.0), (1.0, 0.0)) == pytest.approx(1.3)
    # Funk at the centre reduces to the Euclidean norm
    assert F(catalog.get_metric("funk-ball"), (0.0, 0.0), (0.6, 0.8)) == pytest.approx(1.0)


def test_funk_closed_form_off_centre():
    spec = catalog.get_metric("funk-ball")
    x, y = np.array([0.5, 0.0]), np.array([1.0, 0.0])
    # radial direction: F = 1 / (1 - |x|)
    assert F(spec, tuple(x), tuple(y)) == pytest.approx(2.0)
    assert F(spec, tuple(x), tuple(-y)) == pytest.approx(1 / 1.5)


def test_homogeneity_of_F(spec):
    x, y = catalog.sample_points(spec, 5)
    for a, b in zip(x, y):
        assert F(spec, tuple(a), tuple(2.5 * b)) == pytest.approx(2.5 * F(spec, tuple(a), tuple(b)))


def test_domain_errors():
    funk = catalog.get_metric("funk-ball")
    with pytest.raises(DomainError):
        funk.F([1.2, 0.0], [1.0, 0.0])
    with pytest.raises(SlitBundleError):
        funk.F([0.0, 0.0], [0.0, 0.0])
    with pytest.raises(DomainError):
        catalog.check_input_point(funk, [0.95, 0.0])
    catalog.check_input_point(funk, [0.5, 0.0])


@pytest.mark.parametrize(
    "doc",
    [
        {"name": "q", "dim": 2, "kind": "locally-minkowski-quartic", "params": {"epsilon": -1.5}},
        {"name": "s", "dim": 2, "kind": "riemannian-sphere", "params": {"radius": 0.0}},
        {"name": "r", "dim": 2, "kind": "randers", "params": {"alpha": [[1, 2], [2, 1]]}},
        {"name": "x", "dim": 2, "kind": "hyperbolic"},
        {"name": "d", "dim": 1, "kind": "euclidean"},
    ],
)
def test_constructor_rejects_invalid(doc):
    with pytest.raises(ValueError):
        MetricSpec.from_json(doc)


def test_json_roundtrip(tmp_path):
    spec = catalog.get_metric("randers-nonconst")
    path = tmp_path / "m.json"
    path.write_text(json.dumps(spec.to_json()))
    again = catalog.resolve(str(path))
    assert again == spec
    assert F(again, (0.2, 0.1), (1.0, 1.0)) == F(spec, (0.2, 0.1), (1.0, 1.0))


def test_every_listed_metric_validates():
    for spec in catalog.list_catalog():
        rep = catalog.validate(spec, 100)
        assert rep.verdict, rep.failure
        assert rep.min_eigenvalue > 0 and rep.positivity > 0


def test_randers_near_and_beyond_unit_norm():
    near = MetricSpec("r", 2, "randers", {"b0": [0.99, 0.0]})
    rep = catalog.validate(near, 100)
    assert rep.verdict and 0 < rep.min_eigenvalue < 0.05
    far = MetricSpec("r", 2, "randers", {"b0": [1.01, 0.0]})
    rep = catalog.validate(far, 100)
    assert not rep.verdict
    assert rep.failing_point is not None or "beta" in rep.failure


def test_quartic_convexity_boundary():
    assert catalog.validate(MetricSpec("q", 2, "locally-minkowski-quartic", {"epsilon": 50.0})).verdict
    bad = catalog.validate(MetricSpec("q", 2, "locally-minkowski-quartic", {"epsilon": -0.9}))
    assert not bad.verdict and bad.failing_point is not None


def test_sampling_is_deterministic_and_in_region():
    a = tangent_samples(("ball", 0.6), 2, 50)
    b = tangent_samples(("ball", 0.6), 2, 50)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    assert np.all(np.linalg.norm(a[0], axis=1) <= 0.6)
    assert np.allclose(np.linalg.norm(a[1], axis=1), 1.0)
    x, _ = tangent_samples(("box", 2.0), 3, 40)
    assert np.all(np.abs(x) <= 2.0)
    assert not np.any(np.all(halton(2, 5) == 0, axis=1))


def test_unit_vectors_higher_dimension():
    v = unit_vectors(halton(3, 20), 3)
    assert np.allclose(np.linalg.norm(v, axis=1), 1.0)


@pytest.mark.parametrize("n", [2, 3])
def test_transverse_samples_angle(n):
    _, y = tangent_samples(("box", 1.0), n, 30)
    v = transverse_samples(y)
    cos = np.abs(np.sum(v * y, axis=1))
    assert np.all(cos <= math.cos(math.pi / 6) + 1e-12)
