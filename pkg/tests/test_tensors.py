import numpy as np
import pytest

from finsler_lab import catalog, tensors
from finsler_lab.errors import JetOrderError
from finsler_lab.jets import EvalPoint, JetRequest, fd_jet
from finsler_lab.tensors import LocalJets

from conftest import FAMILY, batch, rel

E = np.einsum


def test_metric_invariants(spec):
    x, y = batch(spec, 10)
    md = tensors.metric_data(spec, (x, y))
    n = spec.dim
    assert np.allclose(md.g, np.swapaxes(md.g, -1, -2), atol=1e-14)
    assert np.all(np.linalg.eigvalsh(md.g) > 0)
    assert np.max(np.abs(md.g @ md.g_inv - np.eye(n))) < 1e-10
    assert np.max(np.abs(E("...i,...ij,...j->...", md.ell, md.g, md.ell) - 1.0)) < 1e-10
    assert np.max(np.abs(E("...ijk,...k->...ij", md.A, md.ell))) < 1e-9
    for perm in ((0, 2, 1, 3), (0, 3, 2, 1), (0, 2, 3, 1)):
        assert np.allclose(md.A, np.transpose(md.A, perm), atol=1e-12)
    assert np.allclose(md.A, md.F[:, None, None, None] * md.C, atol=1e-12)


def test_single_point_matches_batch(spec):
    x, y = batch(spec, 3)
    md = tensors.metric_data(spec, EvalPoint(tuple(x[1]), tuple(y[1])))
    assert np.allclose(md.g, tensors.metric_data(spec, (x, y)).g[1])


def test_nonlinear_connection_is_spray_derivative(spec):
    x, y = batch(spec, 10)
    lj = LocalJets.at(spec, x, y, 4)
    assert rel(lj.N.value, lj.dy(lj.G).value) < 1e-7


def test_fast_spray_paths_agree_with_jets(spec):
    x, y = batch(spec, 10)
    sd = tensors.spray_data(spec, (x, y))
    assert rel(tensors.spray_coefficients(spec, x, y), sd.G) < 1e-12
    assert rel(tensors.nonlinear_connection(spec, x, y), sd.N) < 1e-12
    assert rel(sd.G, 0.5 * E("...ijk,...j,...k->...i", sd.gamma, y, y)) < 1e-12


def test_horizontal_derivative_of_F_vanishes(spec):
    x, y = batch(spec, 6)
    lj = LocalJets.at(spec, x, y, 3)
    assert np.max(np.abs(lj.delta(lj.F).value)) < 1e-8
    # independent oracle: finite differences of F combined with the library N
    N = tensors.spray_data(spec, (x, y)).N
    for p in range(3):
        pt = EvalPoint(tuple(x[p]), tuple(y[p]))
        t = fd_jet(spec.F, pt, JetRequest(1, 1))
        n = spec.dim
        fx = np.array([t.d(x=[j]) for j in range(n)])
        fy = np.array([t.d(y=[i]) for i in range(n)])
        assert np.max(np.abs(fx - N[p].T @ fy)) < 1e-7


def test_quartic_has_flat_horizontal_structure():
    spec = catalog.get_metric("quartic")
    x, y = batch(spec, 6)
    lj = LocalJets.at(spec, x, y, 4)
    assert np.max(np.abs(lj.delta(lj.g).value)) < 1e-9
    assert np.max(np.abs(lj.N.value)) == 0.0


def test_sphere_christoffels_closed_form():
    spec = catalog.get_metric("riemannian-sphere")
    x, y = batch(spec, 10)
    sd = tensors.spray_data(spec, (x, y))
    sigma = -2.0 * x / (1.0 + np.sum(x * x, axis=1))[:, None]
    I = np.eye(2)
    want = (E("ki,pj->pkij", I, sigma) + E("kj,pi->pkij", I, sigma) - E("ij,pk->pkij", I, sigma))
    assert np.max(np.abs(sd.gamma - want)) < 1e-12
    lj = LocalJets.at(spec, x, y, 3)
    assert np.max(np.abs(lj.chern.value - want)) < 1e-8


def test_homogeneity_degrees(spec):
    x, y = batch(spec, 6)
    a = LocalJets.at(spec, x, y, 4)
    b = LocalJets.at(spec, x, 2.0 * y, 4)
    for name, deg in (("g", 0), ("A", 0), ("G", 2), ("N", 1), ("chern", 0)):
        assert rel(getattr(b, name).value, 2.0 ** deg * getattr(a, name).value) < 1e-9, name
    euler = E("...i,...i->...", a.yvec.value, a.dy(a.F).value)
    assert rel(euler, a.F.value) < 1e-12


def test_landsberg_tensor_matches_raised_adot():
    # randers with x-dependent beta is the non-trivial case
    for name in ("randers-nonconst", "funk-ball"):
        spec = catalog.get_metric(name)
        x, y = batch(spec, 10)
        d = tensors.adot_iterated(spec, (x, y), 2)
        md = tensors.metric_data(spec, (x, y))
        raised = E("...is,...sjk->...ijk", md.g_inv, d.Adot_m[0])
        assert rel(raised, d.L) < 1e-6
        assert np.max(np.abs(d.L)) > 1e-3


@pytest.mark.parametrize("name", ["euclidean", "riemannian-sphere", "quartic", "randers-const"])
def test_iterates_vanish_on_berwald_metrics(name):
    spec = catalog.get_metric(name)
    x, y = batch(spec, 8)
    d = tensors.adot_iterated(spec, (x, y), 3)
    for m, ad in enumerate(d.Adot_m, start=1):
        assert np.max(np.abs(ad)) < 1e-8, m


def test_iterates_annihilated_by_ell(spec):
    x, y = batch(spec, 8)
    lj = LocalJets.at(spec, x, y, 6)
    for m in (1, 2, 3):
        assert np.max(np.abs(E("...ijk,...k->...ij", lj.adot(m).value, lj.ell.value))) < 1e-9


def test_deflection_free_for_every_member(spec):
    x, y = batch(spec, 8)
    lj = LocalJets.at(spec, x, y, 6)
    for k in FAMILY:
        gamma = lj.connection(k)
        dl = lj.delta(lj.ell).value + E("...iml,...m->...il", gamma.value, lj.ell.value)
        assert np.max(np.abs(dl)) < 1e-8, k


def test_adot_iterated_single_iterate_has_landsberg_tensor():
    spec = catalog.get_metric("funk-ball")
    d = tensors.adot_iterated(spec, batch(spec, 3), 1)
    assert len(d.Adot_m) == 1 and d.L.shape == (3, 2, 2, 2)


def test_adot_requires_enough_order():
    spec = catalog.get_metric("funk-ball")
    x, y = batch(spec, 2)
    with pytest.raises(JetOrderError):
        LocalJets.at(spec, x, y, 4).adot(2)
    with pytest.raises(ValueError):
        tensors.adot_iterated(spec, (x, y), 0)


def test_required_order():
    assert tensors.required_order(0, 1, False) == 4
    assert tensors.required_order(2, 3, True) == 6
    assert tensors.required_order(4, 1, True) == 8
