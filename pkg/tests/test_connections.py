import dataclasses

import numpy as np
import pytest

from finsler_lab import catalog, connections, tensors
from finsler_lab.connections import FamilyParams, compatibility_defect, family, torsion_defect

from conftest import FAMILY, batch, rel

E = np.einsum


def test_family_params_parse_and_validate():
    assert FamilyParams.parse("0.3,-0.2").k == (0.3, -0.2)
    assert FamilyParams.parse("").m == 0
    assert FamilyParams.parse("(1)").k == (1.0,)
    with pytest.raises(ValueError):
        FamilyParams((float("nan"),))
    assert FamilyParams((1, 2)).to_json() == [1.0, 2.0]


@pytest.mark.parametrize("k", FAMILY)
def test_family_torsion_and_compatibility_defects(spec, k):
    x, y = batch(spec, 10)
    conn = family(spec, (x, y), k)
    assert torsion_defect(conn) < 1e-14
    h, v = compatibility_defect(conn)
    assert h <= 1e-7 and v <= 1e-7


def test_corrupted_connection_is_detected():
    spec = catalog.get_metric("funk-ball")
    conn = family(spec, (np.array([0.1, 0.2]), np.array([1.0, 0.0])), (1.0, 0.5))
    assert torsion_defect(conn) < 1e-14
    gam = conn.Gamma.copy()
    gam[0, 0, 1] += 1.0
    bad = dataclasses.replace(conn, Gamma=gam)
    assert torsion_defect(bad) == pytest.approx(1.0)
    assert compatibility_defect(bad)[0] > 0.5


def test_chern_defect_is_against_landsberg_term():
    # g_ij|k vanishes for chern even on non-Landsberg metrics; the Berwald member does not
    spec = catalog.get_metric("randers-nonconst")
    x, y = batch(spec, 10)
    lj = family(spec, (x, y), ()).jets
    g_h_chern = lj.cov_h(lj.g, lj.chern).value
    g_h_berwald = lj.cov_h(lj.g, lj.connection((1.0,))).value
    assert np.max(np.abs(g_h_chern)) < 1e-12
    assert rel(g_h_berwald, -2.0 * lj.adot(1).value) < 1e-12
    assert np.max(np.abs(g_h_berwald)) > 1e-3


def test_family_equals_chern_on_riemannian():
    spec = catalog.get_metric("riemannian-sphere")
    x, y = batch(spec, 6)
    c = connections.chern(spec, (x, y)).Gamma
    assert np.allclose(family(spec, (x, y), (2.0, 5.0, -1.0)).Gamma, c, atol=1e-12)


def test_ell_contraction_independent_of_k(spec):
    x, y = batch(spec, 8)
    base = connections.chern(spec, (x, y))
    ell = base.jets.ell.value
    ref = E("...ijb,...b->...ij", base.Gamma, ell)
    for k in FAMILY[1:]:
        other = family(spec, (x, y), k).Gamma
        assert np.max(np.abs(E("...ijb,...b->...ij", other, ell) - ref)) < 1e-9
        # the spray direction gives back N
    assert rel(base.jets.F.value[:, None, None] * ref, base.N) < 1e-7


def test_berwald_cross_construction(spec):
    x, y = batch(spec, 10)
    b = connections.berwald(spec, (x, y))
    assert rel(b.Gamma, b.berwald_oracle) < 1e-6


def test_berwald_member_is_y_independent_on_quartic():
    spec = catalog.get_metric("quartic")
    x, y = batch(spec, 6)
    lj = connections.berwald(spec, (x, y)).jets
    assert np.max(np.abs(lj.dy(lj.connection((1.0,))).value)) < 1e-8


def test_single_point_connection():
    spec = catalog.get_metric("funk-ball")
    pt = (np.array([0.1, -0.3]), np.array([0.6, 0.8]))
    conn = family(spec, pt, (0.3, -0.2))
    assert conn.Gamma.shape == (2, 2, 2)
    lj = tensors.LocalJets.at(spec, pt[0][None], pt[1][None], 6)
    assert np.allclose(conn.Gamma, lj.connection((0.3, -0.2)).value[0])


def test_too_many_weights_for_expansion():
    spec = catalog.get_metric("quartic")
    lj = tensors.LocalJets.at(spec, *batch(spec, 2), 4)
    with pytest.raises(ValueError):
        connections.from_jets(lj, FamilyParams((1.0, 1.0)))
