"""Randomised invariants over the tangent bundle of each catalog metric."""

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from finsler_lab import catalog, curvature, tensors
from finsler_lab.connections import family, torsion_defect
from finsler_lab.tensors import LocalJets

from conftest import ALL_METRICS

E = np.einsum
SETTINGS = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])

coord = st.floats(-0.55, 0.55, allow_nan=False)
direction = st.floats(0.0, 2.0 * np.pi, allow_nan=False)
scale = st.floats(0.05, 20.0, allow_nan=False)
weight = st.floats(-2.0, 2.0, allow_nan=False)


def point(x1, x2, theta, s):
    return np.array([[x1, x2]]), s * np.array([[np.cos(theta), np.sin(theta)]])


@SETTINGS
@given(st.sampled_from(ALL_METRICS), coord, coord, direction, scale)
def test_fundamental_tensor_symmetric_positive(name, x1, x2, theta, s):
    spec = catalog.get_metric(name)
    x, y = point(x1, x2, theta, s)
    md = tensors.metric_data(spec, (x, y))
    assert np.allclose(md.g, np.swapaxes(md.g, -1, -2), atol=1e-13)
    assert np.all(np.linalg.eigvalsh(md.g) > 0)
    assert np.max(np.abs(E("...ijk,...k->...ij", md.A, md.ell))) < 1e-9 * (1 + np.max(np.abs(md.A)))


@SETTINGS
@given(st.sampled_from(ALL_METRICS), coord, coord, direction, scale, st.floats(0.1, 10.0))
def test_positive_homogeneity(name, x1, x2, theta, s, lam):
    spec = catalog.get_metric(name)
    x, y = point(x1, x2, theta, s)
    a = LocalJets.at(spec, x, y, 3)
    b = LocalJets.at(spec, x, lam * y, 3)
    assert np.isclose(b.F.value[0], lam * a.F.value[0], rtol=1e-12)
    assert np.allclose(b.g.value, a.g.value, rtol=1e-9, atol=1e-12)
    assert np.allclose(b.G.value, lam ** 2 * a.G.value, rtol=1e-9, atol=1e-12)


@SETTINGS
@given(st.sampled_from(ALL_METRICS), coord, coord, direction, st.lists(weight, max_size=2))
def test_family_member_invariants(name, x1, x2, theta, k):
    spec = catalog.get_metric(name)
    x, y = point(x1, x2, theta, 1.0)
    conn = family(spec, (x, y), tuple(k))
    assert torsion_defect(conn) < 1e-12
    ell = conn.jets.ell.value
    # every member reproduces the nonlinear connection along the spray direction
    contracted = conn.jets.F.value[:, None, None] * E("...ijb,...b->...ij", conn.Gamma, ell)
    assert np.allclose(contracted, conn.N, atol=1e-8 * (1 + np.max(np.abs(conn.N))))


@SETTINGS
@given(st.sampled_from(ALL_METRICS), coord, coord, direction, st.lists(weight, max_size=2))
def test_curvature_symmetries(name, x1, x2, theta, k):
    spec = catalog.get_metric(name)
    x, y = point(x1, x2, theta, 1.0)
    cd = curvature.curvature(family(spec, (x, y), tuple(k)))
    sc = 1.0 + np.max(np.abs(cd.R))
    assert np.max(np.abs(cd.R + np.swapaxes(cd.R, -1, -2))) < 1e-9 * sc
    assert np.max(np.abs(cd.P - np.swapaxes(cd.P, -3, -2))) < 1e-8 * (1.0 + np.max(np.abs(cd.P)))


@SETTINGS
@given(coord, coord, direction, direction)
def test_funk_flag_curvature_is_constant(x1, x2, theta, phi):
    spec = catalog.get_metric("funk-ball")
    y = np.array([np.cos(theta), np.sin(theta)])
    V = np.array([np.cos(phi), np.sin(phi)])
    if abs(np.sin(phi - theta)) < 0.1:
        V = np.array([-y[1], y[0]])
    K = curvature.flag_curvature(spec, (np.array([x1, x2]), y), V)
    assert abs(K + 0.25) < 1e-9
