"""hh-, hv- and vv-curvature of family members, and flag curvature.

Coordinate realisation of the curvature 2-form expansion (stored upper
index first, ``R[i, j, k, l] = R^i_{j kl}``)::

    R^i_{j kl} = delta_k Gamma^i_jl - delta_l Gamma^i_jk
                 + Gamma^i_km Gamma^m_jl - Gamma^i_lm Gamma^m_jk
    P^i_{j kl} = -F dGamma^i_jk / dy^l
    Q          = 0          (no vertical coefficients)

Lowering puts the raised index second: ``R_{jikl} = g_is R^s_{j kl}``; the
same rule gives ``P_{jikl}``.  ``P_n[i, k, l] = l^j P_{jikl}``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .catalog import MetricSpec
from .connections import ConnectionData, local_jets
from .errors import FlagError
from .jets import Jet, einsum
from .tensors import LocalJets, _unbatch

FLAG_EPS = 1e-12


@dataclass
class CurvatureData:
    R: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    R_low: np.ndarray
    P_low: np.ndarray
    P_n: np.ndarray


def hh_jet(lj: LocalJets, gamma: Jet) -> Jet:
    dg = lj.delta(gamma)  # [i, j, l, k] = delta_k Gamma^i_jl
    return (
        einsum("ijlk->ijkl", dg)
        - dg
        + einsum("ikm,mjl->ijkl", gamma, gamma)
        - einsum("ilm,mjk->ijkl", gamma, gamma)
    )


def hv_jet(lj: LocalJets, gamma: Jet) -> Jet:
    return -lj.cov_v(gamma)


def lower(g: np.ndarray, t: np.ndarray) -> np.ndarray:
    """``T_{jikl} = g_is T^s_{j kl}``."""
    return np.einsum("...is,...sjkl->...jikl", g, t)


def hh_curvature(conn: ConnectionData, pt=None) -> np.ndarray:
    """``R^i_{j kl}`` of the connection (``pt`` is implied by ``conn``)."""
    return conn.unbatch(hh_jet(conn.jets, conn.gamma_jet).value)


def hv_curvature(conn: ConnectionData, pt=None) -> np.ndarray:
    """``P^i_{j kl} = -F dGamma^i_jk/dy^l``."""
    return conn.unbatch(hv_jet(conn.jets, conn.gamma_jet).value)


def vv_curvature(conn: ConnectionData) -> np.ndarray:
    """``Q^i_{j kl}`` assembled from the vertical coefficients, which vanish identically."""
    fv = np.asarray(conn.F_vert)
    lj = conn.jets
    f = conn.unbatch(lj.F.value)[..., None, None, None, None]
    quad = np.einsum("...ikm,...mjl->...ijkl", fv, fv) - np.einsum("...ilm,...mjk->...ijkl", fv, fv)
    # derivative terms of the vertical coefficients are zero because F_vert == 0 everywhere
    return f * f * quad


def curvature(conn: ConnectionData) -> CurvatureData:
    lj = conn.jets
    R = hh_curvature(conn)
    P = hv_curvature(conn)
    g = conn.unbatch(lj.g.value)
    ell = conn.unbatch(lj.ell.value)
    P_low = lower(g, P)
    return CurvatureData(
        R=R,
        P=P,
        Q=vv_curvature(conn),
        R_low=lower(g, R),
        P_low=P_low,
        P_n=np.einsum("...j,...jikl->...ikl", ell, P_low),
    )


def pn_slice(conn: ConnectionData, pt=None) -> tuple[np.ndarray, float, float]:
    """``P_{njkl}``, its residual against ``sum k_m Adot^(m)_jkl - Adot_jkl`` and ``max |P_{njnl}|``."""
    lj = conn.jets
    u = conn.unbatch
    P_n = curvature(conn).P_n
    target = -u(lj.adot(1).value)
    for m, km in enumerate(conn.params.k, start=1):
        if km != 0.0:
            target = target + km * u(lj.adot(m).value)
    residual = float(np.abs(P_n - target).max())
    ell = u(lj.ell.value)
    pnjnl = np.einsum("...jkl,...k->...jl", P_n, ell)
    return P_n, residual, float(np.abs(pnjnl).max())


def flag_curvature_values(R: np.ndarray, g: np.ndarray, y: np.ndarray, V: np.ndarray) -> np.ndarray:
    R_low = lower(g, R)
    num = np.einsum("...i,...j,...jikl,...l,...k->...", V, y, R_low, y, V)
    gyy = np.einsum("...i,...ij,...j->...", y, g, y)
    gvv = np.einsum("...i,...ij,...j->...", V, g, V)
    gyv = np.einsum("...i,...ij,...j->...", y, g, V)
    den = gyy * gvv - gyv**2
    if np.any(den <= FLAG_EPS * gyy * gvv):
        raise FlagError("degenerate flag: transverse edge is (nearly) parallel to the flagpole")
    return num / den


def flag_curvature(spec: MetricSpec, pt, V) -> float | np.ndarray:
    """``K(y, V)`` from the Chern hh-curvature; batches when ``pt`` is ``(x, y)`` arrays."""
    lj, single = local_jets(spec, pt, 0, 0, curvature=True)
    R = _unbatch(hh_jet(lj, lj.chern).value, single)
    g = _unbatch(lj.g.value, single)
    y = _unbatch(lj.yvec.value, single)
    K = flag_curvature_values(R, g, y, np.asarray(V, dtype=float))
    return float(K) if single else K
