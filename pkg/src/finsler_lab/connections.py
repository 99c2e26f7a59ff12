"""The Berwald-type connection family and its defining defects.

A family member is fixed by real weights ``k = (k_1, ..., k_m)``::

    Gamma^i_jk = 1/2 g^is (delta_k g_sj - delta_s g_jk + delta_j g_ks)
                 + k_1 Adot^i_jk + ... + k_m Adot^(m)i_jk

``k = ()`` is the Chern connection and ``k = (1,)`` the Berwald connection.
All members are torsion-free and have no vertical coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .catalog import MetricSpec
from .jets import Jet
from .tensors import (
    DerivedCartan,
    LocalJets,
    SprayData,
    _unbatch,
    as_batch,
    required_order,
)

DEFAULT_M_MAX = 3


@dataclass(frozen=True)
class FamilyParams:
    """Weights ``(k_1, ..., k_m)`` of the iterated Landsberg terms; ``m = 0`` is Chern."""

    k: tuple[float, ...] = ()

    def __post_init__(self):
        k = tuple(float(c) for c in self.k)
        if not all(math.isfinite(c) for c in k):
            raise ValueError("family weights must be finite")
        object.__setattr__(self, "k", k)

    @property
    def m(self) -> int:
        return len(self.k)

    @classmethod
    def parse(cls, text: str) -> "FamilyParams":
        """Parse ``"0.3,-0.2"``; an empty string gives the Chern member."""
        text = text.strip().strip("()[]")
        if not text:
            return cls(())
        return cls(tuple(float(t) for t in text.split(",") if t.strip()))

    def to_json(self) -> list[float]:
        return list(self.k)

    def __str__(self) -> str:
        return "(" + ", ".join(f"{c:g}" for c in self.k) + ")"


CHERN = FamilyParams(())
BERWALD = FamilyParams((1.0,))


@dataclass
class ConnectionData:
    """Values of one family member at a point (or batch) plus the jets behind them."""

    params: FamilyParams
    Gamma: np.ndarray
    F_vert: np.ndarray
    N: np.ndarray
    base: tuple[SprayData, DerivedCartan]
    jets: LocalJets = field(repr=False)
    gamma_jet: Jet = field(repr=False)
    single: bool = True
    berwald_oracle: np.ndarray | None = None

    def unbatch(self, arr: np.ndarray) -> np.ndarray:
        return _unbatch(arr, self.single)


def local_jets(spec: MetricSpec, pt, k_len: int = 0, m_max: int = DEFAULT_M_MAX,
               curvature: bool = True) -> tuple[LocalJets, bool]:
    x, y, single = as_batch(pt)
    order = required_order(k_len, m_max, curvature)
    return LocalJets.at(spec, x, y, order), single


def from_jets(lj: LocalJets, params: FamilyParams, single: bool = False,
              m_max: int | None = None) -> ConnectionData:
    """Assemble :class:`ConnectionData` from an existing expansion."""
    if m_max is None:
        m_max = max(1, min(DEFAULT_M_MAX, lj.order - 3))
    if params.m > lj.order - 3:
        raise ValueError(f"k has {params.m} weights but the expansion supports {lj.order - 3}")
    gamma = lj.connection(params.k)
    u = lambda a: _unbatch(a, single)
    spray = SprayData(gamma=u(lj.gamma.value), G=u(lj.G.value), N=u(lj.N.value))
    derived = DerivedCartan(
        A_h=u(lj.cov_h(lj.A, lj.chern).value),
        A_v=u(lj.cov_v(lj.A).value),
        Adot_m=[u(lj.adot(m).value) for m in range(1, m_max + 1)],
        L=u(lj.landsberg.value),
    )
    n = lj.n
    return ConnectionData(
        params=params,
        Gamma=u(gamma.value),
        F_vert=np.zeros_like(u(gamma.value)),
        N=u(lj.N.value),
        base=(spray, derived),
        jets=lj,
        gamma_jet=gamma,
        single=single,
    )


def family(spec: MetricSpec, pt, params: FamilyParams | Sequence[float] = CHERN,
           m_max: int = DEFAULT_M_MAX) -> ConnectionData:
    """Family member ``Gamma(k)`` at ``pt`` (an EvalPoint or batch ``(x, y)``)."""
    if not isinstance(params, FamilyParams):
        params = FamilyParams(tuple(params))
    if params.m > max(m_max, params.m):
        raise ValueError("params.m exceeds m_max")
    lj, single = local_jets(spec, pt, params.m, max(m_max, params.m))
    return from_jets(lj, params, single, max(m_max, params.m))


def chern(spec: MetricSpec, pt, m_max: int = DEFAULT_M_MAX) -> ConnectionData:
    return family(spec, pt, CHERN, m_max)


def berwald(spec: MetricSpec, pt, m_max: int = DEFAULT_M_MAX) -> ConnectionData:
    """``family(k=(1,))``, with ``d^2 G^i / dy^j dy^k`` attached as an independent oracle."""
    conn = family(spec, pt, BERWALD, m_max)
    lj = conn.jets
    conn.berwald_oracle = conn.unbatch(lj.dy(lj.dy(lj.G)).value)
    return conn


def torsion_defect(conn: ConnectionData) -> float:
    """``max |Gamma^i_jk - Gamma^i_kj| + max |F_vert|``; zero for a torsion-free member."""
    gam = np.asarray(conn.Gamma)
    sym = np.abs(gam - np.swapaxes(gam, -1, -2)).max()
    return float(sym + np.abs(conn.F_vert).max())


def compatibility_defect(conn: ConnectionData, pt=None) -> tuple[float, float]:
    """Residuals of ``g_ij|k = -2 sum k_m Adot^(m)_ijk`` and ``g_ij.k = 2 A_ijk``.

    The horizontal derivative is formed from ``conn.Gamma`` (values), so a
    tampered connection shows up here.
    """
    lj = conn.jets
    single = conn.single
    u = lambda a: _unbatch(a, single)
    dg = u(lj.delta(lj.g).value)
    g = u(lj.g.value)
    gam = conn.Gamma
    g_h = dg - np.einsum("...sj,...sik->...ijk", g, gam) - np.einsum("...is,...sjk->...ijk", g, gam)
    target = np.zeros_like(g_h)
    for m, km in enumerate(conn.params.k, start=1):
        if km != 0.0:
            target = target - 2.0 * km * u(lj.adot(m).value)
    horizontal = float(np.abs(g_h - target).max())
    vertical = float(np.abs(u(lj.cov_v(lj.g).value) - 2.0 * u(lj.A.value)).max())
    return horizontal, vertical
