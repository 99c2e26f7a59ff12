"""Pointwise Finsler tensors: fundamental and Cartan tensors, spray, nonlinear
connection, the delta operator and horizontal/vertical covariant derivatives.

Everything is computed as jets in ``(x, y)`` around a batch of base points
(:class:`LocalJets`), so that ``delta/delta x`` and ``d/dy`` of any derived
tensor are again exact.  Index layout of stored arrays follows the written
index order with upper indices first, e.g. ``gamma[k, i, j] = gamma^k_ij``,
``N[k, i] = N^k_i``, ``A[i, j, k] = A_ijk``.  Batch axes lead.

Conventions (checked by the identity suite, not assumed):

* ``g_ij = 1/2 [F^2]_{y^i y^j}``, ``A_ijk = F/2 * dg_ij/dy^k``;
* ``N^k_i = F (gamma^k_ij l^j - A^k_il gamma^l_ab l^a l^b)``;
* ``T_{..|l} = delta_l T - sum over slots of T Gamma``;  ``T_{...l} = F dT/dy^l``;
* the iterated tensors ``Adot^(m)`` use the Chern connection.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from . import jets
from .catalog import MetricSpec
from .errors import ConvexityError, JetOrderError
from .jets import EvalPoint, Jet, einsum, stack

LETTERS = string.ascii_lowercase


def _letters(rank: int, skip: str = "") -> str:
    return "".join(c for c in LETTERS if c not in skip)[:rank]


def as_batch(pt) -> tuple[np.ndarray, np.ndarray, bool]:
    """Normalise an :class:`EvalPoint` or an ``(x, y)`` pair of arrays to batch arrays."""
    if isinstance(pt, EvalPoint):
        return np.array([pt.x]), np.array([pt.y]), True
    x, y = pt
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    single = x.ndim == 1
    if single:
        x, y = x[None], y[None]
    return x, y, single


def _unbatch(arr: np.ndarray, single: bool) -> np.ndarray:
    return arr[0] if single else arr


class LocalJets:
    """Jet-level geometric fields of one metric around a batch of points.

    ``order`` is the Taylor degree of ``F**2``; each derived field carries the
    remaining order (e.g. ``Adot^(m)`` has ``order - 3 - m``).  Fields are
    cached, so connection and curvature code share one expansion.
    """

    def __init__(self, spec: MetricSpec, xs: Sequence[Jet], ys: Sequence[Jet]):
        self.spec = spec
        self.n = spec.dim
        self.X = list(xs)
        self.Y = list(ys)
        self.basis = self.X[0].basis
        self._adot: list[Jet] = []

    @classmethod
    def at(cls, spec: MetricSpec, x, y, order: int) -> "LocalJets":
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        bas = jets.basis(2 * spec.dim, order)
        seeds = jets.variables(bas, np.concatenate([x, y], axis=-1))
        return cls(spec, seeds[: spec.dim], seeds[spec.dim:])

    @property
    def order(self) -> int:
        return self.X[0].order

    # derivative operators -------------------------------------------------------
    def dx(self, t: Jet) -> Jet:
        """Append an index: ``dT/dx^k``."""
        return stack([t.diff(k) for k in range(self.n)], axis=-1)

    def dy(self, t: Jet) -> Jet:
        """Append an index: ``dT/dy^k``."""
        return stack([t.diff(self.n + k) for k in range(self.n)], axis=-1)

    def delta(self, t: Jet) -> Jet:
        """Append an index: ``delta_k T = dT/dx^k - N^m_k dT/dy^m``."""
        rank = t.ndim - self._batch_ndim
        idx = _letters(rank, skip="mz")
        corr = einsum(f"{idx}m,mz->{idx}z", self.dy(t), self.N)
        return self.dx(t) - corr

    @cached_property
    def _batch_ndim(self) -> int:
        return self.X[0].ndim

    # metric ---------------------------------------------------------------------
    @cached_property
    def yvec(self) -> Jet:
        return stack(self.Y, axis=-1)

    @cached_property
    def F2(self) -> Jet:
        return self.spec.F2(self.X, self.Y)

    @cached_property
    def F(self) -> Jet:
        return self.spec.F(self.X, self.Y)

    @cached_property
    def g(self) -> Jet:
        return 0.5 * self.dy(self.dy(self.F2))

    @cached_property
    def g_inv(self) -> Jet:
        eig = np.linalg.eigvalsh(self.g.value)
        if np.any(eig.min(axis=-1) <= 0):
            bad = int(np.argmin(eig.min(axis=-1).ravel()))
            x = np.stack([c.value for c in self.X], -1).reshape(-1, self.n)[bad]
            y = np.stack([c.value for c in self.Y], -1).reshape(-1, self.n)[bad]
            raise ConvexityError(
                f"fundamental tensor of {self.spec.name} is not positive definite at "
                f"x={x.tolist()}, y={y.tolist()}"
            )
        return jets.inv(self.g)

    @cached_property
    def ell(self) -> Jet:
        return self.yvec / stack([self.F] * self.n, axis=-1)

    @cached_property
    def ell_low(self) -> Jet:
        return self.dy(self.F)

    @cached_property
    def A(self) -> Jet:
        return 0.5 * _times(self.F, self.dy(self.g), 3)

    @cached_property
    def C(self) -> Jet:
        return _times(1.0 / self.F, self.A, 3)

    def raise_first(self, t: Jet) -> Jet:
        rank = t.ndim - self._batch_ndim
        rest = _letters(rank - 1, skip="is")
        return einsum(f"is,s{rest}->i{rest}", self.g_inv, t)

    # spray and nonlinear connection --------------------------------------------
    @cached_property
    def gamma(self) -> Jet:
        """Formal Christoffel symbols ``gamma^k_ij`` of ``g_ij(x, y)`` in x."""
        dxg = self.dx(self.g)  # [a, b, c] = d g_ab / dx^c
        t = (einsum("jli->lij", dxg) + einsum("ilj->lij", dxg) - einsum("ijl->lij", dxg)) * 0.5
        return einsum("kl,lij->kij", self.g_inv, t)

    @cached_property
    def G(self) -> Jet:
        gy = einsum("ijk,k->ij", self.gamma, self.yvec)
        return 0.5 * einsum("ij,j->i", gy, self.yvec)

    @cached_property
    def N(self) -> Jet:
        gl = einsum("kij,j->ki", self.gamma, self.ell)
        gll = einsum("ki,i->k", gl, self.ell)
        corr = einsum("kil,l->ki", self.raise_first(self.A), gll)
        return _times(self.F, gl - corr, 2)

    # connections -----------------------------------------------------------------
    @cached_property
    def chern(self) -> Jet:
        """``Gamma*^i_jk``: the delta-Christoffel term (all family weights zero)."""
        dg = self.delta(self.g)  # [a, b, c] = delta_c g_ab
        t = dg - einsum("jks->sjk", dg) + einsum("ksj->sjk", dg)
        return 0.5 * einsum("is,sjk->ijk", self.g_inv, t)

    def cov_h(self, t: Jet, gamma: Jet) -> Jet:
        """Horizontal covariant derivative of a covariant tensor; appends index ``l``."""
        rank = t.ndim - self._batch_ndim
        idx = _letters(rank, skip="sl")
        out = self.delta(t)
        for slot in range(rank):
            src = idx[:slot] + "s" + idx[slot + 1:]
            out = out - einsum(f"{src},s{idx[slot]}l->{idx}l", t, gamma)
        return out

    def cov_v(self, t: Jet) -> Jet:
        """Vertical covariant derivative ``T_{...l} = F dT/dy^l`` (no vertical coefficients)."""
        return _times(self.F, self.dy(t), t.ndim - self._batch_ndim + 1)

    def along_ell(self, t: Jet) -> Jet:
        """Contract the last index with ``l``."""
        rank = t.ndim - self._batch_ndim
        idx = _letters(rank - 1, skip="z")
        return einsum(f"{idx}z,z->{idx}", t, self.ell)

    def adot(self, m: int) -> Jet:
        """``Adot^(m)`` (``m >= 1``): iterated l-derivative of A with the Chern connection."""
        if m < 1:
            raise ValueError("m must be at least 1")
        needed = 3 + m
        if self.order < needed:
            raise JetOrderError(f"Adot^({m}) needs jets of order {needed}, have {self.order}")
        while len(self._adot) < m:
            prev = self.A if not self._adot else self._adot[-1]
            self._adot.append(self.along_ell(self.cov_h(prev, self.chern)))
        return self._adot[m - 1]

    @cached_property
    def landsberg(self) -> Jet:
        """``L^i_jk = d^2 G^i / dy^j dy^k - Gamma*^i_jk``."""
        return self.dy(self.dy(self.G)) - self.chern

    def connection(self, k: Sequence[float]) -> Jet:
        """Family member ``Gamma(k) = Gamma* + sum_m k_m g^{is} Adot^(m)_sjk``."""
        out = self.chern
        for m, km in enumerate(k, start=1):
            if km != 0.0:
                out = out + km * self.raise_first(self.adot(m))
        return out


def _times(scalar: Jet, t: Jet, rank: int) -> Jet:
    """Scalar jet times tensor jet (broadcast over the trailing ``rank`` axes)."""
    s = Jet(scalar.basis, scalar.coef.reshape(scalar.coef.shape + (1,) * rank), scalar.order)
    return s * t


def required_order(k_len: int = 0, m_max: int = 1, curvature: bool = False) -> int:
    """Taylor degree of ``F**2`` needed for Adot^(m_max) and Gamma(k) (plus one for curvature)."""
    need = 3 + max(m_max, k_len)
    if curvature:
        need = max(need, 4 + k_len)
    return need


# ---------------------------------------------------------------------------
# Value-level records
# ---------------------------------------------------------------------------

@dataclass
class MetricData:
    g: np.ndarray
    g_inv: np.ndarray
    ell: np.ndarray
    ell_low: np.ndarray
    A: np.ndarray
    C: np.ndarray
    F: np.ndarray


@dataclass
class SprayData:
    gamma: np.ndarray
    G: np.ndarray
    N: np.ndarray


@dataclass
class DerivedCartan:
    A_h: np.ndarray
    A_v: np.ndarray
    Adot_m: list[np.ndarray]
    L: np.ndarray


def metric_data(spec: MetricSpec, pt) -> MetricData:
    """``g, g^-1, l, l_low, A, C`` at a point (or a batch ``(x, y)``)."""
    x, y, single = as_batch(pt)
    lj = LocalJets.at(spec, x, y, 3)
    u = lambda a: _unbatch(a, single)
    return MetricData(
        g=u(lj.g.value), g_inv=u(lj.g_inv.value), ell=u(lj.ell.value),
        ell_low=u(lj.ell_low.value), A=u(lj.A.value), C=u(lj.C.value), F=u(lj.F.value),
    )


def spray_data(spec: MetricSpec, pt) -> SprayData:
    x, y, single = as_batch(pt)
    lj = LocalJets.at(spec, x, y, 3)
    return SprayData(
        gamma=_unbatch(lj.gamma.value, single),
        G=_unbatch(lj.G.value, single),
        N=_unbatch(lj.N.value, single),
    )


def adot_iterated(spec: MetricSpec, pt, m_max: int = 3) -> DerivedCartan:
    """Chern-based ``A_{ijk|l}``, ``A_{ijk.l}``, ``Adot^(1..m_max)`` and ``L^i_jk``."""
    if m_max < 1:
        raise ValueError("m_max must be at least 1")
    x, y, single = as_batch(pt)
    # L = d2G/dydy - chern, and G is three orders below F**2
    lj = LocalJets.at(spec, x, y, max(3 + m_max, 5))
    u = lambda a: _unbatch(a, single)
    return DerivedCartan(
        A_h=u(lj.cov_h(lj.A, lj.chern).value),
        A_v=u(lj.cov_v(lj.A).value),
        Adot_m=[u(lj.adot(m).value) for m in range(1, m_max + 1)],
        L=u(lj.landsberg.value),
    )


TensorField = Callable[[Sequence[Jet], Sequence[Jet]], Jet]


def field_jet(field: TensorField, spec: MetricSpec, pt: EvalPoint, order: int = 1) -> tuple[Jet, int]:
    bas = jets.basis(2 * spec.dim, order)
    seeds = jets.variables(bas, pt.array())
    t = field(seeds[: spec.dim], seeds[spec.dim:])
    if not isinstance(t, Jet):
        t = Jet.constant(bas, t, order)
    return t, spec.dim


def delta_x(field: TensorField, spec: MetricSpec, pt: EvalPoint, spray: SprayData | None = None) -> np.ndarray:
    """``delta_j T = dT/dx^j - N^i_j dT/dy^i`` at ``pt``; appends one index.

    ``field(x, y)`` must accept jets; only its first derivatives are used.
    """
    if spray is None:
        spray = spray_data(spec, pt)
    t, n = field_jet(field, spec, pt, 1)
    dx = np.stack([t.diff(k).value for k in range(n)], axis=-1)
    dy = np.stack([t.diff(n + k).value for k in range(n)], axis=-1)
    return dx - np.einsum("...m,mk->...k", dy, spray.N)


def cov_h(field: TensorField, spec: MetricSpec, pt: EvalPoint, gamma: np.ndarray,
          spray: SprayData | None = None) -> np.ndarray:
    """``T_{ijk|l}`` of a rank-3 (or rank-2) covariant field, given connection values."""
    d = delta_x(field, spec, pt, spray)
    t, _ = field_jet(field, spec, pt, 0)
    t = t.value
    rank = t.ndim
    idx = _letters(rank, skip="sl")
    for slot in range(rank):
        src = idx[:slot] + "s" + idx[slot + 1:]
        d = d - np.einsum(f"{src},s{idx[slot]}l->{idx}l", t, gamma)
    return d


def cov_v(field: TensorField, spec: MetricSpec, pt: EvalPoint) -> np.ndarray:
    """``T_{...l} = F dT/dy^l``."""
    t, n = field_jet(field, spec, pt, 1)
    dy = np.stack([t.diff(n + k).value for k in range(n)], axis=-1)
    f = float(spec.F(list(pt.x), list(pt.y)))
    return f * dy


def cartan_field(spec: MetricSpec) -> TensorField:
    """The Cartan tensor as a jet field, for use with :func:`cov_h` and friends."""
    return lambda xs, ys: LocalJets(spec, xs, ys).A


def metric_field(spec: MetricSpec) -> TensorField:
    return lambda xs, ys: LocalJets(spec, xs, ys).g


# ---------------------------------------------------------------------------
# Fast spray for path integration
# ---------------------------------------------------------------------------

def spray_coefficients(spec: MetricSpec, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``G^i = 1/4 g^{il} ([F^2]_{x^k y^l} y^k - [F^2]_{x^l})`` for a batch of points.

    Uses only a second-order jet of ``F**2``; agrees with ``1/2 gamma^i_jk y^j y^k``.
    """
    n = spec.dim
    bas = jets.basis(2 * n, 2)
    seeds = jets.variables(bas, np.concatenate([x, y], axis=-1))
    f2 = spec.F2(seeds[:n], seeds[n:])
    hess = _hessian(f2, bas, n)
    grad_x = np.stack([f2.partial(_unit(2 * n, k)) for k in range(n)], axis=-1)
    g = 0.5 * hess[..., n:, n:]
    mixed = hess[..., :n, n:]  # [k, l] = d^2 F^2 / dx^k dy^l
    rhs = np.einsum("...kl,...k->...l", mixed, y) - grad_x
    return 0.25 * np.linalg.solve(g, rhs[..., None])[..., 0]


def nonlinear_connection(spec: MetricSpec, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``N^i_j = dG^i/dy^j`` for a batch of points (third-order jet of ``F**2``)."""
    n = spec.dim
    bas = jets.basis(2 * n, 3)
    seeds = jets.variables(bas, np.concatenate([x, y], axis=-1))
    ys = seeds[n:]
    f2 = spec.F2(seeds[:n], ys)
    d = [f2.diff(v) for v in range(2 * n)]
    g = stack([stack([0.5 * d[n + i].diff(n + j) for j in range(n)]) for i in range(n)])
    mixed = [sum((d[k].diff(n + l) * ys[k] for k in range(1, n)), d[0].diff(n + l) * ys[0])
             for l in range(n)]
    rhs = stack([mixed[l] - d[l] for l in range(n)])
    G = 0.25 * einsum("il,l->i", jets.inv(g), rhs)
    return np.stack([G.diff(n + j).value for j in range(n)], axis=-1)


def _unit(size: int, k: int) -> tuple[int, ...]:
    e = [0] * size
    e[k] = 1
    return tuple(e)


def _hessian(f: Jet, bas, n: int) -> np.ndarray:
    size = 2 * n
    h = np.empty(f.shape + (size, size))
    for a in range(size):
        for b in range(a, size):
            e = [0] * size
            e[a] += 1
            e[b] += 1
            h[..., a, b] = h[..., b, a] = f.partial(e)
    return h
