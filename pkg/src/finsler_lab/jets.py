"""Truncated multivariate Taylor arithmetic and a finite-difference oracle.

A :class:`Jet` holds the Taylor coefficients of a (possibly tensor- and
batch-valued) smooth field around a base point, truncated at some total
degree.  Arithmetic on jets is exact up to that degree, so partial
derivatives of any order up to it are available to machine precision.

Coefficients are stored with the monomial axis first, ``coef.shape ==
(n_monomials, *shape)``; monomials are graded so that all monomials of
degree ``<= d`` form a prefix of the basis.  ``order`` is the highest degree
whose coefficients are valid; differentiation lowers it by one.

The variables of the Finsler engine are ``(x^1..x^n, y^1..y^n)``: index
``v < n`` is a base-point coordinate and ``n + v`` a fiber coordinate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy.special import binom

from .errors import DomainError, JetOrderError, SlitBundleError

__all__ = [
    "Basis",
    "Jet",
    "EvalPoint",
    "JetRequest",
    "JetTable",
    "basis",
    "variables",
    "stack",
    "einsum",
    "inv",
    "sqrt",
    "sin",
    "cos",
    "exp",
    "log",
    "eval_jet",
    "fd_jet",
    "fd_weights",
]


class Basis:
    """Graded monomial basis in ``nvars`` variables up to total ``degree``."""

    def __init__(self, nvars: int, degree: int):
        self.nvars = nvars
        self.degree = degree
        exps = []
        for d in range(degree + 1):
            for combo in combinations_with_replacement(range(nvars), d):
                e = [0] * nvars
                for v in combo:
                    e[v] += 1
                exps.append(tuple(e))
        # graded, and reverse-lex inside a degree so that x-heavy monomials come first
        exps.sort(key=lambda e: (sum(e), tuple(-c for c in e)))
        self.exponents = np.array(exps, dtype=np.int64).reshape(len(exps), nvars)
        self.degrees = self.exponents.sum(axis=1)
        self.size = len(exps)
        self.index = {e: i for i, e in enumerate(exps)}
        self.factorials = np.array(
            [math.prod(math.factorial(c) for c in e) for e in exps], dtype=float
        )
        # prefix length for each truncation degree
        self.prefix = np.searchsorted(self.degrees, np.arange(degree + 1), side="right")
        self._radix = degree + 1
        self._codes = self._encode(self.exponents)
        self._code_order = np.argsort(self._codes)
        self._diff_maps = [self._build_diff(v) for v in range(nvars)]
        self._products: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}

    def _encode(self, exps: np.ndarray) -> np.ndarray:
        weights = self._radix ** np.arange(self.nvars, dtype=np.int64)
        return exps @ weights

    def _lookup(self, exps: np.ndarray) -> np.ndarray:
        codes = self._encode(exps)
        pos = np.searchsorted(self._codes[self._code_order], codes)
        return self._code_order[pos]

    def _build_diff(self, v: int):
        src = np.nonzero(self.exponents[:, v] > 0)[0]
        lowered = self.exponents[src].copy()
        lowered[:, v] -= 1
        dst = self._lookup(lowered)
        factor = self.exponents[src, v].astype(float)
        return src, dst, factor

    def products(self, order: int):
        """Pair table ``(ia, ib, starts)`` for products truncated at ``order``.

        Pairs are sorted by output monomial, so ``np.add.reduceat`` over
        ``starts`` yields the first ``prefix[order]`` output coefficients.
        """
        table = self._products.get(order)
        if table is None:
            m = self.prefix[order]
            deg = self.degrees[:m]
            ia, ib = np.nonzero(deg[:, None] + deg[None, :] <= order)
            ic = self._lookup(self.exponents[ia] + self.exponents[ib])
            perm = np.argsort(ic, kind="stable")
            ia, ib, ic = ia[perm], ib[perm], ic[perm]
            starts = np.searchsorted(ic, np.arange(m))
            table = (ia, ib, starts)
            self._products[order] = table
        return table

    def monomial(self, exponent: Sequence[int]) -> int:
        return self.index[tuple(int(c) for c in exponent)]


@lru_cache(maxsize=None)
def basis(nvars: int, degree: int) -> Basis:
    return Basis(nvars, degree)


def _as_array(c) -> np.ndarray:
    return np.asarray(c, dtype=float)


class Jet:
    """Truncated Taylor polynomial with tensor/batch-valued coefficients."""

    __slots__ = ("basis", "coef", "order")
    __array_ufunc__ = None  # make numpy defer to the reflected operators

    def __init__(self, basis: Basis, coef: np.ndarray, order: int | None = None):
        self.basis = basis
        self.coef = coef
        self.order = basis.degree if order is None else order

    # construction ---------------------------------------------------------
    @classmethod
    def constant(cls, basis: Basis, value, order: int | None = None) -> "Jet":
        value = _as_array(value)
        coef = np.zeros((basis.size,) + value.shape)
        coef[0] = value
        return cls(basis, coef, order)

    def _new(self, coef: np.ndarray, order: int) -> "Jet":
        if order < self.basis.degree:
            coef[self.basis.prefix[order]:] = 0.0
        return Jet(self.basis, coef, order)

    # introspection ----------------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.coef.shape[1:]

    @property
    def ndim(self) -> int:
        return self.coef.ndim - 1

    @property
    def value(self) -> np.ndarray:
        return self.coef[0]

    def partial(self, exponent: Sequence[int]) -> np.ndarray:
        """Partial derivative with multi-exponent ``exponent`` at the base point."""
        if sum(exponent) > self.order:
            raise JetOrderError(
                f"derivative of order {sum(exponent)} requested from a jet of order {self.order}"
            )
        i = self.basis.monomial(exponent)
        return self.coef[i] * self.basis.factorials[i]

    def __repr__(self) -> str:
        return f"Jet(shape={self.shape}, order={self.order}, nvars={self.basis.nvars})"

    # indexing ----------------------------------------------------------------
    def __getitem__(self, key) -> "Jet":
        if not isinstance(key, tuple):
            key = (key,)
        return Jet(self.basis, self.coef[(slice(None),) + key], self.order)

    def __len__(self) -> int:
        return self.shape[0]

    # linear operations ---------------------------------------------------------
    def __neg__(self) -> "Jet":
        return Jet(self.basis, -self.coef, self.order)

    def __add__(self, other) -> "Jet":
        if isinstance(other, Jet):
            order = min(self.order, other.order)
            return self._new(self.coef + other.coef, order)
        coef = self.coef + np.zeros_like(_as_array(other))
        coef[0] = coef[0] + other
        return Jet(self.basis, coef, self.order)

    __radd__ = __add__

    def __sub__(self, other) -> "Jet":
        return self + (-other)

    def __rsub__(self, other) -> "Jet":
        return (-self) + other

    def __mul__(self, other) -> "Jet":
        if isinstance(other, Jet):
            return _product(self, other)
        return Jet(self.basis, self.coef * _as_array(other), self.order)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Jet":
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return Jet(self.basis, self.coef / _as_array(other), self.order)

    def __rtruediv__(self, other) -> "Jet":
        return self.reciprocal() * other

    def __pow__(self, p) -> "Jet":
        if isinstance(p, (int, np.integer)) and p >= 0:
            out = Jet.constant(self.basis, np.ones(self.shape), self.order)
            for _ in range(int(p)):
                out = out * self
            return out
        return self.power(float(p))

    def diff(self, var: int) -> "Jet":
        """Exact partial derivative in variable ``var``; lowers the order by one."""
        if self.order < 1:
            raise JetOrderError("cannot differentiate a jet of order 0")
        src, dst, factor = self.basis._diff_maps[var]
        coef = np.zeros_like(self.coef)
        fshape = (-1,) + (1,) * self.ndim
        coef[dst] = self.coef[src] * factor.reshape(fshape)
        return self._new(coef, self.order - 1)

    def truncate(self, order: int) -> "Jet":
        return self._new(self.coef.copy(), min(order, self.order))

    # elementwise analytic functions ---------------------------------------------
    def compose(self, taylor: Sequence[np.ndarray]) -> "Jet":
        """Apply ``f`` given ``taylor[k] = f^(k)(value)/k!`` (Horner in the nilpotent part)."""
        h_coef = self.coef.copy()
        h_coef[0] = 0.0
        h = Jet(self.basis, h_coef, self.order)
        out = Jet.constant(self.basis, taylor[self.order], self.order)
        for k in range(self.order - 1, -1, -1):
            out = out * h + taylor[k]
        return out

    def power(self, p: float) -> "Jet":
        a0 = self.value
        if np.any(a0 <= 0):
            raise DomainError("real power of a nonpositive jet value")
        return self.compose([binom(p, k) * a0 ** (p - k) for k in range(self.order + 1)])

    def sqrt(self) -> "Jet":
        return self.power(0.5)

    def reciprocal(self) -> "Jet":
        a0 = self.value
        if np.any(a0 == 0):
            raise DomainError("reciprocal of a zero jet value")
        return self.compose([(-1.0) ** k * a0 ** (-1 - k) for k in range(self.order + 1)])

    def exp(self) -> "Jet":
        e = np.exp(self.value)
        return self.compose([e / math.factorial(k) for k in range(self.order + 1)])

    def log(self) -> "Jet":
        a0 = self.value
        if np.any(a0 <= 0):
            raise DomainError("log of a nonpositive jet value")
        terms = [np.log(a0)]
        terms += [(-1.0) ** (k + 1) / (k * a0**k) for k in range(1, self.order + 1)]
        return self.compose(terms)

    def sin(self) -> "Jet":
        a0 = self.value
        return self.compose(
            [np.sin(a0 + k * np.pi / 2) / math.factorial(k) for k in range(self.order + 1)]
        )

    def cos(self) -> "Jet":
        a0 = self.value
        return self.compose(
            [np.cos(a0 + k * np.pi / 2) / math.factorial(k) for k in range(self.order + 1)]
        )


def _product(a: Jet, b: Jet) -> Jet:
    order = min(a.order, b.order)
    ia, ib, starts = a.basis.products(order)
    prod = a.coef[ia] * b.coef[ib]
    return _reduce(a.basis, prod, starts, order)


def _reduce(bas: Basis, prod: np.ndarray, starts: np.ndarray, order: int) -> Jet:
    rest = prod.shape[1:]
    flat = prod.reshape(prod.shape[0], -1)
    coef = np.zeros((bas.size,) + rest)
    coef[: len(starts)] = np.add.reduceat(flat, starts, axis=0).reshape((len(starts),) + rest)
    return Jet(bas, coef, order)


def _ellipsize(subscripts: str) -> str:
    ins, out = subscripts.replace(" ", "").split("->")
    return ",".join("..." + s for s in ins.split(",")) + "->..." + out


def einsum(subscripts: str, *operands) -> Jet:
    """Contract trailing tensor axes of jets/arrays (batch axes broadcast).

    Subscripts name only the tensor axes, e.g. ``"ij,jk->ik"``; at most two
    operands may be jets.
    """
    sub = _ellipsize(subscripts)
    jets = [op for op in operands if isinstance(op, Jet)]
    if len(operands) == 1:
        (a,) = operands
        return Jet(a.basis, np.einsum(sub, a.coef), a.order)
    if len(operands) != 2:
        raise ValueError("einsum supports one or two operands")
    a, b = operands
    if len(jets) == 2:
        order = min(a.order, b.order)
        ia, ib, starts = a.basis.products(order)
        prod = np.einsum(sub, a.coef[ia], b.coef[ib])
        return _reduce(a.basis, prod, starts, order)
    if len(jets) == 1:
        j = jets[0]
        ops = [op.coef if isinstance(op, Jet) else _as_array(op) for op in operands]
        return Jet(j.basis, np.einsum(sub, *ops), j.order)
    raise TypeError("einsum needs at least one Jet operand")


def stack(items: Sequence[Jet], axis: int = -1) -> Jet:
    """Stack jets along a new tensor axis (negative axes count from the end)."""
    order = min(j.order for j in items)
    ax = axis if axis < 0 else axis + 1
    coef = np.stack([j.coef for j in items], axis=ax)
    return items[0]._new(coef, order)


def inv(m: Jet) -> Jet:
    """Inverse of a jet-valued matrix over its last two axes (Neumann series)."""
    m0_inv = np.linalg.inv(m.value)
    h_coef = m.coef.copy()
    h_coef[0] = 0.0
    h = Jet(m.basis, h_coef, m.order)
    step = -einsum("ij,jk->ik", m0_inv, h)
    term = Jet.constant(m.basis, m0_inv, m.order)
    out = term
    for _ in range(m.order):
        term = einsum("ij,jk->ik", step, term)
        out = out + term
    return out


def variables(bas: Basis, values, order: int | None = None) -> list[Jet]:
    """Seed jets for every variable; ``values`` has shape ``(*batch, nvars)``."""
    values = _as_array(values)
    out = []
    for v in range(bas.nvars):
        coef = np.zeros((bas.size,) + values.shape[:-1])
        coef[0] = values[..., v]
        e = [0] * bas.nvars
        e[v] = 1
        coef[bas.monomial(e)] = 1.0
        out.append(Jet(bas, coef, bas.degree if order is None else order))
    return out


# functions that accept either jets or plain numbers/arrays --------------------
def sqrt(v):
    return v.sqrt() if isinstance(v, Jet) else np.sqrt(v)


def sin(v):
    return v.sin() if isinstance(v, Jet) else np.sin(v)


def cos(v):
    return v.cos() if isinstance(v, Jet) else np.cos(v)


def exp(v):
    return v.exp() if isinstance(v, Jet) else np.exp(v)


def log(v):
    return v.log() if isinstance(v, Jet) else np.log(v)


# ---------------------------------------------------------------------------
# Point-wise jet tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EvalPoint:
    """A point ``(x, y)`` of the slit tangent bundle."""

    x: tuple[float, ...]
    y: tuple[float, ...]

    def __post_init__(self):
        x = tuple(float(c) for c in self.x)
        y = tuple(float(c) for c in self.y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if len(x) != len(y):
            raise ValueError(f"x has dimension {len(x)} but y has {len(y)}")
        if len(x) < 2:
            raise ValueError("dimension must be at least 2")
        if not all(math.isfinite(c) for c in x + y):
            raise DomainError("point coordinates must be finite")
        if math.hypot(*y) == 0.0:
            raise SlitBundleError("y = 0 is not in the slit tangent bundle")

    @property
    def dim(self) -> int:
        return len(self.x)

    def array(self) -> np.ndarray:
        return np.array(self.x + self.y)

    @classmethod
    def from_array(cls, z) -> "EvalPoint":
        z = np.asarray(z, dtype=float).ravel()
        n = len(z) // 2
        return cls(tuple(z[:n]), tuple(z[n:]))


@dataclass(frozen=True)
class JetRequest:
    """Maximum total derivative orders in the x and y slots."""

    x_order: int = 0
    y_order: int = 2

    def __post_init__(self):
        if self.x_order < 0 or self.y_order < 0:
            raise ValueError("derivative orders must be nonnegative")
        if self.x_order > 2 or self.y_order > 4:
            raise ValueError("x_order <= 2 and y_order <= 4 are supported")
        if self.x_order + self.y_order > 5:
            raise ValueError("total derivative order is limited to 5")

    def keys(self, n: int) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
        """All sorted ``(x_slots, y_slots)`` index tuples covered by the request."""
        out = []
        for dx in range(self.x_order + 1):
            for xs in combinations_with_replacement(range(n), dx):
                for dy in range(self.y_order + 1):
                    for ys in combinations_with_replacement(range(n), dy):
                        out.append((xs, ys))
        return out


Key = tuple[tuple[int, ...], tuple[int, ...]]


def _exponent(key: Key, n: int) -> tuple[int, ...]:
    e = [0] * (2 * n)
    for i in key[0]:
        e[i] += 1
    for i in key[1]:
        e[n + i] += 1
    return tuple(e)


@dataclass
class JetTable:
    """Partial derivatives of a scalar field at one point.

    ``entries`` maps ``(x_slots, y_slots)`` (each a sorted index tuple) to the
    derivative value; ``((), ())`` is the field value itself.
    """

    point: EvalPoint
    entries: dict[Key, float] = field(default_factory=dict)
    truncation: dict[Key, int] = field(default_factory=dict)

    def d(self, x: Iterable[int] = (), y: Iterable[int] = ()) -> float:
        return self.entries[(tuple(sorted(x)), tuple(sorted(y)))]

    def __getitem__(self, key: Key) -> float:
        xs, ys = key
        return self.entries[(tuple(sorted(xs)), tuple(sorted(ys)))]

    def order_of(self, key: Key) -> int:
        return len(key[0]) + len(key[1])


ScalarField = Callable[[Sequence, Sequence], object]


def eval_jet(fn: ScalarField, pt: EvalPoint, req: JetRequest) -> JetTable:
    """Exact partials of ``fn(x, y)`` at ``pt`` through nested Taylor arithmetic."""
    n = pt.dim
    bas = basis(2 * n, req.x_order + req.y_order)
    seeds = variables(bas, pt.array())
    val = fn(seeds[:n], seeds[n:])
    if not isinstance(val, Jet):
        val = Jet.constant(bas, val)
    table = JetTable(point=pt)
    for key in req.keys(n):
        table.entries[key] = float(val.partial(_exponent(key, n)))
    return table


@lru_cache(maxsize=None)
def fd_weights(k: int) -> tuple[np.ndarray, np.ndarray]:
    """Offsets and weights of the symmetric second-order stencil for ``d^k/dz^k``."""
    p = (k + 1) // 2
    offsets = np.arange(-p, p + 1, dtype=float)
    size = len(offsets)
    vander = np.vander(offsets, size, increasing=True).T
    rhs = np.zeros(size)
    rhs[k] = math.factorial(k)
    weights = np.linalg.solve(vander, rhs)
    keep = np.abs(weights) > 1e-14
    return offsets[keep], weights[keep]


def _step_for(order: int, step: float) -> float:
    # balances roundoff (~eps/h^k) against the O(h^4) Richardson remainder
    return step * 10.0 ** ((order - 1) / 3.0) if order > 0 else step


def fd_jet(fn: ScalarField, pt: EvalPoint, req: JetRequest, step: float = 1e-3) -> JetTable:
    """Central finite differences with one Richardson level, as an oracle.

    Each entry of total order ``k`` uses the tensor product of symmetric
    one-dimensional stencils with base step ``step * 10**((k-1)/3)`` scaled by
    ``max(1, |z_v|)`` per variable; after extrapolation the truncation error
    is ``O(h^4)`` (recorded in ``JetTable.truncation``).
    """
    if step <= 0:
        raise ValueError("step must be positive")
    n = pt.dim
    z0 = pt.array()
    scale = np.maximum(1.0, np.abs(z0))
    keys = req.keys(n)
    stencil_pts = []
    plans = []
    for key in keys:
        e = _exponent(key, n)
        k = sum(e)
        h = _step_for(k, step) * scale
        per_level = []
        for level_h in (h, h / 2):
            active = [v for v in range(2 * n) if e[v] > 0]
            grids_o, grids_w = [], []
            for v in active:
                o, w = fd_weights(e[v])
                grids_o.append(o * level_h[v])
                grids_w.append(w / level_h[v] ** e[v])
            if active:
                mesh_o = np.meshgrid(*grids_o, indexing="ij")
                mesh_w = np.meshgrid(*grids_w, indexing="ij")
                w = np.prod([m.ravel() for m in mesh_w], axis=0)
                pts = np.repeat(z0[None, :], w.size, axis=0)
                for slot, v in enumerate(active):
                    pts[:, v] += mesh_o[slot].ravel()
            else:
                w = np.ones(1)
                pts = z0[None, :].copy()
            start = sum(len(p) for p in stencil_pts)
            stencil_pts.append(pts)
            per_level.append((start, w))
        plans.append((key, per_level))
    allpts = np.concatenate(stencil_pts, axis=0)
    vals = np.asarray(fn(list(allpts[:, :n].T), list(allpts[:, n:].T)), dtype=float)
    if vals.ndim == 0:
        vals = np.full(len(allpts), float(vals))
    if not np.all(np.isfinite(vals)):
        raise DomainError("finite-difference stencil left the domain of the field")
    table = JetTable(point=pt)
    for key, ((s1, w1), (s2, w2)) in plans:
        d_h = float(w1 @ vals[s1 : s1 + len(w1)])
        d_h2 = float(w2 @ vals[s2 : s2 + len(w2)])
        order = len(key[0]) + len(key[1])
        if order == 0:
            table.entries[key] = d_h
            table.truncation[key] = 0
        else:
            table.entries[key] = (4.0 * d_h2 - d_h) / 3.0
            table.truncation[key] = 4
    return table


def relative_gap(a: Mapping[Key, float], b: Mapping[Key, float]) -> dict[int, float]:
    """Per-order max of ``|a - b|`` over ``max(1, largest same-order |b|)``.

    The unit floor makes orders whose exact derivatives vanish (or are tiny)
    compare in absolute terms, where a finite-difference oracle is meaningful.
    """
    by_order: dict[int, list[Key]] = {}
    for key in b:
        by_order.setdefault(len(key[0]) + len(key[1]), []).append(key)
    out = {}
    for order, keys in sorted(by_order.items()):
        scale = max(1.0, max(abs(b[k]) for k in keys))
        out[order] = max(abs(a[k] - b[k]) for k in keys) / scale
    return out
