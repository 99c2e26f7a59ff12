"""Unit-speed geodesics, parallel transport and Cartan-tensor time series.

Geodesics solve ``x'' + 2 G(x, x') = 0`` with the classical fixed-step RK4
scheme.  Along a geodesic every family member transports vectors by the
same law ``X' + N(x, x') X = 0``, because the iterated Landsberg terms are
annihilated by the direction of motion.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .catalog import MetricSpec
from .errors import DomainError, SeriesError
from .tensors import LocalJets, nonlinear_connection, spray_coefficients

DEFAULT_DT = 1e-3
UNIT_TOL = 1e-9
CHART_LIMIT = 10.0


def speed(spec: MetricSpec, x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``F(x, v)`` for a batch of states (trailing axis = coordinates)."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    return np.asarray(spec.F(list(np.moveaxis(x, -1, 0)), list(np.moveaxis(v, -1, 0))), dtype=float)


def inside(spec: MetricSpec, x: np.ndarray) -> np.ndarray:
    """Mask of states still inside the metric domain and the coordinate chart."""
    r2 = np.sum(x * x, axis=-1)
    ok = np.all(np.isfinite(x), axis=-1)
    if spec.kind == "funk-ball":
        return ok & (r2 < 1.0)
    if spec.kind == "riemannian-sphere":
        # stereographic coordinates blow up at the antipode of the chart origin
        rad = spec.params.get("radius", 1.0)
        return ok & (r2 < (CHART_LIMIT * rad) ** 2)
    return ok


def normalize(spec: MetricSpec, x0, y0) -> np.ndarray:
    """Rescale ``y0`` onto the indicatrix at ``x0``."""
    x0 = np.asarray(x0, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    return y0 / speed(spec, x0, y0)[..., None]


@dataclass
class GeodesicPath:
    """Samples of one integrated geodesic; rows stop at the domain exit if there was one."""

    spec: MetricSpec
    dt: float
    times: np.ndarray
    x: np.ndarray
    v: np.ndarray
    speed: np.ndarray
    exited: bool = False

    @property
    def speed_drift(self) -> float:
        return float(np.max(np.abs(self.speed - self.speed[0])))

    @property
    def states(self) -> np.ndarray:
        return np.concatenate([self.x, self.v], axis=-1)

    def to_json(self) -> dict:
        return {
            "metric": self.spec.name,
            "dt": self.dt,
            "exited": self.exited,
            "speed_drift": self.speed_drift,
            "t": self.times.tolist(),
            "x": self.x.tolist(),
            "v": self.v.tolist(),
            "F": self.speed.tolist(),
        }

    def to_csv(self) -> str:
        n = self.x.shape[1]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t"] + [f"x{i + 1}" for i in range(n)] + [f"v{i + 1}" for i in range(n)]
                   + ["F", "drift"])
        drift = np.abs(self.speed - self.speed[0])
        for t, x, v, f, d in zip(self.times, self.x, self.v, self.speed, drift):
            w.writerow([repr(float(t))] + [repr(float(c)) for c in x] + [repr(float(c)) for c in v]
                       + [repr(float(f)), repr(float(d))])
        return buf.getvalue()


@dataclass
class TransportedFrame:
    """Vectors parallel along ``path``; ``vectors[t, r]`` is the r-th section at sample t."""

    path: GeodesicPath
    vectors: np.ndarray
    norm_drift: float = field(default=0.0)


def _check_start(spec: MetricSpec, x0: np.ndarray, y0: np.ndarray) -> None:
    if not np.all(inside(spec, x0)):
        raise DomainError(f"initial point lies outside the domain of {spec.name}")
    f = speed(spec, x0, y0)
    if np.any(np.abs(f - 1.0) > UNIT_TOL):
        raise DomainError(f"initial velocity must lie on the indicatrix (F = 1 +/- {UNIT_TOL:g}); got F = {f}")


def _rk4(rhs, state, dt):
    k1 = rhs(state)
    k2 = rhs(state + 0.5 * dt * k1)
    k3 = rhs(state + 0.5 * dt * k2)
    k4 = rhs(state + dt * k3)
    return state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _integrate(spec, x0, y0, vecs, t_max, dt):
    """Joint RK4 for a batch of paths (and optionally transported vectors)."""
    if dt <= 0 or t_max <= 0:
        raise ValueError("dt and t_max must be positive")
    n = spec.dim
    P = x0.shape[0]
    r = 0 if vecs is None else vecs.shape[1]
    steps = int(round(t_max / dt))

    def rhs(s):
        x, v = s[:, :n], s[:, n:2 * n]
        if r == 0:
            acc = -2.0 * spray_coefficients(spec, x, v)
            return np.concatenate([v, acc], axis=-1)
        G, N = _spray_and_connection(spec, x, v)
        X = s[:, 2 * n:].reshape(len(s), r, n)
        dX = -np.einsum("pik,prk->pri", N, X).reshape(len(s), r * n)
        return np.concatenate([v, -2.0 * G, dX], axis=-1)

    width = 2 * n + r * n
    out = np.full((steps + 1, P, width), np.nan)
    state = np.concatenate([x0, y0] + ([vecs.reshape(P, r * n)] if r else []), axis=-1)
    out[0] = state
    alive = np.ones(P, dtype=bool)
    last = np.full(P, steps)
    for step in range(1, steps + 1):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        new, ok = _guarded_step(spec, rhs, state, idx, dt)
        for p in idx[~ok]:
            alive[p] = False
            last[p] = step - 1
        keep = idx[ok]
        state[keep] = new[ok]
        out[step, keep] = new[ok]
    times = dt * np.arange(steps + 1)
    return out, times, last, alive


def _guarded_step(spec, rhs, state, idx, dt):
    """RK4 step for rows ``idx``; rows are independent, so a failing batch is retried row by row."""
    n = spec.dim
    try:
        with np.errstate(all="ignore"):
            new = _rk4(rhs, state[idx], dt)
    except DomainError:
        if idx.size == 1:
            return state[idx], np.zeros(1, dtype=bool)
        parts = [_guarded_step(spec, rhs, state, idx[j:j + 1], dt) for j in range(idx.size)]
        return np.concatenate([q[0] for q in parts]), np.concatenate([q[1] for q in parts])
    ok = inside(spec, new[:, :n]) & np.all(np.isfinite(new), axis=-1)
    return new, ok


def _spray_and_connection(spec, x, v):
    N = nonlinear_connection(spec, x, v)
    return 0.5 * np.einsum("...ik,...k->...i", N, v), N


def _paths(spec, out, times, last, dt):
    n = spec.dim
    paths = []
    for p in range(out.shape[1]):
        stop = last[p] + 1
        x = out[:stop, p, :n].copy()
        v = out[:stop, p, n:2 * n].copy()
        paths.append(GeodesicPath(spec, dt, times[:stop].copy(), x, v, speed(spec, x, v),
                                  exited=bool(stop < len(times))))
    return paths


def integrate_geodesics(spec: MetricSpec, x0, y0, t_max: float, dt: float = DEFAULT_DT) -> list[GeodesicPath]:
    """Integrate a batch of unit-speed geodesics (rows of ``x0``, ``y0``) together."""
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    y0 = np.atleast_2d(np.asarray(y0, dtype=float))
    _check_start(spec, x0, y0)
    out, times, last, _ = _integrate(spec, x0, y0, None, t_max, dt)
    return _paths(spec, out, times, last, dt)


def integrate_geodesic(spec: MetricSpec, x0, y0, t_max: float, dt: float = DEFAULT_DT) -> GeodesicPath:
    """One unit-speed geodesic; ``F(x0, y0)`` must equal 1 to within ``UNIT_TOL``."""
    return integrate_geodesics(spec, [x0], [y0], t_max, dt)[0]


def transport_batch(spec: MetricSpec, x0, y0, vectors, t_max: float,
                    dt: float = DEFAULT_DT) -> list[TransportedFrame]:
    """Integrate geodesics and parallel sections ``vectors[p, r]`` together."""
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    y0 = np.atleast_2d(np.asarray(y0, dtype=float))
    vecs = np.asarray(vectors, dtype=float)
    if vecs.ndim == 2:
        vecs = np.broadcast_to(vecs, (x0.shape[0],) + vecs.shape).copy()
    _check_start(spec, x0, y0)
    n = spec.dim
    out, times, last, _ = _integrate(spec, x0, y0, vecs, t_max, dt)
    frames = []
    for p, path in enumerate(_paths(spec, out, times, last, dt)):
        X = out[: len(path.times), p, 2 * n:].reshape(len(path.times), -1, n)
        frames.append(TransportedFrame(path, X, _norm_drift(spec, path, X)))
    return frames


def parallel_transport(spec: MetricSpec, path: GeodesicPath, vectors: Sequence[Sequence[float]],
                       params=None) -> TransportedFrame:
    """Parallel sections along the geodesic started at ``path``'s initial state.

    ``params`` selects a family member; the transport law does not depend on
    it, so it is accepted only for symmetry with the other operations.  The
    path is re-integrated jointly with the sections using the same step.
    """
    t_max = float(path.times[-1])
    if t_max <= 0:
        raise ValueError("path has no extent")
    frame = transport_batch(spec, path.x[:1], path.v[:1], np.asarray(vectors, dtype=float)[None],
                            t_max, path.dt)[0]
    return frame


def _norm_drift(spec, path, X):
    """Max drift of ``g_{x'}(X_r, X_s)`` over the path, all pairs."""
    from .catalog import fundamental_tensor_values

    _, g = fundamental_tensor_values(spec, path.x, path.v)
    gram = np.einsum("tri,tij,tsj->trs", X, g, X)
    return float(np.max(np.abs(gram - gram[0])))


# ---------------------------------------------------------------------------
# Cartan series
# ---------------------------------------------------------------------------

@dataclass
class CartanSeries:
    """``A``, its first two Landsberg iterates and their time derivatives along a frame."""

    times: np.ndarray
    A: np.ndarray
    Adot: np.ndarray
    Addot: np.ndarray
    dA: np.ndarray
    dAdot: np.ndarray

    @property
    def interior(self) -> slice:
        return slice(2, len(self.times) - 2)

    def eq_derivative_residual(self) -> float:
        """``max |d Adot/dt - Addot|`` over interior samples."""
        s = self.interior
        return float(np.max(np.abs(self.dAdot[s] - self.Addot[s])))

    def definition_residual(self) -> float:
        """``max |dA/dt - Adot|`` over interior samples."""
        s = self.interior
        return float(np.max(np.abs(self.dA[s] - self.Adot[s])))


def centered_derivative(f: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order centred difference along axis 0; the two samples at each end are NaN."""
    d = np.full_like(f, np.nan)
    d[2:-2] = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * h)
    return d


def cartan_series(spec: MetricSpec, frame: TransportedFrame, stride: int = 10) -> CartanSeries:
    """Evaluate ``A(X, Y, Z)``, ``Adot(X, Y, Z)`` and ``Addot(X, Y, Z)`` along the frame.

    Samples are taken every ``stride`` integration steps; derivatives use a
    fourth-order centred stencil on that grid.
    """
    path = frame.path
    idx = np.arange(0, len(path.times), stride)
    if len(idx) < 5:
        raise SeriesError("need at least 5 samples along the path for centred differences")
    if frame.vectors.shape[1] < 3:
        raise SeriesError("cartan_series needs three transported vectors")
    lj = LocalJets.at(spec, path.x[idx], path.v[idx], 5)
    X, Y, Z = (frame.vectors[idx, r] for r in range(3))

    def contract(t):
        return np.einsum("tijk,ti,tj,tk->t", t, X, Y, Z)

    A = contract(lj.A.value)
    Ad = contract(lj.adot(1).value)
    Add = contract(lj.adot(2).value)
    h = path.dt * stride
    return CartanSeries(path.times[idx], A, Ad, Add, centered_derivative(A, h), centered_derivative(Ad, h))


def default_frame(n: int) -> np.ndarray:
    """Three fixed, pairwise independent-ish vectors used as initial frame."""
    e = np.eye(n)
    third = np.ones(n) / np.sqrt(n)
    return np.stack([e[0], e[1 % n], third])


def initial_conditions(spec: MetricSpec, count: int, offset: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic unit-speed initial data suited to long integrations.

    The sphere chart uses points on the equator ``|x| = radius`` with
    directions within 45 degrees of it so that paths stay in a bounded part of
    the chart; other metrics use the catalog sample set.
    """
    from .catalog import sample_points
    from .sampling import halton

    if spec.kind == "riemannian-sphere" and spec.dim == 2:
        u = halton(2, count, offset)
        rad = spec.params.get("radius", 1.0)
        phi = 2.0 * np.pi * u[:, 0]
        tilt = (u[:, 1] - 0.5) * (np.pi / 2.0)
        x = rad * np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        tangent = np.stack([-np.sin(phi), np.cos(phi)], axis=-1)
        y = np.cos(tilt)[:, None] * tangent + np.sin(tilt)[:, None] * x / rad
    else:
        x, y = sample_points(spec, count, offset)
    return x, normalize(spec, x, y)


def export(path: GeodesicPath, fmt: str) -> str:
    if fmt == "csv":
        return path.to_csv()
    if fmt == "json":
        return json.dumps(path.to_json(), sort_keys=True)
    raise ValueError(f"unknown export format {fmt!r}")
