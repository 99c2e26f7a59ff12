"""Built-in Finsler metrics with validity domains and convexity validation.

Metric formulas are written against a tiny numeric protocol (``+ - * /``,
``sqrt``, ``sin``) so the same code evaluates plain floats, numpy arrays and
:class:`~finsler_lab.jets.Jet` objects.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from . import jets
from .errors import DomainError, SlitBundleError
from .jets import EvalPoint, Jet
from .sampling import DEFAULT_OFFSET, tangent_samples

KINDS = ("euclidean", "riemannian-sphere", "locally-minkowski-quartic", "randers", "funk-ball")

# user-supplied base points must satisfy |x| <= FUNK_GUARD; paths may go further
FUNK_GUARD = 0.9


def _val(v) -> np.ndarray:
    return np.asarray(v.value if isinstance(v, Jet) else v, dtype=float)


def _dot(a: Sequence, b: Sequence):
    out = a[0] * b[0]
    for p, q in zip(a[1:], b[1:]):
        out = out + p * q
    return out


@dataclass(frozen=True)
class MetricSpec:
    """A catalog entry: one concrete Finsler metric ``F(x, y)``.

    ``params`` by kind:

    * ``riemannian-sphere``: ``radius`` (stereographic chart, curvature ``1/radius**2``)
    * ``locally-minkowski-quartic``: ``epsilon``
    * ``randers``: ``alpha`` (constant SPD matrix), ``b0`` and ``b1`` with
      ``beta_i(x) = b0_i + b1_i * sin(x^1)``
    """

    name: str
    dim: int
    kind: str
    params: Mapping[str, Any] = field(default_factory=dict, hash=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown metric kind {self.kind!r}; expected one of {KINDS}")
        if self.dim < 2:
            raise ValueError("metric dimension must be at least 2")
        if self.kind == "locally-minkowski-quartic" and not self.params.get("epsilon", 0.5) > -1:
            # F > 0 needs epsilon > -1; convexity is left to validate()
            raise ValueError("quartic metric needs epsilon > -1")
        if self.kind == "riemannian-sphere" and not self.params.get("radius", 1.0) > 0:
            raise ValueError("sphere radius must be positive")
        if self.kind == "randers":
            a = self.alpha
            if a.shape != (self.dim, self.dim) or not np.allclose(a, a.T):
                raise ValueError("randers alpha must be a symmetric dim x dim matrix")
            if np.linalg.eigvalsh(a).min() <= 0:
                raise ValueError("randers alpha must be positive definite")
            if len(self.b0) != self.dim or len(self.b1) != self.dim:
                raise ValueError("randers b0/b1 must have length dim")

    # parameters --------------------------------------------------------------
    @property
    def alpha(self) -> np.ndarray:
        return np.asarray(self.params.get("alpha", np.eye(self.dim).tolist()), dtype=float)

    @property
    def b0(self) -> np.ndarray:
        return np.asarray(self.params.get("b0", [0.0] * self.dim), dtype=float)

    @property
    def b1(self) -> np.ndarray:
        return np.asarray(self.params.get("b1", [0.0] * self.dim), dtype=float)

    def beta_sup_norm(self) -> float:
        """Supremum over the domain of the alpha-norm of beta."""
        a_inv = np.linalg.inv(self.alpha)
        norms = []
        for s in (-1.0, 0.0, 1.0):
            b = self.b0 + s * self.b1
            norms.append(math.sqrt(max(b @ a_inv @ b, 0.0)))
        return max(norms)

    # evaluation -----------------------------------------------------------------
    def check_domain(self, x: Sequence, y: Sequence) -> None:
        if len(x) != self.dim or len(y) != self.dim:
            raise DomainError(f"{self.name} is {self.dim}-dimensional; got point of size {len(x)}")
        yv = np.stack([_val(c) for c in y])
        if np.any(np.sum(yv**2, axis=0) == 0.0):
            raise SlitBundleError("y = 0 is not in the slit tangent bundle")
        if self.kind == "funk-ball":
            xv = np.stack([_val(c) for c in x])
            if np.any(np.sum(xv**2, axis=0) >= 1.0):
                raise DomainError("funk-ball is defined only on the open unit ball |x| < 1")

    def F2(self, x: Sequence, y: Sequence):
        """``F(x, y)**2``; exact polynomial form where the kind allows it."""
        self.check_domain(x, y)
        if self.kind == "euclidean":
            return _dot(y, y)
        if self.kind == "riemannian-sphere":
            r2 = self.params.get("radius", 1.0) ** 2
            return 4.0 * r2 * r2 * _dot(y, y) / ((r2 + _dot(x, x)) * (r2 + _dot(x, x)))
        if self.kind == "locally-minkowski-quartic":
            return jets.sqrt(self._quartic(y))
        f = self._F(x, y)
        return f * f

    def F(self, x: Sequence, y: Sequence):
        """The Finsler function itself."""
        self.check_domain(x, y)
        if self.kind == "euclidean":
            return jets.sqrt(_dot(y, y))
        if self.kind == "riemannian-sphere":
            r2 = self.params.get("radius", 1.0) ** 2
            return 2.0 * r2 * jets.sqrt(_dot(y, y)) / (r2 + _dot(x, x))
        if self.kind == "locally-minkowski-quartic":
            return jets.sqrt(jets.sqrt(self._quartic(y)))
        return self._F(x, y)

    def _quartic(self, y: Sequence):
        eps = self.params.get("epsilon", 0.5)
        yy = _dot(y, y)
        quart = _dot([c * c for c in y], [c * c for c in y])
        return yy * yy + eps * quart

    def _F(self, x: Sequence, y: Sequence):
        if self.kind == "randers":
            a = self.alpha
            ay = [_dot([a[i, j] for j in range(self.dim)], y) for i in range(self.dim)]
            alpha = jets.sqrt(_dot(y, ay))
            s = jets.sin(x[0])
            beta = _dot([self.b0[i] + self.b1[i] * s for i in range(self.dim)], y)
            return alpha + beta
        if self.kind == "funk-ball":
            xx, xy, yy = _dot(x, x), _dot(x, y), _dot(y, y)
            d = 1.0 - xx
            return (jets.sqrt(d * yy + xy * xy) + xy) / d
        raise AssertionError(self.kind)

    # serialisation --------------------------------------------------------------
    def to_json(self) -> dict:
        params = {k: (np.asarray(v).tolist() if isinstance(v, np.ndarray) else v)
                  for k, v in self.params.items()}
        return {"name": self.name, "dim": self.dim, "kind": self.kind, "params": params}

    @classmethod
    def from_json(cls, doc: Mapping) -> "MetricSpec":
        missing = {"name", "dim", "kind"} - set(doc)
        if missing:
            raise ValueError(f"metric spec is missing fields {sorted(missing)}")
        return cls(str(doc["name"]), int(doc["dim"]), str(doc["kind"]), dict(doc.get("params", {})))


def evaluate_F(spec: MetricSpec, pt: EvalPoint) -> float:
    """``F(x, y)`` at a single point."""
    return float(spec.F(list(pt.x), list(pt.y)))


# ---------------------------------------------------------------------------
# The catalog
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Labels:
    """Ground-truth classification of a catalog metric."""

    riemannian: bool
    berwald: bool
    landsberg: bool

    def to_json(self) -> dict:
        return {"riemannian": self.riemannian, "berwald": self.berwald, "landsberg": self.landsberg}


_ENTRIES: dict[str, tuple[MetricSpec, Labels, tuple[str, float], str]] = {}


def _register(spec: MetricSpec, labels: Labels, region: tuple[str, float], listed: bool, note: str):
    _ENTRIES[spec.name] = (spec, labels, region, note)
    if listed:
        _LISTED.append(spec.name)


_LISTED: list[str] = []

_register(
    MetricSpec("euclidean", 2, "euclidean"),
    Labels(True, True, True), ("box", 1.0), True,
    "flat F = |y|",
)
_register(
    MetricSpec("riemannian-sphere", 2, "riemannian-sphere", {"radius": 1.0}),
    Labels(True, True, True), ("box", 1.0), True,
    "unit round sphere in the stereographic chart, K = +1",
)
_register(
    MetricSpec("quartic", 2, "locally-minkowski-quartic", {"epsilon": 0.5}),
    Labels(False, True, True), ("box", 1.0), True,
    "F = (|y|^4 + eps * sum y_i^4)^(1/4), x-independent",
)
_register(
    MetricSpec("randers-nonconst", 2, "randers",
               {"alpha": [[1.0, 0.0], [0.0, 1.0]], "b0": [0.2, 0.0], "b1": [0.1, 0.0]}),
    Labels(False, False, False), ("box", 2.0), True,
    "flat alpha, beta = (0.2 + 0.1 sin x^1) dx^1",
)
_register(
    MetricSpec("funk-ball", 2, "funk-ball"),
    Labels(False, False, False), ("ball", 0.6), True,
    "Funk metric of the unit disk, K = -1/4",
)
_register(
    MetricSpec("randers-const", 2, "randers",
               {"alpha": [[1.0, 0.0], [0.0, 1.0]], "b0": [0.3, 0.0], "b1": [0.0, 0.0]}),
    Labels(False, True, True), ("box", 1.0), False,
    "flat alpha, constant beta = 0.3 dx^1",
)

ALIASES = {"funk": "funk-ball"}


def list_catalog() -> list[MetricSpec]:
    """The five built-in metrics, one per kind, in a fixed order."""
    return [_ENTRIES[name][0] for name in _LISTED]


def known_names() -> list[str]:
    return list(_ENTRIES) + list(ALIASES)


def get_metric(name: str) -> MetricSpec:
    """Look up a catalog metric (listed or variant) by name or alias."""
    key = ALIASES.get(name, name)
    if key not in _ENTRIES:
        raise KeyError(f"unknown metric {name!r}; known: {', '.join(known_names())}")
    return _ENTRIES[key][0]


def expected_labels(spec: MetricSpec) -> Labels | None:
    entry = _ENTRIES.get(spec.name)
    if entry is None or entry[0] != spec:
        return None
    return entry[1]


def sample_region(spec: MetricSpec) -> tuple[str, float]:
    entry = _ENTRIES.get(spec.name)
    if entry is not None and entry[0] == spec:
        return entry[2]
    return ("ball", 0.6) if spec.kind == "funk-ball" else ("box", 1.0)


def describe(spec: MetricSpec) -> str:
    entry = _ENTRIES.get(spec.name)
    return entry[3] if entry is not None else ""


def catalog_listing() -> list[dict]:
    out = []
    for spec in list_catalog():
        doc = spec.to_json()
        doc["labels"] = expected_labels(spec).to_json()
        doc["description"] = describe(spec)
        out.append(doc)
    return out


def load_spec(path: str | Path) -> MetricSpec:
    with open(path, encoding="utf-8") as handle:
        return MetricSpec.from_json(json.load(handle))


def resolve(name_or_path: str) -> MetricSpec:
    """Catalog name/alias, or a path to a JSON spec file."""
    try:
        return get_metric(name_or_path)
    except KeyError:
        if Path(name_or_path).is_file():
            return load_spec(name_or_path)
        raise


def sample_points(spec: MetricSpec, count: int, offset: int = DEFAULT_OFFSET):
    """Deterministic base points in the metric's sampling region and unit Euclidean y."""
    return tangent_samples(sample_region(spec), spec.dim, count, offset)


def check_input_point(spec: MetricSpec, x: Sequence[float]) -> None:
    """Stricter check for user-supplied base points (keeps headroom near boundaries)."""
    if spec.kind == "funk-ball" and math.hypot(*x) > FUNK_GUARD:
        raise DomainError(f"funk-ball input points must satisfy |x| <= {FUNK_GUARD}")


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

@dataclass
class ValidationReport:
    spec: MetricSpec
    samples: int
    min_eigenvalue: float
    positivity: float
    verdict: bool
    failing_point: EvalPoint | None = None
    failure: str = ""

    def to_json(self) -> dict:
        return {
            "metric": self.spec.name,
            "samples": self.samples,
            "min_eigenvalue": self.min_eigenvalue,
            "positivity": self.positivity,
            "verdict": "pass" if self.verdict else "fail",
            "failing_point": None if self.failing_point is None
            else {"x": list(self.failing_point.x), "y": list(self.failing_point.y)},
            "failure": self.failure,
        }


def fundamental_tensor_values(spec: MetricSpec, x: np.ndarray, y: np.ndarray):
    """``(F, g)`` at a batch of points from a second-order jet of ``F**2`` in y."""
    n = spec.dim
    bas = jets.basis(n, 2)
    ys = jets.variables(bas, y)
    xs = [np.asarray(x[..., i], dtype=float) for i in range(n)]
    f2 = spec.F2(xs, ys)
    g = np.empty(y.shape[:-1] + (n, n))
    for i in range(n):
        for j in range(n):
            e = [0] * n
            e[i] += 1
            e[j] += 1
            g[..., i, j] = 0.5 * f2.partial(e)
    f = np.asarray(spec.F(list(x.T), list(y.T)), dtype=float)
    return f, g


def validate(spec: MetricSpec, n_samples: int = 100, offset: int = DEFAULT_OFFSET) -> ValidationReport:
    """Check positivity of F and positive-definiteness of g on a deterministic sample set."""
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    x, y = sample_points(spec, n_samples, offset)
    f = np.asarray(spec.F(list(x.T), list(y.T)), dtype=float)
    with np.errstate(invalid="ignore"):
        _, g = fundamental_tensor_values(spec, x, y)
    finite = np.isfinite(g).all(axis=(-1, -2))
    eig = np.linalg.eigvalsh(np.where(finite[:, None, None], g, np.eye(spec.dim)))
    mins = np.where(finite, eig.min(axis=-1), -np.inf)
    bad = np.nonzero((mins <= 0) | ~(f > 0))[0]
    report = ValidationReport(spec, n_samples, float(mins.min()), float(np.min(f)), True)
    if spec.kind == "randers" and spec.beta_sup_norm() >= 1.0:
        report.verdict = False
        report.failure = f"sup ||beta||_alpha = {spec.beta_sup_norm():.6g} >= 1"
    if len(bad):
        i = int(bad[0])
        report.verdict = False
        report.failing_point = EvalPoint(tuple(x[i]), tuple(y[i]))
        reason = "F <= 0" if not f[i] > 0 else f"g not positive definite (min eigenvalue {mins[i]:.3g})"
        report.failure = (report.failure + "; " if report.failure else "") + reason
    return report
