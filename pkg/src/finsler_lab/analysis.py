"""Metric classification and the consolidated identity-verification suite."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .catalog import Labels, MetricSpec, expected_labels, sample_points
from .connections import FamilyParams, from_jets
from .curvature import hh_jet, hv_jet, lower
from .errors import FinslerError
from .geodesics import (
    DEFAULT_DT,
    cartan_series,
    default_frame,
    initial_conditions,
    transport_batch,
)
from .sampling import DEFAULT_OFFSET, transverse_samples
from .tensors import LocalJets, required_order

SCHEMA = "finsler-lab/1"
TAU = 1e-7
TAU_P = 1e-6
CHUNK = 25


def thread_count() -> int:
    """Worker cap from ``FINSLER_LAB_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("FINSLER_LAB_THREADS", "1")))
    except ValueError:
        return 1


def chunked(fn: Callable[[np.ndarray, np.ndarray], dict], x: np.ndarray, y: np.ndarray) -> dict:
    """Apply ``fn`` to sample chunks and merge per-key maxima in sample order."""
    bounds = [(i, min(i + CHUNK, len(x))) for i in range(0, len(x), CHUNK)]
    workers = min(thread_count(), len(bounds))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: fn(x[b[0]:b[1]], y[b[0]:b[1]]), bounds))
    else:
        parts = [fn(x[a:b], y[a:b]) for a, b in bounds]
    merged: dict = {}
    for part in parts:
        for key, val in part.items():
            merged[key] = val if key not in merged else _merge(merged[key], val)
    return merged


def _merge(a, b):
    if isinstance(a, tuple):
        return tuple(max(p, q) for p, q in zip(a, b))
    return max(a, b)


def amax(a) -> float:
    return float(np.max(np.abs(a))) if np.size(a) else 0.0


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Thresholds:
    tau: float = TAU
    tau_p: float = TAU_P

    def __post_init__(self):
        if not (self.tau > 0 and self.tau_p > 0):
            raise ValueError("thresholds must be positive")


@dataclass(frozen=True)
class Verdict:
    """A boolean decision together with the norm and threshold that decided it."""

    value: bool
    norm: float
    threshold: float
    criterion: str

    def to_json(self) -> dict:
        return {"value": self.value, "norm": self.norm, "threshold": self.threshold,
                "criterion": self.criterion}


def decide(norm: float, threshold: float, criterion: str) -> Verdict:
    return Verdict(bool(norm < threshold), float(norm), float(threshold), criterion)


@dataclass
class ClassificationReport:
    metric: str
    samples: int
    norms: dict
    riemannian: Verdict
    landsberg: Verdict
    berwald_horizontal: Verdict
    berwald_curvature: Verdict
    expected: Labels | None

    @property
    def berwald(self) -> bool:
        return self.berwald_horizontal.value and self.berwald_curvature.value

    @property
    def dual_agree(self) -> bool:
        return self.berwald_horizontal.value == self.berwald_curvature.value

    @property
    def chain_ok(self) -> bool:
        r, b, l = self.riemannian.value, self.berwald, self.landsberg.value
        return (not r or b) and (not b or l)

    @property
    def consistent(self) -> bool:
        return self.dual_agree and self.chain_ok

    @property
    def labels(self) -> Labels:
        return Labels(self.riemannian.value, self.berwald, self.landsberg.value)

    @property
    def agreement(self) -> bool | None:
        return None if self.expected is None else self.labels == self.expected

    @property
    def verdict(self) -> str:
        if self.riemannian.value:
            return "riemannian"
        if self.berwald:
            return "berwald"
        if self.landsberg.value:
            return "landsberg"
        return "general"

    def to_json(self) -> dict:
        return {
            "metric": self.metric,
            "samples": self.samples,
            "norms": self.norms,
            "verdict": self.verdict,
            "riemannian": self.riemannian.to_json(),
            "landsberg": self.landsberg.to_json(),
            "berwald": {
                "value": self.berwald,
                "horizontal": self.berwald_horizontal.to_json(),
                "curvature": self.berwald_curvature.to_json(),
                "agree": self.dual_agree,
            },
            "chain_ok": self.chain_ok,
            "expected": None if self.expected is None else self.expected.to_json(),
            "agreement": self.agreement,
        }


def _class_norms(spec: MetricSpec, x: np.ndarray, y: np.ndarray) -> dict:
    lj = LocalJets.at(spec, x, y, 5)
    chern = lj.chern
    berwald = lj.connection((1.0,))
    return {
        "A": amax(lj.A.value),
        "Adot": amax(lj.adot(1).value),
        "A_h": amax(lj.cov_h(lj.A, chern).value),
        "P_chern": amax(hv_jet(lj, chern).value),
        "Gamma_chern": amax(chern.value),
        "dGamma_berwald": amax(lj.dy(berwald).value),
    }


def classify(spec: MetricSpec, n_samples: int = 50, thresholds: Thresholds = Thresholds(),
             offset: int = DEFAULT_OFFSET) -> ClassificationReport:
    """Riemannian / Landsberg / Berwald verdicts from max-abs norms over a sample set.

    The Berwald decision uses two independent criteria, horizontal constancy
    of ``A`` and vanishing Chern hv-curvature; they must agree.
    """
    x, y = sample_points(spec, n_samples, offset)
    norms = chunked(lambda a, b: _class_norms(spec, a, b), x, y)
    t, tp = thresholds.tau, thresholds.tau_p
    scale_a = 1.0 + norms["A"]
    return ClassificationReport(
        metric=spec.name,
        samples=n_samples,
        norms={k: norms[k] for k in sorted(norms)},
        riemannian=decide(norms["A"], t, "max|A|"),
        landsberg=decide(norms["Adot"], t * scale_a, "max|Adot| (= max|L| lowered)"),
        berwald_horizontal=decide(norms["A_h"], t * scale_a, "max|A_{ijk|l}| (chern)"),
        berwald_curvature=decide(norms["P_chern"], tp * (1.0 + norms["Gamma_chern"]), "max|P| (chern)"),
        expected=expected_labels(spec),
    )


@dataclass
class HvBerwaldCheck:
    metric: str
    k: tuple[float, ...]
    max_P: float
    threshold: float
    berwald: bool
    adot_norms: list[float]
    passed: bool

    def to_json(self) -> dict:
        return {"metric": self.metric, "k": list(self.k), "max_P": self.max_P,
                "threshold": self.threshold, "berwald": self.berwald,
                "adot_norms": self.adot_norms, "passed": self.passed}


def hv_berwald_check(spec: MetricSpec, params: FamilyParams | Sequence[float], n_samples: int = 20,
                   thresholds: Thresholds = Thresholds(), offset: int = DEFAULT_OFFSET) -> HvBerwaldCheck:
    """For one family member: ``max|P| small`` must hold exactly when the metric is Berwald.

    On Berwald metrics the iterates ``Adot^(m)`` (m = 1..3) must vanish too.
    """
    if not isinstance(params, FamilyParams):
        params = FamilyParams(tuple(params))
    m_max = max(3, params.m)
    x, y = sample_points(spec, n_samples, offset)

    def norms(a, b):
        lj = LocalJets.at(spec, a, b, required_order(params.m, m_max, True))
        gamma = lj.connection(params.k)
        out = {
            "P": amax(hv_jet(lj, gamma).value),
            "Gamma": amax(gamma.value),
            "A": amax(lj.A.value),
            "A_h": amax(lj.cov_h(lj.A, lj.chern).value),
        }
        for m in range(1, m_max + 1):
            out[f"adot{m}"] = amax(lj.adot(m).value)
        return out

    nm = chunked(norms, x, y)
    threshold = thresholds.tau_p * (1.0 + nm["Gamma"])
    berwald = nm["A_h"] < thresholds.tau * (1.0 + nm["A"])
    adots = [nm[f"adot{m}"] for m in range(1, m_max + 1)]
    passed = (nm["P"] < threshold) == berwald
    if berwald:
        passed = passed and all(a < thresholds.tau * (1.0 + nm["A"]) for a in adots)
    return HvBerwaldCheck(spec.name, params.k, nm["P"], threshold, bool(berwald), adots, bool(passed))


# ---------------------------------------------------------------------------
# Identity suite
# ---------------------------------------------------------------------------

TOL_EXACT = 1e-10
TOL_HOMOGENEITY = 1e-9
TOL_CONVENTION = 1e-7
TOL_CURVATURE = 1e-6


class _Context:
    """Everything the identity rows need, computed once per sample chunk."""

    def __init__(self, spec: MetricSpec, params: FamilyParams, x: np.ndarray, y: np.ndarray):
        m = params.m
        self.m_max = max(2, m)
        self.params = params
        self.spec = spec
        self.lj = LocalJets.at(spec, x, y, required_order(m, self.m_max, True))
        self.scaled = LocalJets.at(spec, x, 2.0 * y, required_order(m, 1, False))
        self.conn = from_jets(self.lj, params, single=False, m_max=self.m_max)
        lj = self.lj
        self.gamma = self.conn.gamma_jet
        self.g = lj.g.value
        self.ell = lj.ell.value
        self.ell_low = lj.ell_low.value
        self.A = lj.A.value
        self.A_h = lj.cov_h(lj.A, self.gamma).value
        self.A_v = lj.cov_v(lj.A).value
        self.R = hh_jet(lj, self.gamma).value
        self.P = hv_jet(lj, self.gamma).value
        self.R_low = lower(self.g, self.R)
        self.P_low = lower(self.g, self.P)
        self.R_n = np.einsum("...j,...sjkl->...skl", self.ell, self.R)
        self.P_n_up = np.einsum("...j,...sjkl->...skl", self.ell, self.P)
        self.P_n = np.einsum("...j,...jikl->...ikl", self.ell, self.P_low)

    def adot(self, m: int) -> np.ndarray:
        return self.lj.adot(m).value

    def adot_h(self, m: int) -> np.ndarray:
        return self.lj.cov_h(self.lj.adot(m), self.gamma).value

    def adot_v(self, m: int) -> np.ndarray:
        return self.lj.cov_v(self.lj.adot(m)).value

    def weighted(self, fn) -> np.ndarray | float:
        total = 0.0
        for m, km in enumerate(self.params.k, start=1):
            if km != 0.0:
                total = total + km * fn(m)
        return total


def residual(lhs, rhs) -> float:
    """``max|lhs - rhs| / max(1, max|lhs|, max|rhs|)``."""
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.broadcast_to(np.asarray(rhs, dtype=float), lhs.shape)
    return amax(lhs - rhs) / max(1.0, amax(lhs), amax(rhs))


E = np.einsum


def _euler(c: _Context):
    lj = c.lj
    F = lj.F
    return residual(E("...i,...i->...", lj.yvec.value, lj.dy(F).value), F.value)


def _homogeneity(c: _Context):
    lj, sc = c.lj, c.scaled
    pairs = [
        (sc.g, lj.g, 0), (sc.A, lj.A, 0), (sc.G, lj.G, 2), (sc.N, lj.N, 1),
        (sc.connection(c.params.k[:1]), lj.connection(c.params.k[:1]), 0),
    ]
    return max(residual(a.value, 2.0**deg * b.value) for a, b, deg in pairs)


def _geodesic_consistency(c: _Context):
    gam, chris = c.gamma.value, c.lj.gamma.value
    lhs = E("...kab,...a,...b->...k", gam, c.ell, c.ell)
    return residual(lhs, E("...kab,...a,...b->...k", chris, c.ell, c.ell))


def _torsion(c: _Context):
    gam = c.conn.Gamma
    return amax(gam - np.swapaxes(gam, -1, -2)) + amax(c.conn.F_vert)


def _compat_h(c: _Context):
    lj = c.lj
    g_h = lj.cov_h(lj.g, c.gamma).value
    return residual(g_h, -2.0 * c.weighted(c.adot))


def _compat_v(c: _Context):
    return residual(c.lj.cov_v(c.lj.g).value, 2.0 * c.A)


def _sym3(t: np.ndarray, rank: int) -> float:
    """Largest deviation from symmetry in the first three of the trailing ``rank`` slots."""
    lead = t.ndim - rank
    worst = 0.0
    for perm in ((1, 0, 2), (0, 2, 1), (2, 1, 0)):
        axes = list(range(lead)) + [lead + p for p in perm] + list(range(lead + 3, t.ndim))
        worst = max(worst, residual(t, np.transpose(t, axes)))
    return worst


def _symmetry(c: _Context):
    return max(_sym3(c.A_h, 4), _sym3(c.A_v, 4), _sym3(c.adot(1), 3))


def _eq_a_n(c: _Context):
    return residual(E("...ijkl,...l->...ijk", c.A_h, c.ell), c.adot(1))


def _eq_iterate(c: _Context):
    return residual(E("...ijkl,...l->...ijk", c.adot_h(1), c.ell), c.adot(2))


def _eq_a_nh(c: _Context):
    return residual(E("...i,...ijkl->...jkl", c.ell, c.A_h), 0.0)


def _eq_a_nv(c: _Context):
    return residual(E("...i,...ijkl->...jkl", c.ell, c.A_v), -c.A)


def _eq_adot_n(c: _Context):
    h = residual(E("...i,...ijkl->...jkl", c.ell, c.adot_h(1)), 0.0)
    v = residual(E("...i,...ijkl->...jkl", c.ell, c.adot_v(1)), -c.adot(1))
    return max(h, v)


def _r_antisym(c: _Context):
    return residual(c.R, -np.swapaxes(c.R, -1, -2))


def _bianchi(c: _Context):
    R = c.R  # [j, i, k, l] = R^j_{i kl}
    cyc = R + E("...jkli->...jikl", R) + E("...jlik->...jikl", R)
    return amax(cyc) / max(1.0, amax(R))


def _p_sym(c: _Context):
    return residual(c.P, np.swapaxes(c.P, -3, -2))


def _compat_curv_hh(c: _Context):
    lhs = c.R_low + np.swapaxes(c.R_low, -4, -3)
    rhs = -2.0 * E("...ijs,...skl->...ijkl", c.A, c.R_n)
    rhs = rhs + 2.0 * c.weighted(lambda m: np.swapaxes(c.adot_h(m), -1, -2) - c.adot_h(m))
    return residual(lhs, rhs)


def _compat_curv_hv(c: _Context):
    lhs = c.P_low + np.swapaxes(c.P_low, -4, -3)
    rhs = (-2.0 * c.weighted(c.adot_v) - 2.0 * np.swapaxes(c.A_h, -1, -2)
           - 2.0 * E("...ijs,...skl->...ijkl", c.A, c.P_n_up))
    return residual(lhs, rhs)


def _vertical_symmetry(c: _Context):
    return residual(c.A_v, np.swapaxes(c.A_v, -1, -2))


def _vertical_symmetry_corrected(c: _Context):
    gap = E("...ijk,...l->...ijkl", c.A, c.ell_low) - E("...ijl,...k->...ijkl", c.A, c.ell_low)
    return residual(c.A_v - np.swapaxes(c.A_v, -1, -2), gap)


def _p_formula(c: _Context):
    Ah, A, Pn = c.A_h, c.A, c.P_n_up
    rhs = -c.weighted(c.adot_v) - (E("...ijlk->...ijkl", Ah) + E("...jkli->...ijkl", Ah)
                                   - E("...kilj->...ijkl", Ah))
    rhs = rhs + (E("...kis,...sjl->...ijkl", A, Pn) - E("...jks,...sil->...ijkl", A, Pn)
                 - E("...ijs,...skl->...ijkl", A, Pn))
    return residual(c.P_low, rhs)


def _p_n(c: _Context):
    return residual(c.P_n, c.weighted(c.adot) - c.adot(1))


def _p_njnl(c: _Context):
    return amax(E("...jkl,...k->...jl", c.P_n, c.ell)) / max(1.0, amax(c.P_n))


def _q(c: _Context):
    from .curvature import vv_curvature
    return amax(vv_curvature(c.conn))


@dataclass(frozen=True)
class Identity:
    name: str
    eq: str
    tol: float
    fn: Callable[[_Context], float]
    informational: bool = False


IDENTITIES: tuple[Identity, ...] = (
    Identity("euler", "y^i dF/dy^i = F", TOL_HOMOGENEITY, _euler),
    Identity("homogeneity", "deg_y g=0, A=0, G=2, N=1, Gamma=0", TOL_HOMOGENEITY, _homogeneity),
    Identity("geodesic-consistency", "Gamma^k_ab l^a l^b = gamma^k_ab l^a l^b", 1e-8, _geodesic_consistency),
    Identity("torsion-free", "Gamma^i_jk = Gamma^i_kj, F_vert = 0", TOL_EXACT, _torsion),
    Identity("compat-horizontal", "g_ij|k = -2 sum_m k_m Adot^(m)_ijk", TOL_CONVENTION, _compat_h),
    Identity("compat-vertical", "g_ij.k = 2 A_ijk", TOL_CONVENTION, _compat_v),
    Identity("cartan-derivative-symmetry", "A_ijk|l, A_ijk.l, Adot_ijk symmetric in i,j,k", TOL_EXACT, _symmetry),
    Identity("landsberg-from-cartan", "A_ijk|n = Adot_ijk", TOL_CONVENTION, _eq_a_n),
    Identity("landsberg-iterate", "Adot^(1)_ijk|n = Adot^(2)_ijk", TOL_CONVENTION, _eq_iterate),
    Identity("cartan-l-horizontal", "A_njk|l = 0", TOL_CONVENTION, _eq_a_nh),
    Identity("cartan-l-vertical", "A_njk.l = -A_jkl", TOL_CONVENTION, _eq_a_nv),
    Identity("landsberg-l-contractions", "Adot_njk|l = 0, Adot_njk.l = -Adot_jkl", TOL_CONVENTION, _eq_adot_n),
    Identity("R-antisymmetry", "R^j_i kl = -R^j_i lk", TOL_CURVATURE, _r_antisym),
    Identity("first-bianchi", "R^j_i kl + R^j_k li + R^j_l ik = 0", TOL_CURVATURE, _bianchi),
    Identity("P-symmetry", "P^j_i kl = P^j_k il", TOL_CURVATURE, _p_sym),
    Identity("hh-compatibility",
             "R_ijkl + R_jikl = 2 sum_m k_m (Adot^(m)_ijl|k - Adot^(m)_ijk|l) - 2 A_ijs R^s_n kl",
             TOL_CURVATURE, _compat_curv_hh),
    Identity("hv-compatibility",
             "P_ijkl + P_jikl = -2 sum_m k_m Adot^(m)_ijk.l - 2 A_ijl|k - 2 A_ijs P^s_n kl",
             TOL_CURVATURE, _compat_curv_hv),
    Identity("cartan-vertical-symmetry", "A_ijk.l = A_ijl.k", TOL_CONVENTION, _vertical_symmetry),
    Identity("cartan-vertical-symmetry-corrected", "A_ijk.l - A_ijl.k = l_l A_ijk - l_k A_ijl",
             TOL_CONVENTION, _vertical_symmetry_corrected, informational=True),
    Identity("P-formula",
             "P_ijkl = -sum_m k_m Adot^(m)_ijk.l - (A_ijl|k + A_jkl|i - A_kil|j)"
             " + A_kis P^s_n jl - A_jks P^s_n il - A_ijs P^s_n kl",
             TOL_CURVATURE, _p_formula),
    Identity("P-n-slice", "P_njkl = sum_m k_m Adot^(m)_jkl - Adot_jkl", TOL_CURVATURE, _p_n),
    Identity("P-njnl", "P_njnl = 0", TOL_CURVATURE, _p_njnl),
    Identity("Q-vanishes", "Q = 0", TOL_CURVATURE, _q),
)


def identity_names() -> list[str]:
    return [i.name for i in IDENTITIES]


@dataclass
class IdentityRow:
    identity: str
    eq: str
    residual: float | None
    tol: float
    status: str
    informational: bool = False

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_json(self) -> dict:
        return {"identity": self.identity, "eq": self.eq, "residual": self.residual,
                "tol": self.tol, "status": self.status}


@dataclass
class IdentityReport:
    metric: str
    k: tuple[float, ...]
    samples: int
    rows: list[IdentityRow] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.rows if not r.informational)

    def row(self, name: str) -> IdentityRow:
        for r in self.rows:
            if r.identity == name:
                return r
        raise KeyError(name)

    def failures(self) -> list[IdentityRow]:
        return [r for r in self.rows if not r.passed and not r.informational]

    def to_json(self) -> dict:
        return {"metric": self.metric, "k": list(self.k), "samples": self.samples,
                "rows": [r.to_json() for r in self.rows]}


def verify_identities(spec: MetricSpec, params: FamilyParams | Sequence[float] = FamilyParams(),
                      n_samples: int = 50, offset: int = DEFAULT_OFFSET,
                      only: Sequence[str] | None = None) -> IdentityReport:
    """Max residual of every registered identity over ``n_samples`` points.

    A row whose inputs cannot be computed is reported as ``skipped: <cause>``.
    Informational rows are reported but do not affect :attr:`IdentityReport.all_passed`.
    """
    if not isinstance(params, FamilyParams):
        params = FamilyParams(tuple(params))
    chosen = [i for i in IDENTITIES if only is None or i.name in only]
    x, y = sample_points(spec, n_samples, offset)

    def run(a, b):
        try:
            ctx = _Context(spec, params, a, b)
        except FinslerError as exc:
            return {i.name: ("skip", str(exc)) for i in chosen}
        out = {}
        for ident in chosen:
            try:
                out[ident.name] = ("ok", float(ident.fn(ctx)))
            except FinslerError as exc:
                out[ident.name] = ("skip", str(exc))
        return out

    bounds = [(i, min(i + CHUNK, n_samples)) for i in range(0, n_samples, CHUNK)]
    workers = min(thread_count(), len(bounds))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda bd: run(x[bd[0]:bd[1]], y[bd[0]:bd[1]]), bounds))
    else:
        parts = [run(x[a:b], y[a:b]) for a, b in bounds]

    report = IdentityReport(spec.name, params.k, n_samples)
    for ident in chosen:
        results = [p[ident.name] for p in parts]
        skipped = [r[1] for r in results if r[0] == "skip"]
        if skipped:
            report.rows.append(IdentityRow(ident.name, ident.eq, None, ident.tol,
                                           f"skipped: {skipped[0]}", ident.informational))
            continue
        res = max(r[1] for r in results)
        status = "pass" if res <= ident.tol else "fail"
        report.rows.append(IdentityRow(ident.name, ident.eq, res, ident.tol, status, ident.informational))
    return report


# ---------------------------------------------------------------------------
# Along-geodesic checks
# ---------------------------------------------------------------------------

@dataclass
class GeodesicCartanReport:
    metric: str
    k2: float
    paths: int
    t_max: float
    derivative_residual: float
    definition_residual: float
    witness: float
    landsberg_witness: bool
    constant_curvature_residual: float | None
    global_claim: str = "untested: completeness and boundedness hypotheses are not desk-verifiable"

    def to_json(self) -> dict:
        return {
            "metric": self.metric, "k2": self.k2, "paths": self.paths, "t_max": self.t_max,
            "derivative_residual": self.derivative_residual,
            "definition_residual": self.definition_residual,
            "witness": self.witness, "landsberg_witness": self.landsberg_witness,
            "constant_curvature_residual": self.constant_curvature_residual,
            "global_claim": self.global_claim,
        }


def cartan_along_geodesics(spec: MetricSpec, k2: float = 1.0, n_paths: int = 10, t_max: float = 1.0,
                      dt: float = DEFAULT_DT, stride: int = 10, flag_curvature: float | None = None,
                      witness_tol: float = TAU) -> GeodesicCartanReport:
    """Residuals of ``d Adot/dt = Addot`` and the witness ``max |k2 Addot - Adot|`` along geodesics.

    With ``flag_curvature = lam`` the residual ``max |Addot + lam A|`` is reported as well.
    """
    if k2 == 0:
        raise ValueError("k2 must be nonzero")
    x0, y0 = initial_conditions(spec, n_paths)
    frames = transport_batch(spec, x0, y0, default_frame(spec.dim), t_max, dt)
    series = [cartan_series(spec, f, stride) for f in frames]
    witness = max(amax(k2 * s.Addot - s.Adot) for s in series)
    cc = None
    if flag_curvature is not None:
        cc = max(amax(s.Addot + flag_curvature * s.A) for s in series)
    return GeodesicCartanReport(
        metric=spec.name, k2=float(k2), paths=n_paths, t_max=float(t_max),
        derivative_residual=max(s.eq_derivative_residual() for s in series),
        definition_residual=max(s.definition_residual() for s in series),
        witness=witness, landsberg_witness=bool(witness <= witness_tol),
        constant_curvature_residual=cc,
    )


@dataclass
class FlagSweep:
    metric: str
    values: np.ndarray

    @property
    def spread(self) -> float:
        return float(self.values.max() - self.values.min())

    def to_json(self) -> dict:
        return {"metric": self.metric, "flags": int(self.values.size),
                "min": float(self.values.min()), "max": float(self.values.max()),
                "spread": self.spread}


def flag_sweep(spec: MetricSpec, n_flags: int = 100, offset: int = DEFAULT_OFFSET) -> FlagSweep:
    """Flag curvature over ``n_flags`` sampled flags (transverse edge at least 30 degrees off)."""
    from .curvature import flag_curvature

    x, y = sample_points(spec, n_flags, offset)
    V = transverse_samples(y, offset)
    return FlagSweep(spec.name, np.asarray(flag_curvature(spec, (x, y), V)))
