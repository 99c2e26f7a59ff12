"""Acceptance criteria, one test and one PASS/FAIL line per criterion.

Lines are printed as each test runs (visible with ``-s``) and repeated in the
pytest terminal summary.
"""

import json
import subprocess
import sys

import numpy as np
import pytest

from finsler_lab import analysis, catalog, connections, geodesics, tensors
from finsler_lab.jets import EvalPoint, JetRequest, eval_jet, fd_jet, relative_gap

from conftest import ACCEPTANCE_LINES, FAMILY, LISTED, rel

N = 50
GRID = LISTED + ["randers-const"]
E = np.einsum


def report(n: int, title: str, passed: bool, detail: str) -> None:
    line = f"ACCEPTANCE {n:>2} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def identity_grid() -> dict:
    return {(name, k): analysis.verify_identities(catalog.get_metric(name), k, N)
            for name in GRID for k in FAMILY}


def grid_json(reports: dict) -> str:
    docs = [rep.to_json() for rep in reports.values()]
    docs += [analysis.classify(catalog.get_metric(name), N).to_json() for name in GRID]
    return json.dumps({"schema": analysis.SCHEMA, "reports": docs}, sort_keys=True, indent=2)


@pytest.fixture(scope="module")
def grid():
    return identity_grid()


def worst(grid, names):
    """Largest residual per identity over the grid, with where it happened."""
    out = {}
    for (metric, k), rep in grid.items():
        for name in names:
            row = rep.row(name)
            r = np.inf if row.residual is None else row.residual
            if name not in out or r > out[name][0]:
                out[name] = (r, metric, k, row.tol)
    return out


def test_1_jet_correctness():
    gaps = {3: 0.0, 4: 0.0}
    for name in LISTED:
        spec = catalog.get_metric(name)
        x, y = catalog.sample_points(spec, N)
        for a, b in zip(x, y):
            pt = EvalPoint(tuple(a), tuple(b))
            for req in (JetRequest(0, 4), JetRequest(1, 3), JetRequest(2, 2)):
                exact = eval_jet(spec.F2, pt, req).entries
                g = relative_gap(fd_jet(spec.F2, pt, req).entries, exact)
                gaps[3] = max([gaps[3]] + [v for o, v in g.items() if o <= 3])
                gaps[4] = max(gaps[4], g.get(4, 0.0))
    ok = gaps[3] <= 1e-5 and gaps[4] <= 1e-4
    report(1, "jet correctness", ok,
           f"max rel gap order<=3 {gaps[3]:.2e} (tol 1e-5), order 4 {gaps[4]:.2e} (tol 1e-4), "
           f"{len(LISTED)} metrics x {N} points")
    assert ok


def test_2_euler_and_homogeneity(grid):
    w = worst(grid, ["euler", "homogeneity"])
    ok = all(r <= 1e-9 for r, *_ in w.values())
    report(2, "euler/homogeneity", ok,
           ", ".join(f"{n} {r:.2e}" for n, (r, *_) in w.items()) + " (tol 1e-9)")
    assert ok


def test_3_torsion_free_and_almost_compatible():
    tors, comp = 0.0, 0.0
    for name in GRID:
        spec = catalog.get_metric(name)
        pt = catalog.sample_points(spec, N)
        for k in FAMILY:
            conn = connections.family(spec, pt, k)
            tors = max(tors, connections.torsion_defect(conn))
            comp = max(comp, *connections.compatibility_defect(conn))
    # torsion is symmetric to rounding: the stored Gamma is built symmetric
    ok = tors <= 1e-15 and comp <= 1e-7
    report(3, "torsion-free, almost compatible", ok,
           f"max torsion defect {tors:.1e}, max compatibility defect {comp:.2e} (tol 1e-7), "
           f"{len(GRID)} metrics x {len(FAMILY)} members x {N} samples")
    assert ok


CONVENTION = ["landsberg-from-cartan", "cartan-l-horizontal", "cartan-l-vertical",
              "cartan-vertical-symmetry"]


def test_4_convention_validators(grid):
    w = worst(grid, CONVENTION)
    ok = all(r <= 1e-7 for r, *_ in w.values())
    parts = [f"{n} {r:.2e}" + ("" if r <= 1e-7 else f" [worst {m}, k={list(k)}]")
             for n, (r, m, k, _) in w.items()]
    corrected = worst(grid, ["cartan-vertical-symmetry-corrected"])["cartan-vertical-symmetry-corrected"][0]
    report(4, "convention validators", ok,
           ", ".join(parts) + f" (tol 1e-7); with the l_l A_ijk - l_k A_ijl term restored {corrected:.2e}")
    assert ok, "A_ijk.l = A_ijl.k does not hold for the F-scaled vertical derivative; see README"


CURVATURE = ["R-antisymmetry", "first-bianchi", "P-symmetry", "hh-compatibility", "hv-compatibility",
             "P-formula", "P-n-slice", "P-njnl", "Q-vanishes"]


def test_5_curvature_identities(grid):
    w = worst(grid, CURVATURE)
    ok = all(r <= 1e-6 for r, *_ in w.values())
    report(5, "curvature identities", ok,
           f"max residual {max(r for r, *_ in w.values()):.2e} over {len(CURVATURE)} identities "
           f"(tol 1e-6); " + ", ".join(f"{n} {r:.1e}" for n, (r, *_) in w.items()))
    assert ok


def test_6_hv_curvature_iff_berwald():
    rows, ok = [], True
    for name, berwald in (("quartic", True), ("randers-const", True),
                          ("funk-ball", False), ("randers-nonconst", False)):
        spec = catalog.get_metric(name)
        for k in FAMILY:
            res = analysis.hv_berwald_check(spec, k, N)
            good = res.berwald == berwald and (res.max_P < res.threshold if berwald else res.max_P >= 1e-3)
            ok &= good and res.passed
        rows.append(f"{name} max|P| {'<' if berwald else '>='} "
                    f"{'threshold' if berwald else '1e-3'}")
    agree = {name: analysis.classify(catalog.get_metric(name), N).dual_agree for name in GRID}
    ok &= all(agree.values())
    report(6, "hv-curvature vanishes iff Berwald", ok,
           "; ".join(rows) + f" for every k; dual criteria agree on {sum(agree.values())}/{len(agree)}")
    assert ok


def test_7_cross_construction():
    berw, land = 0.0, 0.0
    for name in GRID:
        spec = catalog.get_metric(name)
        pt = catalog.sample_points(spec, N)
        b = connections.berwald(spec, pt)
        berw = max(berw, rel(b.Gamma, b.berwald_oracle))
        d = tensors.adot_iterated(spec, pt, 1)
        g_inv = tensors.metric_data(spec, pt).g_inv
        land = max(land, rel(E("...is,...sjk->...ijk", g_inv, d.Adot_m[0]), d.L))
    ok = berw <= 1e-6 and land <= 1e-6
    report(7, "cross-construction oracles", ok,
           f"Berwald member vs d2G/dydy rel {berw:.2e}, raised Adot vs L rel {land:.2e} (tol 1e-6)")
    assert ok


def test_8_constant_flag_curvature():
    sphere = analysis.flag_sweep(catalog.get_metric("riemannian-sphere"), 100)
    funk = analysis.flag_sweep(catalog.get_metric("funk-ball"), 100)
    es = float(np.max(np.abs(sphere.values - 1.0)))
    ef = float(np.max(np.abs(funk.values + 0.25)))
    ok = es <= 1e-6 and ef <= 1e-5 and funk.spread < 1e-5
    report(8, "constant flag curvature", ok,
           f"sphere |K-1| {es:.1e} (tol 1e-6), funk |K+0.25| {ef:.1e} (tol 1e-5), "
           f"funk spread {funk.spread:.1e} (tol 1e-5), 100 flags each")
    assert ok


def test_9_geodesic_integrity():
    drift, resid, exited = 0.0, 0.0, 0
    witness = {}
    for name in LISTED:
        spec = catalog.get_metric(name)
        x0, y0 = geodesics.initial_conditions(spec, 10)
        paths = geodesics.integrate_geodesics(spec, x0, y0, 10.0)
        drift = max(drift, max(p.speed_drift for p in paths))
        exited += sum(p.exited for p in paths)
        along = analysis.cartan_along_geodesics(spec, k2=1.0, n_paths=10, t_max=1.0)
        resid = max(resid, along.derivative_residual)
        witness[name] = along.witness
    ok = (drift <= 1e-6 and exited == 0 and resid <= 1e-4
          and witness["quartic"] <= 1e-7 and witness["funk-ball"] >= 1e-3)
    report(9, "geodesic integrity", ok,
           f"max |F-1| drift on [0,10] {drift:.1e} (tol 1e-6, {exited} early exits), "
           f"|dAdot/dt - Addot| {resid:.1e} (tol 1e-4) over 10 geodesics per metric, "
           f"witness |k2 Addot - Adot| quartic {witness['quartic']:.1e} (<= 1e-7), "
           f"funk {witness['funk-ball']:.2e} (>= 1e-3)")
    assert ok


def test_10_determinism(grid):
    first = grid_json(grid)
    second = grid_json(identity_grid())
    cmd = [sys.executable, "-m", "finsler_lab", "verify", "--metric", "all", "--k", "0.3,-0.2",
           "--samples", str(N)]
    cli = [subprocess.run(cmd, capture_output=True).stdout for _ in range(2)]
    ok = first == second and cli[0] == cli[1] and len(cli[0]) > 0
    report(10, "determinism", ok,
           f"library report {len(first)} bytes identical: {first == second}; "
           f"CLI verify report {len(cli[0])} bytes identical: {cli[0] == cli[1]}")
    assert ok
