"""Command-line front end.

Exit codes: 0 all checks pass, 1 a verification failed, 2 usage error,
3 domain error.  JSON output carries ``"schema": "finsler-lab/1"`` and is
byte-identical across runs for identical inputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import analysis, catalog, connections, curvature, geodesics
from .analysis import SCHEMA
from .connections import FamilyParams
from .errors import DomainError, FinslerError

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_DOMAIN = 0, 1, 2, 3
TENSOR_CHOICES = ("F", "g", "A", "Gamma", "N", "G", "R", "P", "flag")


class UsageError(Exception):
    pass


def dump(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=True)


def floats(text: str, what: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"{what} must be a comma-separated list of reals, got {text!r}") from None


def metric_arg(name: str) -> catalog.MetricSpec:
    try:
        return catalog.resolve(name)
    except (KeyError, FileNotFoundError, ValueError) as exc:
        raise UsageError(f"unknown metric {name!r} (known: {', '.join(catalog.known_names())})") from exc


def metrics_arg(name: str) -> list[catalog.MetricSpec]:
    if name == "all":
        return catalog.list_catalog()
    return [metric_arg(name)]


def k_arg(text: str | None) -> FamilyParams:
    if text is None:
        return FamilyParams()
    try:
        return FamilyParams.parse(text)
    except ValueError as exc:
        raise UsageError(f"bad --k value {text!r}: {exc}") from None


def emit(text: str, out: str | None = None) -> None:
    if out:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_catalog(args) -> int:
    listing = catalog.catalog_listing()
    if args.json:
        emit(dump(listing))
    else:
        for entry in listing:
            lab = entry["labels"]
            tags = [k for k in ("riemannian", "berwald", "landsberg") if lab[k]]
            emit(f"{entry['name']:<20} {entry['kind']:<28} {json.dumps(entry['params'], sort_keys=True)}"
                 f"  [{', '.join(tags) or 'general'}]")
    return EXIT_OK


def cmd_validate(args) -> int:
    rc = EXIT_OK
    docs = []
    for spec in metrics_arg(args.metric):
        rep = catalog.validate(spec, args.samples)
        docs.append(rep.to_json())
        rc = rc if rep.verdict else EXIT_FAIL
    emit(dump({"schema": SCHEMA, "reports": docs}))
    return rc


def _default_edge(y: np.ndarray) -> np.ndarray:
    if len(y) == 2:
        return np.array([-y[1], y[0]])
    v = np.zeros_like(y)
    v[int(np.argmin(np.abs(y)))] = 1.0
    return v


def eval_tensors(spec, x, y, names: Sequence[str], params: FamilyParams, edge=None) -> dict:
    """Library-level evaluation used by ``eval``; returns plain lists."""
    pt = (np.asarray(x, float), np.asarray(y, float))
    out: dict = {}
    conn = connections.family(spec, pt, params)
    lj = conn.jets
    u = conn.unbatch
    for name in names:
        if name == "F":
            out[name] = float(u(lj.F.value))
        elif name == "g":
            out[name] = u(lj.g.value).tolist()
        elif name == "A":
            out[name] = u(lj.A.value).tolist()
        elif name == "Gamma":
            out[name] = conn.Gamma.tolist()
        elif name == "N":
            out[name] = conn.N.tolist()
        elif name == "G":
            out[name] = u(lj.G.value).tolist()
        elif name == "R":
            out[name] = curvature.hh_curvature(conn).tolist()
        elif name == "P":
            out[name] = curvature.hv_curvature(conn).tolist()
        elif name == "flag":
            V = np.asarray(edge, float) if edge is not None else _default_edge(pt[1])
            out[name] = {"V": V.tolist(), "K": curvature.flag_curvature(spec, pt, V)}
    return out


def cmd_eval(args) -> int:
    spec = metric_arg(args.metric)
    pt = floats(args.point, "--point")
    if len(pt) != 2 * spec.dim:
        raise UsageError(f"--point needs {2 * spec.dim} reals (x then y) for {spec.name}, got {len(pt)}")
    names = [t.strip() for t in args.tensors.split(",") if t.strip()]
    bad = [t for t in names if t not in TENSOR_CHOICES]
    if bad:
        raise UsageError(f"unknown tensor(s) {bad}; choose from {', '.join(TENSOR_CHOICES)}")
    x, y = pt[:spec.dim], pt[spec.dim:]
    catalog.check_input_point(spec, x)
    edge = floats(args.edge, "--edge") if args.edge else None
    params = k_arg(args.k)
    doc = {
        "schema": SCHEMA, "metric": spec.name, "k": params.to_json(),
        "point": {"x": x, "y": y},
        "tensors": eval_tensors(spec, x, y, names, params, edge),
    }
    emit(dump(doc), args.out)
    return EXIT_OK


def cmd_classify(args) -> int:
    docs, rc = [], EXIT_OK
    for spec in metrics_arg(args.metric):
        rep = analysis.classify(spec, args.samples)
        docs.append(rep.to_json())
        if not rep.consistent or rep.agreement is False:
            rc = EXIT_FAIL
    doc = dict(docs[0], schema=SCHEMA) if len(docs) == 1 else {"schema": SCHEMA, "reports": docs}
    emit(dump(doc), args.out)
    return rc


def cmd_verify(args) -> int:
    params = k_arg(args.k)
    docs, failures = [], []
    for spec in metrics_arg(args.metric):
        rep = analysis.verify_identities(spec, params, args.samples)
        docs.append(rep.to_json())
        failures += [{"metric": spec.name, "identity": r.identity, "status": r.status}
                     for r in rep.failures()]
    if len(docs) == 1:
        doc = dict(docs[0], schema=SCHEMA, failures=failures)
    else:
        doc = {"schema": SCHEMA, "reports": docs, "failures": failures}
    emit(dump(doc), args.out)
    return EXIT_FAIL if failures else EXIT_OK


def cmd_flag(args) -> int:
    docs = [analysis.flag_sweep(spec, args.samples).to_json() for spec in metrics_arg(args.metric)]
    emit(dump({"schema": SCHEMA, "reports": docs}), args.out)
    return EXIT_OK


def cmd_geodesic(args) -> int:
    spec = metric_arg(args.metric)
    x0 = floats(args.x0, "--x0")
    y0 = floats(args.y0, "--y0")
    if len(x0) != spec.dim or len(y0) != spec.dim:
        raise UsageError(f"--x0 and --y0 need {spec.dim} reals each for {spec.name}")
    if args.dt <= 0 or args.tmax <= 0:
        raise UsageError("--dt and --tmax must be positive")
    catalog.check_input_point(spec, x0)
    spec.check_domain(x0, y0)
    y0n = geodesics.normalize(spec, x0, y0)
    path = geodesics.integrate_geodesic(spec, x0, y0n, args.tmax, args.dt)
    fmt = args.format or (Path(args.out).suffix.lstrip(".") if args.out else "json")
    if fmt not in ("csv", "json"):
        raise UsageError(f"unsupported output format {fmt!r} (csv or json)")
    summary = {
        "schema": SCHEMA, "metric": spec.name, "x0": x0, "y0": y0n.tolist(),
        "t_end": float(path.times[-1]), "steps": len(path.times) - 1, "exited": path.exited,
        "speed_drift": path.speed_drift, "drift_tol": args.drift_tol,
    }
    if args.out:
        Path(args.out).write_text(path.to_csv() if fmt == "csv" else dump(dict(path.to_json(), schema=SCHEMA)) + "\n")
        emit(dump(summary))
    elif fmt == "csv":
        emit(path.to_csv())
    else:
        emit(dump(dict(path.to_json(), schema=SCHEMA, drift_tol=args.drift_tol)))
    return EXIT_OK if path.speed_drift <= args.drift_tol else EXIT_FAIL


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="finsler-lab", description="Finsler geometry engine")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("catalog", help="list the metric catalog")
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_catalog)

    v = sub.add_parser("validate", help="check positivity and strong convexity on samples")
    v.add_argument("--metric", required=True, help="catalog name, spec JSON path, or 'all'")
    v.add_argument("--samples", type=int, default=100)
    v.set_defaults(func=cmd_validate)

    e = sub.add_parser("eval", help="evaluate tensors at one point")
    e.add_argument("--metric", required=True)
    e.add_argument("--point", required=True, help="x1,...,xn,y1,...,yn")
    e.add_argument("--tensors", default="g", help=f"comma list from {','.join(TENSOR_CHOICES)}")
    e.add_argument("--k", default=None, help="family weights, e.g. 0.3,-0.2 (empty: chern)")
    e.add_argument("--edge", default=None, help="transverse edge V for 'flag'")
    e.add_argument("--out", default=None)
    e.set_defaults(func=cmd_eval)

    cl = sub.add_parser("classify", help="Riemannian / Berwald / Landsberg verdicts")
    cl.add_argument("--metric", required=True)
    cl.add_argument("--samples", type=int, default=50)
    cl.add_argument("--out", default=None)
    cl.set_defaults(func=cmd_classify)

    ve = sub.add_parser("verify", help="run the identity suite")
    ve.add_argument("--metric", required=True)
    ve.add_argument("--k", default=None)
    ve.add_argument("--samples", type=int, default=50)
    ve.add_argument("--out", default=None)
    ve.set_defaults(func=cmd_verify)

    f = sub.add_parser("flag", help="flag curvature sweep")
    f.add_argument("--metric", required=True)
    f.add_argument("--samples", type=int, default=100)
    f.add_argument("--out", default=None)
    f.set_defaults(func=cmd_flag)

    g = sub.add_parser("geodesic", help="integrate one unit-speed geodesic")
    g.add_argument("--metric", required=True)
    g.add_argument("--x0", required=True)
    g.add_argument("--y0", required=True, help="initial direction; rescaled to F = 1")
    g.add_argument("--tmax", type=float, default=1.0)
    g.add_argument("--dt", type=float, default=geodesics.DEFAULT_DT)
    g.add_argument("--drift-tol", type=float, default=1e-6)
    g.add_argument("--format", choices=("csv", "json"), default=None)
    g.add_argument("--out", default=None)
    g.set_defaults(func=cmd_geodesic)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "samples", 1) is not None and getattr(args, "samples", 1) < 1:
        parser.error("--samples must be at least 1")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"finsler-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"finsler-lab: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except FinslerError as exc:
        print(f"finsler-lab: computation failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
