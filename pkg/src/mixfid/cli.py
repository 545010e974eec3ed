"""Command-line frontend.

Every command prints (or writes with ``--out``) a JSON document carrying
``{"version", "seed", "config"}`` alongside its results. Randomized commands
take ``--seed``; without one a seed is generated, printed to stderr and
recorded. Exit status is 0 when every asserted check passes, 1 when a check
fails, 2 for usage errors, and the exception's ``exit_code`` (10 and up) for
library errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import secrets
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .ensembles import diagonal_qutrit_pair, scatter_study, write_scatter_csv
from .errors import FidelityError
from .io import fmt_number, jsonable, load_density
from .measures import CORE_MEASURES, MeasureId, evaluate, fq

CHECK_FAILED = 1


def _num(x: float) -> float:
    # round to the printed precision so JSON shows what the text output shows
    return float(fmt_number(x))


def _measures(text: str | None, default=CORE_MEASURES) -> list:
    if not text:
        return list(default)
    return [MeasureId.parse(t.strip()) for t in text.split(",") if t.strip()]


def _dims(text: str | None, default) -> list:
    if not text:
        return list(default)
    return [int(t) for t in str(text).split(",") if t.strip()]


def _seed(args) -> int:
    if args.seed is None:
        args.seed = secrets.randbits(32)
        print(f"seed: {args.seed}", file=sys.stderr)
    return args.seed


def _config(args) -> dict:
    skip = {"func", "seed"}
    return {k: jsonable(v) for k, v in vars(args).items() if k not in skip}


def _emit(args, payload: dict) -> None:
    doc = {"version": __version__, "seed": getattr(args, "seed", None), "config": _config(args)}
    doc.update(payload)
    text = json.dumps(jsonable(doc), indent=2, sort_keys=False) + "\n"
    if args.out and args.format == "json":
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_rows(args, rows: list, columns: list, payload: dict) -> None:
    """Rows as CSV or an aligned table; everything else as JSON."""
    if args.format == "json":
        _emit(args, payload)
        return
    buf = io.StringIO()
    if args.format == "csv":
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([fmt_number(r[c]) if isinstance(r.get(c), float) else r.get(c, "") for c in columns])
    else:
        cells = [[fmt_number(r[c]) if isinstance(r.get(c), float) else str(r.get(c, "")) for c in columns] for r in rows]
        widths = [max(len(c), *(len(row[i]) for row in cells)) if cells else len(c) for i, c in enumerate(columns)]
        buf.write("  ".join(c.ljust(w) for c, w in zip(columns, widths)).rstrip() + "\n")
        for row in cells:
            buf.write("  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip() + "\n")
    if args.out:
        Path(args.out).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


# ---------------------------------------------------------------- commands


def cmd_compare(args) -> int:
    tol = args.tol if args.tol is not None else 1e-10
    rho = load_density(args.rho, tol=tol)
    sigma = load_density(args.sigma, tol=tol)
    rows = []
    values = {}
    for m in _measures(args.measures):
        row = {"measure": m.label}
        if m.kind == "FQ":
            res = fq(rho, sigma)
            row["value"] = float(res.value)
            row["minimizer_s"] = float(res.minimizer_s)
        else:
            row["value"] = float(evaluate(m, rho, sigma))
        values[m.label] = row["value"]
        rows.append(row)
    checks = []
    if rho.dim == 2 and "F1" in values and "FN" in values:
        gap = abs(values["F1"] - values["FN"])
        checks.append({"check": "qubit F1 == FN", "gap": gap, "ok": gap <= 1e-9})
    ok = all(c["ok"] for c in checks)
    payload = {
        "dim": rho.dim,
        "results": [{k: (_num(v) if isinstance(v, float) else v) for k, v in r.items()} for r in rows],
        "checks": checks,
        "ok": ok,
    }
    _emit_rows(args, rows, ["measure", "value", "minimizer_s"], payload)
    return 0 if ok else CHECK_FAILED


def cmd_scatter(args) -> int:
    seed = _seed(args)
    dims = _dims(args.dim, (3,))
    measures = _measures(args.measures, default=(MeasureId("F1"), MeasureId("F2")))
    labels = [m.label for m in measures]
    records, per_dim = [], {}
    for d in dims:
        recs = scatter_study(d, args.n, measures, seed=seed, rank=args.rank, workers=args.workers)
        records.extend(recs)
        summary = {}
        for lab in labels:
            vals = np.array([r.values[lab] for r in recs])
            summary[lab] = {"mean": _num(vals.mean()), "min": _num(vals.min()), "max": _num(vals.max())}
        if "F1" in labels and "F2" in labels:
            f1v = np.array([r.values["F1"] for r in recs])
            f2v = np.array([r.values["F2"] for r in recs])
            summary["fraction_F1_above_F2"] = _num(np.mean(f1v > f2v))
            summary["fraction_F1_below_F2"] = _num(np.mean(f1v < f2v))
        per_dim[str(d)] = {"n_pairs": len(recs), "summary": summary}
    if args.out:
        with open(args.out, "w", newline="") as fh:
            write_scatter_csv(records, fh)
    if args.format == "csv" and not args.out:
        write_scatter_csv(records, sys.stdout)
        return 0
    doc = {"version": __version__, "seed": seed, "config": _config(args), "dims": per_dim}
    if args.out:
        doc["csv"] = str(args.out)
    sys.stdout.write(json.dumps(jsonable(doc), indent=2) + "\n")
    return 0


def _expected_axioms(m: MeasureId):
    from .relations import AXIOM_TABLE
    from .relations.tables import _ALL_HOLD

    if m.label in AXIOM_TABLE:
        return AXIOM_TABLE[m.label]
    if m.kind in ("FP", "F2P"):
        return _ALL_HOLD
    return None


def cmd_axioms(args) -> int:
    from .relations import check_axioms

    seed = _seed(args)
    dims = _dims(args.dim, (2, 3, 4))
    results, ok = [], True
    for m in _measures(args.measures):
        expected = _expected_axioms(m)
        for rep in check_axioms(m, dims, args.n, seed):
            entry = rep.to_dict()
            entry["margin"] = _num(rep.margin)
            if expected is not None:
                want = expected[rep.property]
                got = "violated" if not rep.holds else "holds"
                entry["expected"] = want
                entry["ok"] = want == got
                ok &= entry["ok"]
            results.append(entry)
    payload = {"dims": dims, "n_samples": args.n, "results": results, "ok": ok}
    _emit_rows(args, results, ["measure", "property", "verdict", "margin", "expected", "ok"], payload)
    return 0 if ok else CHECK_FAILED


def cmd_counterexamples(args) -> int:
    from .relations import evaluate_registry, load_registry

    reg = load_registry(args.registry)
    results = evaluate_registry(reg)
    ok = all(r.ok for r in results)
    payload = {"registry": args.registry or "shipped", "results": [r.to_dict() for r in results], "ok": ok}
    rows = [
        {"name": r["name"], "property": r["property"], "measure": m, "margin": float(v), "ok": r["ok"]}
        for r in payload["results"]
        for m, v in r["margins"].items()
    ]
    _emit_rows(args, rows, ["name", "property", "measure", "margin", "ok"], payload)
    return 0 if ok else CHECK_FAILED


def cmd_bounds(args) -> int:
    from .relations import sample_bounds

    seed = _seed(args)
    tol = args.tol if args.tol is not None else 1e-9
    dims = _dims(args.dim, (2, 3, 10))
    slacks = sample_bounds(dims, args.n, seed)
    ok = all(v >= -tol for per_dim in slacks.values() for v in per_dim.values())
    out = {str(d): {k: _num(v) for k, v in per.items()} for d, per in slacks.items()}
    _emit(args, {"dims": dims, "n_samples": args.n, "min_slack": out, "tolerance": tol, "ok": ok})
    return 0 if ok else CHECK_FAILED


def cmd_scenario(args) -> int:
    from .scenarios import load_alphabet, mixed_vs_average

    a = load_alphabet(args.alphabet)
    tol = args.tol if args.tol is not None else 1e-10
    results, ok = [], True
    for m in _measures(args.measures):
        avg, mixed, diff = mixed_vs_average(m, a)
        row = {"measure": m.label, "average": _num(avg), "mixed": _num(mixed), "difference": _num(diff)}
        if a.orthogonal and m.kind in ("F1", "FQ", "FA"):
            row["ok"] = abs(diff) <= tol
            ok &= row["ok"]
        results.append(row)
    payload = {"epsilon": a.epsilon, "orthogonal": a.orthogonal, "results": results, "ok": ok}
    _emit_rows(args, results, ["measure", "average", "mixed", "difference", "ok"], payload)
    return 0 if ok else CHECK_FAILED


def cmd_phasespace(args) -> int:
    from . import phasespace as ps
    from .io import read_json

    seed = _seed(args)
    obj = read_json(args.spec)
    rho = ps.spec_from_json(obj["rho"])
    sigma = ps.spec_from_json(obj.get("sigma", obj["rho"]))
    reps = obj.get("representation", "wigner")
    reps = ["wigner", "posp"] if reps == "both" else [reps]
    quantity = obj.get("quantity", "overlap")
    reports = []
    for k, rep in enumerate(reps):
        if quantity == "f2":
            est, se = ps.f2_phasespace(rho, sigma, args.n, seed, representation=rep)
            try:
                exact = ps.analytic_overlap(rho, sigma) / ps.purity(rho)
            except FidelityError:
                exact = None
        else:
            if rep == "wigner":
                batch = ps.sample_wigner(sigma, args.n, seed, key=(1,))
                est, se = ps.sampled_tr_wigner(rho, batch)
            else:
                n = min(args.n, ps.MAX_POSP_SAMPLES)
                batch = ps.sample_posp(sigma, n, seed, key=(1,))
                est, se = ps.sampled_tr_posp(ps.sample_posp(rho, n, seed, key=(0,)), batch)
            if args.out and args.format == "csv":
                path = Path(args.out) if len(reps) == 1 else Path(args.out).with_suffix(f".{rep}.csv")
                ps.write_batch_csv(batch, path)
            try:
                exact = ps.analytic_overlap(rho, sigma)
            except FidelityError:
                exact = None
        r = ps.estimator_report(est, se, args.n if rep == "wigner" else min(args.n, ps.MAX_POSP_SAMPLES), seed, rep)
        r["quantity"] = quantity
        if exact is not None:
            r["analytic"] = exact
            r["z"] = (est - exact) / se if se > 0 else (0.0 if abs(est - exact) < 1e-12 else float("inf"))
        reports.append(r)
    if args.format == "table":
        cols = ["representation", "quantity", "estimate", "std_error", "analytic", "z", "n_samples"]
        _emit_rows(args, reports, cols, {})
        return 0
    doc = {"version": __version__, "seed": seed, "config": _config(args), "reports": reports}
    sys.stdout.write(json.dumps(jsonable(doc), indent=2) + "\n")
    return 0


def cmd_falsify(args) -> int:
    from .relations import WitnessStore, falsify

    seed = _seed(args)
    store = WitnessStore(args.store) if args.store else None
    cx = falsify(
        args.property,
        args.measure,
        _dims(args.dim, (2, 3)),
        budget=args.n,
        seed=seed,
        functional=args.functional,
        setting=args.setting,
        workers=args.workers,
        store=store,
    )
    payload = {"found": cx is not None}
    if cx is not None:
        payload["margin"] = _num(cx.margin())
        payload["witness"] = cx.to_json()
    _emit(args, payload)
    return 0


def cmd_tables(args) -> int:
    from .relations import TABLES

    seed = _seed(args)
    names = list(TABLES) if args.table == "all" else [args.table]
    cells, ok = [], True
    for name in names:
        kw = {"n_samples": args.n, "seed": seed}
        if name != "axioms":
            kw["search_budget"] = args.budget
        for c in TABLES[name](**kw):
            cells.append(c.to_dict())
            ok &= c.ok
            if args.verbose:
                print(c.line(), file=sys.stderr)
    cols = ["table", "measure", "column", "expected", "observed", "ok", "margin", "n_checked"]
    _emit_rows(args, cells, cols, {"cells": cells, "ok": ok})
    return 0 if ok else CHECK_FAILED


def cmd_qutrit_family(args) -> int:
    rows = []
    for p in np.linspace(0.0, 1.0, args.points):
        rho, sigma = diagonal_qutrit_pair(float(p))
        row = {"p": float(p)}
        for m in _measures(args.measures):
            row[m.label] = float(evaluate(m, rho, sigma))
        rows.append(row)
    cols = ["p"] + [m.label for m in _measures(args.measures)]
    _emit_rows(args, rows, cols, {"results": [{k: _num(v) for k, v in r.items()} for r in rows]})
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="RNG seed (generated and printed if omitted)")
    common.add_argument("--dim", default=None, help="dimension, or comma list of dimensions")
    common.add_argument("--n", type=int, default=10000, help="samples per dimension (default 10000)")
    common.add_argument("--tol", type=float, default=None, help="tolerance override")
    common.add_argument("--out", default=None, help="output file (default stdout)")
    common.add_argument("--format", choices=["json", "csv", "table"], default="json")
    common.add_argument("--measures", default=None, help="comma list, e.g. F1,F2,FP:1.5,FF:HM")

    parser = argparse.ArgumentParser(prog="mixfid", description="Mixed-state fidelity measures and their properties.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compare", parents=[common], help="evaluate measures on two matrix JSON files")
    p.add_argument("rho")
    p.add_argument("sigma")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("scatter", parents=[common], help="measures on random Ginibre pairs")
    p.add_argument("--rank", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_scatter)

    p = sub.add_parser("axioms", parents=[common], help="sampled axiom checks per measure")
    p.set_defaults(func=cmd_axioms)

    p = sub.add_parser("counterexamples", parents=[common], help="re-evaluate a counterexample registry")
    p.add_argument("--registry", default=None, help="registry JSON (default: the shipped one)")
    p.set_defaults(func=cmd_counterexamples)

    p = sub.add_parser("bounds", parents=[common], help="minimum slack of the bound chain on random pairs")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("scenario", parents=[common], help="average vs mixed fidelity for an alphabet JSON")
    p.add_argument("alphabet")
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("phasespace", parents=[common], help="Monte Carlo overlap or F2 from a state-spec JSON")
    p.add_argument("spec")
    p.set_defaults(func=cmd_phasespace)

    p = sub.add_parser("falsify", parents=[common], help="search for a counterexample")
    p.add_argument("property")
    p.add_argument("measure")
    p.add_argument("--functional", default=None, help="A, B, B2 or C for triangle checks")
    p.add_argument("--setting", default="general", choices=["ancilla", "power", "general"])
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--store", default=None, help="append found witnesses to this JSONL file")
    p.set_defaults(func=cmd_falsify)

    p = sub.add_parser("tables", parents=[common], help="reproduce the property status tables")
    p.add_argument("table", choices=["axioms", "concavity", "multiplicativity", "monotonicity", "metric", "all"])
    p.add_argument("--budget", type=int, default=4000, help="search budget for open or unwitnessed cells")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("qutrit-family", parents=[common], help="measures along the diagonal qutrit family")
    p.add_argument("--points", type=int, default=11)
    p.set_defaults(func=cmd_qutrit_family)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FidelityError as exc:
        report = {"error": type(exc).__name__, "message": str(exc), "exit_code": exc.exit_code}
        print(json.dumps(report), file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
