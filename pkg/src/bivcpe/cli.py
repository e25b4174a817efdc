"""Command-line front end.

    bivcpe eval  --model triangle --measure bivariate_cpe
    bivcpe scan  --model extreme_value_b --measure cdcpe_interval --grid 9 --out evb.csv
    bivcpe check --all
    bivcpe order --model reciprocal_f --model2 reciprocal_g --also-usual-st

Exit codes: 0 success, 1 a check failed, 2 bad configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import __version__
from .distributions import BivariateModel, EvalPoint, catalogue, model_from_spec
from .measures import MEASURES, NEEDS_COMPONENT, NEEDS_POINT, MeasureReport, evaluate
from .numerics import DEFAULT_TOL, QuadratureError, Tolerances
from .reliability import EmptyConditioningError

log = logging.getLogger("bivcpe")

SCHEMA = 1
EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
SCAN_HEADER = ("t1", "t2", "measure", "i", "value", "est_error")


class ConfigError(Exception):
    pass


def fmt(x) -> str:
    return f"{float(x):.9g}"


def fmt_err(x) -> str:
    return f"{float(x):.2g}"


# -- argument handling -------------------------------------------------------

def _tolerances(args) -> Tolerances:
    abs_tol = DEFAULT_TOL.abs_tol if args.tol_abs is None else args.tol_abs
    rel_tol = DEFAULT_TOL.rel_tol if args.tol_rel is None else args.tol_rel
    try:
        return Tolerances(abs_tol, rel_tol, DEFAULT_TOL.max_depth, DEFAULT_TOL.fd_step_scale)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _load_model(spec) -> BivariateModel:
    try:
        return model_from_spec(spec)
    except (ValueError, KeyError, TypeError, OSError) as exc:
        raise ConfigError(f"bad model spec {spec!r}: {exc}") from exc


def _check_measures(names: Sequence[str]) -> List[str]:
    bad = [n for n in names if n not in MEASURES]
    if bad:
        raise ConfigError(f"unknown measure(s) {bad}; known: {', '.join(sorted(MEASURES))}")
    return list(names)


def _components(name: str, i: Optional[int]) -> List[Optional[int]]:
    if name not in NEEDS_COMPONENT:
        return [None]
    return [1, 2] if i is None else [i]


def _write_text(text: str, out: Optional[str]):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)
        log.info("wrote %s", out)


def _json(payload) -> str:
    return json.dumps({"schema": SCHEMA, **payload}, indent=2, sort_keys=False) + "\n"


def _point_dict(p: Optional[EvalPoint]):
    return None if p is None else {"t1": p.t1, "t2": p.t2}


# -- eval --------------------------------------------------------------------

def _report_row(rep: MeasureReport) -> dict:
    return {
        "measure": rep.measure,
        "i": rep.i,
        "at": _point_dict(rep.at),
        "value": rep.value,
        "est_error": rep.est_error,
        "closed_form": rep.used_closed_form,
        **({"meta": rep.meta} if rep.meta else {}),
    }


def cmd_eval(args) -> int:
    model = _load_model(args.model)
    tol = _tolerances(args)
    names = _check_measures(args.measure or ["bivariate_cpe"])
    at = None
    if args.t1 is not None or args.t2 is not None:
        if args.t1 is None or args.t2 is None:
            raise ConfigError("--t1 and --t2 must be given together")
        try:
            at = model.check_point((args.t1, args.t2))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    reports = []
    for name in names:
        if name in NEEDS_POINT and at is None:
            raise ConfigError(f"measure {name!r} needs --t1 and --t2")
        for i in _components(name, args.i):
            reports.append(evaluate(name, model, at, i, tol))

    lines = [f"model: {model.name}"]
    width = max(len(r.measure) for r in reports)
    for r in reports:
        where = "" if r.at is None else f"  at ({fmt(r.at.t1)}, {fmt(r.at.t2)})"
        comp = "" if r.i is None else f"  i={r.i}"
        tag = "  [closed form]" if r.used_closed_form else ""
        lines.append(f"{r.measure:<{width}}{comp}{where}  {fmt(r.value)} ± {fmt_err(r.est_error)}{tag}")
    sys.stdout.write("\n".join(lines) + "\n")
    if args.out:
        _write_text(_json({"command": "eval", "model": model.name,
                           "reports": [_report_row(r) for r in reports]}), args.out)
    return EXIT_OK


# -- scan --------------------------------------------------------------------

def _axis(model: BivariateModel, k: int, n: int, rng) -> np.ndarray:
    if rng is not None:
        lo, hi = rng
    else:
        start = model.mass_lower[k]
        lo = start + 0.1 * (model.b[k] - start)
        hi = start + 0.9 * (model.b[k] - start)
    if not lo < hi:
        raise ConfigError(f"empty range [{lo}, {hi}] on axis {k + 1}")
    return np.linspace(lo, hi, n)


def scan_rows(model: BivariateModel, measures: Sequence[str], t1s, t2s, i=None,
              tol: Tolerances = DEFAULT_TOL, model2: Optional[BivariateModel] = None,
              minus: Optional[str] = None):
    """Rows ``(t1, t2, label, i, value, est_error)`` in t1-major order.

    With ``model2`` each value is ``measure(model) - measure(model2)``; with
    ``minus`` it is ``measure - minus`` on the same model. Error estimates add.
    """
    rows = []
    for t1 in t1s:
        for t2 in t2s:
            at = (float(t1), float(t2))
            for name in measures:
                for c in _components(name, i):
                    rep = evaluate(name, model, at, c, tol)
                    value, err, label = rep.value, rep.est_error, name
                    if model2 is not None:
                        other = evaluate(name, model2, at, c, tol)
                        value, err = value - other.value, err + other.est_error
                    if minus is not None:
                        other = evaluate(minus, model, at, c, tol)
                        value, err = value - other.value, err + other.est_error
                        label = f"{name}-{minus}"
                    rows.append((at[0], at[1], label, "" if c is None else c, value, err))
    return rows


def cmd_scan(args) -> int:
    model = _load_model(args.model)
    model2 = _load_model(args.model2) if args.model2 else None
    tol = _tolerances(args)
    names = _check_measures(args.measure or ["cdcpe_interval"])
    if args.minus:
        _check_measures([args.minus])
    n1 = args.grid1 or args.grid
    n2 = args.grid2 or args.grid
    if n1 < 2 or n2 < 2:
        raise ConfigError("scan grids need at least 2 points per axis")
    base = model if model2 is None else _overlap(model, model2)
    t1s = _axis(base, 0, n1, args.t1_range)
    t2s = _axis(base, 1, n2, args.t2_range)
    for t1 in t1s:
        for t2 in t2s:
            for m in (model, model2):
                if m is not None:
                    try:
                        m.check_point((t1, t2))
                    except ValueError as exc:
                        raise ConfigError(str(exc)) from exc
    rows = scan_rows(model, names, t1s, t2s, args.i, tol, model2, args.minus)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SCAN_HEADER)
    for t1, t2, label, c, value, err in rows:
        w.writerow((fmt(t1), fmt(t2), label, c, fmt(value), fmt_err(err)))
    _write_text(buf.getvalue(), args.out)
    return EXIT_OK


class _Box:
    """Stand-in carrying only the support extent, for building scan axes."""

    def __init__(self, lower, upper):
        self.mass_lower = lower
        self.b = upper


def _overlap(x: BivariateModel, y: BivariateModel) -> _Box:
    lo = tuple(max(x.mass_lower[k], y.mass_lower[k]) for k in (0, 1))
    hi = tuple(min(x.b[k], y.b[k]) for k in (0, 1))
    if hi[0] <= lo[0] or hi[1] <= lo[1]:
        raise ConfigError(f"supports of {x.name} and {y.name} do not overlap")
    return _Box(lo, hi)


# -- check -------------------------------------------------------------------

def cmd_check(args) -> int:
    from .theorems import CHECKS, run_suite

    if args.all:
        ids = list(CHECKS)
    elif args.id:
        ids = args.id
    else:
        raise ConfigError("give --id <check> (repeatable) or --all")
    unknown = [c for c in ids if c not in CHECKS]
    if unknown:
        raise ConfigError(f"unknown check id(s) {unknown}; known: {', '.join(CHECKS)}")
    if args.model:
        models = {}
        for spec in args.model:
            m = _load_model(spec)
            models[m.name] = m
    else:
        models = catalogue()
    results = run_suite(models, ids)

    w_id = max(len(r.check_id) for r in results)
    w_m = max(len(r.model_name) for r in results)
    lines = []
    for r in results:
        worst = "-" if r.status == "skipped" and r.n_points == 0 else fmt_err(r.worst_violation)
        line = (f"{r.status.upper():<7} {r.check_id:<{w_id}}  {r.model_name:<{w_m}}  "
                f"worst={worst:<9} tol={fmt_err(r.tolerance_used):<7} n={r.n_points}")
        if r.values:
            shown = ", ".join(f"{k}={fmt(v) if isinstance(v, float) else v}"
                              for k, v in r.values.items()
                              if isinstance(v, (int, float, str, bool)))
            if shown:
                line += f"  [{shown}]"
        if r.detail:
            line += f"  {r.detail}"
        lines.append(line)
    n_fail = sum(r.status == "fail" for r in results)
    n_pass = sum(r.status == "pass" for r in results)
    n_skip = len(results) - n_fail - n_pass
    lines.append(f"{n_pass} passed, {n_fail} failed, {n_skip} skipped")
    sys.stdout.write("\n".join(lines) + "\n")
    if args.out:
        _write_text(_json({"command": "check", "passed": n_pass, "failed": n_fail,
                           "skipped": n_skip, "results": [r.to_dict() for r in results]}),
                    args.out)
    return EXIT_CHECK_FAILED if n_fail else EXIT_OK


# -- order -------------------------------------------------------------------

def cmd_order(args) -> int:
    from .ordering import ORDER_TOL, comparison_grid, compare_cdcpe, compare_usual_stochastic

    x = _load_model(args.model)
    y = _load_model(args.model2) if args.model2 else x
    tol = _tolerances(args)
    try:
        grid = comparison_grid(x, y, args.grid)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    dead_band = ORDER_TOL if args.order_tol is None else args.order_tol
    verdict = compare_cdcpe(x, y, grid, dead_band, args.kind, qtol=tol)
    payload = {"command": "order", "x": x.name, "y": y.name, **verdict.to_dict()}
    if args.also_usual_st:
        payload["usual_stochastic"] = compare_usual_stochastic(x, y, tol=dead_band).to_dict()
    text = json.dumps({"schema": SCHEMA, **payload}, indent=2, default=_default) + "\n"
    sys.stdout.write(text)
    if args.out:
        _write_text(text, args.out)
    return EXIT_OK


def _default(o):
    if isinstance(o, EvalPoint):
        return [o.t1, o.t2]
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


# -- parser ------------------------------------------------------------------

def _range(text: str):
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"range must look like LO:HI, got {text!r}") from exc
    return lo, hi


def _common(p: argparse.ArgumentParser):
    p.add_argument("--tol-abs", type=float, default=None, help="absolute quadrature target")
    p.add_argument("--tol-rel", type=float, default=None, help="relative quadrature target")
    p.add_argument("--out", default=None, help="write the JSON report (CSV for scan) here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bivcpe",
                                     description="Bivariate cumulative past entropy toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="evaluate measures at one point")
    p.add_argument("--model", required=True, help="catalogue name, JSON text or .json file")
    p.add_argument("--measure", action="append", help=f"one of: {', '.join(sorted(MEASURES))}")
    p.add_argument("--i", type=int, choices=(1, 2), default=None)
    p.add_argument("--t1", type=float, default=None)
    p.add_argument("--t2", type=float, default=None)
    _common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("scan", help="evaluate measures over a grid, write CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--model2", default=None, help="report model minus model2")
    p.add_argument("--measure", action="append")
    p.add_argument("--minus", default=None, help="subtract this measure on the same model")
    p.add_argument("--i", type=int, choices=(1, 2), default=None)
    p.add_argument("--grid", type=int, default=9, help="points per axis")
    p.add_argument("--grid1", type=int, default=None)
    p.add_argument("--grid2", type=int, default=None)
    p.add_argument("--t1-range", type=_range, default=None, metavar="LO:HI")
    p.add_argument("--t2-range", type=_range, default=None, metavar="LO:HI")
    _common(p)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("check", help="run the theorem checks")
    p.add_argument("--id", action="append")
    p.add_argument("--all", action="store_true")
    p.add_argument("--model", action="append", help="restrict per-model checks (repeatable)")
    _common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("order", help="compare two models in the CDCPE order")
    p.add_argument("--model", required=True)
    p.add_argument("--model2", default=None, help="defaults to --model")
    p.add_argument("--grid", type=int, default=9)
    p.add_argument("--kind", choices=("interval", "exact"), default="interval")
    p.add_argument("--order-tol", type=float, default=None, help="dead band for the verdict")
    p.add_argument("--also-usual-st", action="store_true",
                   help="also test the marginal condition of the usual stochastic order")
    _common(p)
    p.set_defaults(func=cmd_order)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, KeyError) as exc:
        print(f"error: {exc.args[0] if exc.args else exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QuadratureError, EmptyConditioningError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        # remaining ValueErrors come from model/point validation
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
