"""Command-line entry point.

Subcommands: ``solve``, ``sweep``, ``forced-n``, ``infeasibility`` and
``tumor-uncertainty``. Exit status is 0 on success, 1 on solver errors and
2 on configuration or usage errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import asdict, dataclass, fields
from typing import Optional

from . import experiments
from .config import RunConfig, load_config
from .experiments import SweepGrid
from .model import FraxoptError, InputError, ProblemInstance, SolveReport, check_feasibility
from .nominal import solve_nominal
from .robust import solve_robust

#: bump when the sweep table columns change
TABLE_VERSION = 1


def fmt(v, decimals: Optional[int] = None) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, int) and not isinstance(v, bool):
        return str(v)
    if decimals is not None:
        return f"{v:.{decimals}f}"
    return f"{v:.6g}"


def _round(v, decimals=None):
    s = fmt(v, decimals)
    return float(s) if s else None


@dataclass(frozen=True)
class TableRow:
    """One line of a sweep table; floats are stored as written."""

    t_lag: int
    t_double: float
    delta: float
    theta: float
    n_star: int
    dose_q: float
    dose_p: float
    regime: str
    objective_nominal: float
    objective_robust: float
    price_pct: Optional[float]

    @classmethod
    def from_cell(cls, cell, rounded=False):
        dec = 2 if rounded else None
        sched = cell.robust_report.schedule
        return cls(
            t_lag=int(cell.t_lag),
            t_double=_round(cell.t_double),
            delta=_round(cell.delta),
            theta=_round(cell.theta),
            n_star=sched.n,
            dose_q=_round(sched.dose_q, dec),
            dose_p=_round(sched.dose_p, dec),
            regime=sched.regime.value,
            objective_nominal=_round(cell.nominal_report.objective),
            objective_robust=_round(cell.robust_report.objective),
            price_pct=_round(cell.price_pct, dec),
        )

    def cells(self, rounded=False):
        dec = 2 if rounded else None
        return [
            getattr(self, name) if name == "regime" else fmt(getattr(self, name), dec if name in _ROUNDED else None)
            for name in COLUMNS
        ]


_ROUNDED = ("dose_q", "dose_p", "price_pct")
COLUMNS = [f.name for f in fields(TableRow)]


def write_table(path, rows, rounded=False):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in rows:
            w.writerow(r.cells(rounded))


def read_table(path) -> list:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != COLUMNS:
            raise InputError(f"unexpected table columns {reader.fieldnames}")
        for rec in reader:
            out.append(
                TableRow(
                    t_lag=int(rec["t_lag"]),
                    t_double=float(rec["t_double"]),
                    delta=float(rec["delta"]),
                    theta=float(rec["theta"]),
                    n_star=int(rec["n_star"]),
                    dose_q=float(rec["dose_q"]),
                    dose_p=float(rec["dose_p"]),
                    regime=rec["regime"],
                    objective_nominal=float(rec["objective_nominal"]),
                    objective_robust=float(rec["objective_robust"]),
                    price_pct=float(rec["price_pct"]) if rec["price_pct"] else None,
                )
            )
    return out


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _instance(cfg: RunConfig, args) -> ProblemInstance:
    inst = cfg.instance
    prolif = inst.proliferation
    t_lag = args.tlag if getattr(args, "tlag", None) is not None else prolif.t_lag
    t_double = args.tdouble if getattr(args, "tdouble", None) is not None else prolif.t_double
    return inst.with_proliferation(t_lag, t_double)


def _grid(cfg: RunConfig) -> SweepGrid:
    return cfg.grid if cfg.grid is not None else SweepGrid()


def report_json(instance: ProblemInstance, report: SolveReport, mode: str) -> dict:
    sched = report.schedule
    oars = []
    for m, o in enumerate(instance.oars):
        nominal_rhos = [x.rho_nominal for x in instance.oars]
        at_nom = check_feasibility(instance, sched, nominal_rhos).violation_pct[m]
        worst = 0.0
        for r in (o.rho_min, o.rho_max):
            rhos = list(nominal_rhos)
            rhos[m] = r
            worst = max(worst, check_feasibility(instance, sched, rhos).violation_pct[m])
        oars.append(
            {
                "name": o.name,
                "rho_nominal": o.rho_nominal,
                "rho_min": o.rho_min,
                "rho_max": o.rho_max,
                "bed_limit_nominal": o.bed_limit(),
                "bed_delivered_nominal": sched.total_dose + o.rho_nominal * sched.sum_squares,
                "violation_pct_nominal": at_nom,
                "violation_pct_worst_case": worst,
            }
        )
    diag = dict(report.diagnostics)
    return {
        "mode": mode,
        "t_lag": instance.proliferation.t_lag,
        "t_double": instance.proliferation.t_double,
        "n_star": sched.n,
        "dose_q": sched.dose_q,
        "dose_p": sched.dose_p,
        "regime": sched.regime.value,
        "doses": list(sched.doses),
        "objective": report.objective,
        "x_star": report.x_star,
        "y_star": report.y_star,
        "subproblem_k": report.subproblem_k,
        "oar_order": list(diag.get("oar_order", range(instance.n_oars))),
        "n_empty_subproblems": len(diag.get("empty_subproblems", ())),
        "oars": oars,
    }


def cmd_solve(cfg: RunConfig, args) -> int:
    inst = _instance(cfg, args)
    if args.theta:
        inst = inst.with_tumor_uncertainty(args.theta)
    n_values = [args.n] if args.n is not None else None
    if args.mode == "nominal":
        report = solve_nominal(inst, n_values, args.tie_break)
    else:
        if args.delta is not None:
            inst = inst.with_uncertainty(args.delta)
        report = solve_robust(inst, n_values, args.tie_break)
    s = report.schedule
    if s.regime.value == "UnequalDosage":
        head = f"(q, p, N*) = ({s.dose_q:.2f}, {s.dose_p:.2f}, {s.n})"
    else:
        head = f"(d*, N*) = ({s.dose_q:.2f}, {s.n})"
    print(f"{head}  f* = {report.objective:.6g}  regime = {s.regime.value}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(report_json(inst, report, args.mode), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def cmd_sweep(cfg: RunConfig, args) -> int:
    cells = experiments.run_price_sweep(cfg.instance, _grid(cfg))
    rows = [TableRow.from_cell(c, args.rounded) for c in cells]
    write_table(args.out, rows, args.rounded)
    print(f"wrote {len(rows)} cells to {args.out}")
    return 0


def cmd_tumor(cfg: RunConfig, args) -> int:
    grid = _grid(cfg)
    if args.tlag is not None or args.tdouble is not None:
        inst = _instance(cfg, args)
        grid = SweepGrid((inst.proliferation.t_lag,), (inst.proliferation.t_double,), grid.delta_values, grid.theta_values)
    thetas = experiments.DEFAULT_THETA if grid.theta_values == (0.0,) else grid.theta_values
    deltas = grid.delta_values if 0.0 in grid.delta_values else (0.0,) + grid.delta_values
    grid = SweepGrid(grid.t_lag_values, grid.t_double_values, deltas, thetas)
    cells = experiments.run_tumor_uncertainty(cfg.instance, grid)
    rows = [TableRow.from_cell(c, args.rounded) for c in cells]
    write_table(args.out, rows, args.rounded)
    print(f"wrote {len(rows)} cells to {args.out}")
    return 0


def cmd_forced_n(cfg: RunConfig, args) -> int:
    grid = _grid(cfg)
    header = ["t_lag", "t_double", "delta", "n", "objective_nominal", "objective_robust", "price_pct"]
    rows = []
    n_forced = args.n if args.n is not None else cfg.options.get("n_forced")
    if n_forced is not None:
        for t_lag in grid.t_lag_values:
            for t_double in grid.t_double_values:
                inst = cfg.instance.with_proliferation(t_lag, t_double)
                for d in grid.delta_values:
                    r = experiments.run_forced_n(inst, n_forced, d)
                    rows.append([t_lag, t_double, d, r.n, r.nominal_objective, r.robust_objective, r.price_pct])
    else:
        inst = _instance(cfg, args)
        for d in grid.delta_values:
            for r in experiments.price_curve(inst, d):
                rows.append([inst.proliferation.t_lag, inst.proliferation.t_double, d, r.n,
                             r.nominal_objective, r.robust_objective, r.price_pct])
    _write_csv(args.out, header, [[fmt(v) for v in row] for row in rows])
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def _stats_dict(summary):
    d = asdict(summary)
    for k, v in list(d.items()):
        if isinstance(v, float) and (math.isnan(v) or math.isinf(v)):
            d[k] = None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return d


def cmd_infeasibility(cfg: RunConfig, args) -> int:
    grid = _grid(cfg)
    opts = cfg.options
    if args.tlag is not None or args.tdouble is not None or cfg.grid is None:
        cells = [(_instance(cfg, args))]
    else:
        cells = [cfg.instance.with_proliferation(a, b) for a in grid.t_lag_values for b in grid.t_double_values]
    n = cfg.instance.n_oars
    header = ["t_lag", "t_double", "delta", "oar", "gamma", "side"] + [f"rho_{i + 1}" for i in range(n)]
    header += ["nominal_violation_pct", "robust_violation_pct"]
    rows, scenarios, per_cell = [], [], []
    for inst in cells:
        if args.mode == "inside":
            study = experiments.run_infeasibility_inside(
                inst,
                grid.delta_values,
                args.samples_per_oar or opts.get("samples_per_oar", 5),
                opts.get("max_scenarios", experiments.MAX_SCENARIOS),
            )
        else:
            study = experiments.run_infeasibility_outside(
                inst, grid.delta_values, tuple(opts.get("gamma", experiments.DEFAULT_GAMMA)), args.joint or opts.get("joint", False)
            )
        p = inst.proliferation
        per_cell.append({"t_lag": p.t_lag, "t_double": p.t_double, "summary": _stats_dict(study.summary)})
        for s in study.scenarios:
            rows.append(
                [fmt(p.t_lag), fmt(p.t_double), fmt(s.delta), "" if s.oar is None else str(s.oar), fmt(s.gamma), s.side or ""]
                + [fmt(r) for r in s.rhos]
                + [fmt(s.nominal_violation_pct), fmt(s.robust_violation_pct)]
            )
        scenarios.extend(study.scenarios)
    _write_csv(args.out, header, rows)
    overall = experiments.summarize(scenarios)
    if args.summary:
        with open(args.summary, "w", encoding="utf-8") as fh:
            json.dump({"mode": args.mode, "overall": _stats_dict(overall), "cells": per_cell}, fh, indent=2, sort_keys=True)
            fh.write("\n")
    print(
        f"{len(rows)} scenarios: nominal infeasible {100 * overall.nominal.infeasible_fraction:.1f}%, "
        f"robust infeasible {100 * overall.robust.infeasible_fraction:.1f}%, "
        f"paired t = {overall.t_statistic:.3g} (nominal worse: {overall.nominal_worse})"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fraxopt", description="Nominal and robust radiotherapy fractionation.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_required=True):
        p.add_argument("--config", required=True, help="JSON config path (or bundled name, e.g. headneck.json)")
        p.add_argument("--out", required=out_required)
        p.add_argument("--tlag", type=int)
        p.add_argument("--tdouble", type=float)

    p = sub.add_parser("solve", help="solve one instance")
    common(p, out_required=False)
    p.add_argument("--mode", choices=("nominal", "robust"), default="robust")
    p.add_argument("--delta", type=float)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--n", type=int, help="force the fraction count")
    p.add_argument("--tie-break", choices=("largest", "smallest"), default="largest")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="price-of-robustness table")
    common(p)
    p.add_argument("--paper-rounding", dest="rounded", action="store_true", help="two decimals for doses and prices")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("forced-n", help="nominal vs robust at fixed fraction counts")
    common(p)
    p.add_argument("--n", type=int)
    p.set_defaults(func=cmd_forced_n)

    p = sub.add_parser("infeasibility", help="violation study at realized ratios")
    common(p)
    p.add_argument("--mode", choices=("inside", "outside"), default="inside")
    p.add_argument("--samples-per-oar", type=int)
    p.add_argument("--joint", action="store_true")
    p.add_argument("--summary", help="write summary statistics JSON here")
    p.set_defaults(func=cmd_infeasibility)

    p = sub.add_parser("tumor-uncertainty", help="robust table with tumor parameter uncertainty")
    common(p)
    p.add_argument("--paper-rounding", dest="rounded", action="store_true", help="two decimals for doses and prices")
    p.set_defaults(func=cmd_tumor)
    return parser


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = load_config(args.config)
        return args.func(cfg, args)
    except InputError as exc:
        print(f"fraxopt: error: {exc}", file=sys.stderr)
        return 2
    except FraxoptError as exc:
        print(f"fraxopt: solver error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
