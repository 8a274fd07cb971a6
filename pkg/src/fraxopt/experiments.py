"""Sensitivity sweeps and infeasibility studies on a base instance.

Per-fraction-count LP optima do not depend on the proliferation parameters,
so they are computed once per (tumor, OAR intervals) pair and reused across
every ``(t_lag, t_double)`` combination of a sweep.
"""

from __future__ import annotations

import enum
import itertools
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from joblib import Parallel, delayed

from . import nominal, robust
from ._validation import check_fraction, check_instance
from .model import (
    EPS_FEAS,
    InputError,
    ProblemInstance,
    SolveReport,
    proliferation_penalty,
    violation_fractions,
)

logger = logging.getLogger(__name__)

DEFAULT_T_LAG = (7, 14, 21, 28, 35)
DEFAULT_T_DOUBLE = (2, 8, 10, 20, 40, 50, 80, 100)
DEFAULT_DELTA = tuple(round(0.1 * i, 1) for i in range(1, 11))
DEFAULT_THETA = tuple(round(0.1 * i, 1) for i in range(1, 10))
DEFAULT_GAMMA = (0.1, 0.2, 0.3, 0.4, 0.5)
MAX_SCENARIOS = 10**6
T_ALPHA = 0.05


def default_n_jobs() -> int:
    """Worker count from ``FRAXOPT_THREADS`` (default 1)."""
    raw = os.environ.get("FRAXOPT_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise InputError(f"FRAXOPT_THREADS must be an integer, got {raw!r}")
    return max(1, n)


@dataclass(frozen=True)
class SweepGrid:
    t_lag_values: tuple = DEFAULT_T_LAG
    t_double_values: tuple = DEFAULT_T_DOUBLE
    delta_values: tuple = DEFAULT_DELTA
    theta_values: tuple = (0.0,)

    def __post_init__(self):
        for name in ("t_lag_values", "t_double_values", "delta_values", "theta_values"):
            vals = tuple(getattr(self, name))
            if not vals:
                raise InputError(f"grid field {name} must be nonempty")
            object.__setattr__(self, name, vals)
        for d in self.delta_values:
            check_fraction(d, "delta")
        for t in self.theta_values:
            check_fraction(t, "theta", upper_open=True)


@dataclass(frozen=True)
class SweepCell:
    t_lag: int
    t_double: float
    delta: float
    theta: float
    nominal_report: SolveReport
    robust_report: SolveReport
    #: ``None`` when the nominal optimum is not positive
    price_pct: Optional[float]


# ---------------------------------------------------------------------------
# cached per-N tables
# ---------------------------------------------------------------------------

_TABLES: dict = {}


def _table_key(kind: str, instance: ProblemInstance):
    return (kind, instance.tumor, instance.oars, instance.n_max)


def _compute_table(kind: str, instance: ProblemInstance):
    mod = robust if kind == "robust" else nominal
    return tuple(mod.lp_solutions(instance))


def _tables(requests, n_jobs: Optional[int] = None):
    """Fill the cache for ``(kind, instance)`` requests, in parallel if asked."""
    missing = []
    for kind, inst in requests:
        key = _table_key(kind, inst)
        if key not in _TABLES and key not in {k for k, _, _ in missing}:
            missing.append((key, kind, inst))
    n_jobs = default_n_jobs() if n_jobs is None else n_jobs
    if missing:
        if n_jobs > 1 and len(missing) > 1:
            results = Parallel(n_jobs=n_jobs)(delayed(_compute_table)(k, i) for _, k, i in missing)
        else:
            results = [_compute_table(k, i) for _, k, i in missing]
        for (key, _, _), res in zip(missing, results):
            _TABLES[key] = res
    return [_TABLES[_table_key(kind, inst)] for kind, inst in requests]


def clear_cache():
    _TABLES.clear()


def _report(kind, instance, tie_break="largest"):
    (table,) = _tables([(kind, instance)], n_jobs=1)
    diag = {"oar_order": robust.sort_oars(instance)[0]} if kind == "robust" else None
    return nominal.report_from(table, instance.proliferation, tie_break, diag)


def price_pct(g: float, f: float) -> Optional[float]:
    if not g > 0:
        return None
    return (g - f) / g * 100.0


def run_price_sweep(base: ProblemInstance, grid: SweepGrid = SweepGrid(), n_jobs=None) -> list:
    """Price of robustness for every ``(t_lag, t_double, delta)`` cell.

    Cells are ordered with ``t_lag`` outermost, then ``t_double``, then
    ``delta``. The grid's ``theta_values`` are ignored here.
    """
    base = check_instance(base)
    boxed = {d: base.with_uncertainty(d) for d in grid.delta_values}
    _tables([("nominal", base)] + [("robust", boxed[d]) for d in grid.delta_values], n_jobs)
    cells = []
    for t_lag, t_double in itertools.product(grid.t_lag_values, grid.t_double_values):
        nom = _report("nominal", base.with_proliferation(t_lag, t_double))
        for d in grid.delta_values:
            rob = _report("robust", boxed[d].with_proliferation(t_lag, t_double))
            price = price_pct(nom.objective, rob.objective)
            if price is None:
                logger.warning("price undefined at t_lag=%s t_double=%s delta=%s", t_lag, t_double, d)
            cells.append(SweepCell(t_lag, t_double, d, 0.0, nom, rob, price))
    return cells


def run_tumor_uncertainty(base: ProblemInstance, grid: SweepGrid, n_jobs=None) -> list:
    """Robust solves with worst-case tumor parameters ``(1 - theta) * (alpha0, beta0)``.

    ``nominal_report`` of each cell is the plain nominal optimum (no tumor or
    OAR uncertainty), so ``price_pct`` measures the combined loss.
    Cells are ordered ``t_lag``, ``t_double``, ``delta``, ``theta``.
    """
    base = check_instance(base)
    variants = {
        (d, th): base.with_tumor_uncertainty(th).with_uncertainty(d)
        for d in grid.delta_values
        for th in grid.theta_values
    }
    _tables([("nominal", base)] + [("robust", v) for v in variants.values()], n_jobs)
    cells = []
    for t_lag, t_double in itertools.product(grid.t_lag_values, grid.t_double_values):
        nom = _report("nominal", base.with_proliferation(t_lag, t_double))
        for d, th in itertools.product(grid.delta_values, grid.theta_values):
            rob = _report("robust", variants[(d, th)].with_proliferation(t_lag, t_double))
            cells.append(SweepCell(t_lag, t_double, d, th, nom, rob, price_pct(nom.objective, rob.objective)))
    return cells


@dataclass(frozen=True)
class ForcedNResult:
    n: int
    delta: float
    nominal_objective: float
    robust_objective: float
    price_pct: Optional[float]


def price_curve(base: ProblemInstance, delta: float, n_values: Optional[Sequence[int]] = None) -> list:
    """Nominal and robust optimum for each fixed fraction count."""
    base = check_instance(base)
    if n_values is None:
        n_values = range(1, base.n_max + 1)
    n_values = list(n_values)
    for n in n_values:
        if not 1 <= n <= base.n_max:
            raise InputError(f"fraction count {n} outside 1..{base.n_max}")
    nom_table, rob_table = _tables([("nominal", base), ("robust", base.with_uncertainty(delta))], n_jobs=1)
    nom_by_n = {s.n: s for s in nom_table}
    rob_by_n = {s.n: s for s in rob_table}
    out = []
    for n in n_values:
        tau = proliferation_penalty(base.proliferation, n)
        g = nom_by_n[n].lp_value - tau
        f = rob_by_n[n].lp_value - tau
        out.append(ForcedNResult(n, delta, g, f, price_pct(g, f)))
    return out


def run_forced_n(base: ProblemInstance, n_forced: int, delta: float) -> ForcedNResult:
    return price_curve(base, delta, [n_forced])[0]


# ---------------------------------------------------------------------------
# infeasibility studies
# ---------------------------------------------------------------------------


class StudyMode(str, enum.Enum):
    INSIDE = "InsideInterval"
    OUTSIDE = "OutsideInterval"


@dataclass(frozen=True)
class Scenario:
    delta: float
    rhos: tuple
    nominal_violation_pct: float
    robust_violation_pct: float
    #: perturbed OAR index and offset (outside mode only)
    oar: Optional[int] = None
    gamma: Optional[float] = None
    side: Optional[str] = None


@dataclass(frozen=True)
class ViolationStats:
    infeasible_fraction: float
    n_infeasible: int
    mean: float
    q1: float
    median: float
    q3: float
    max: float


@dataclass(frozen=True)
class InfeasibilitySummary:
    n_scenarios: int
    nominal: ViolationStats
    robust: ViolationStats
    t_statistic: float
    p_value: float
    nominal_worse: bool


@dataclass(frozen=True)
class InfeasibilityStudy:
    mode: StudyMode
    scenarios: tuple
    summary: InfeasibilitySummary
    skipped: tuple = field(default=())

    def by_delta(self) -> dict:
        out = {}
        for d in sorted({s.delta for s in self.scenarios}):
            out[d] = summarize([s for s in self.scenarios if s.delta == d])
        return out


def violation_stats(amounts: np.ndarray) -> ViolationStats:
    """Incidence plus mean and quartiles of the positive violations.

    Quartiles use linear interpolation between closest ranks.
    """
    amounts = np.asarray(amounts, dtype=float)
    pos = amounts[amounts > 100.0 * EPS_FEAS]
    n = len(amounts)
    if len(pos) == 0:
        return ViolationStats(0.0, 0, 0.0, 0.0, 0.0, 0.0, 0.0)
    q1, q2, q3 = np.percentile(pos, [25, 50, 75], method="linear")
    return ViolationStats(len(pos) / n, len(pos), float(pos.mean()), float(q1), float(q2), float(q3), float(pos.max()))


def paired_t(a: np.ndarray, b: np.ndarray):
    """One-sided paired t test of ``mean(a - b) > 0``.

    Returns ``(t, p)`` with ``p`` from the normal approximation.
    """
    diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    n = len(diff)
    if n < 2:
        return math.nan, math.nan
    mean = diff.mean()
    sd = diff.std(ddof=1)
    if sd == 0:
        if mean == 0:
            return math.nan, math.nan
        return math.copysign(math.inf, mean), (0.0 if mean > 0 else 1.0)
    t = mean / (sd / math.sqrt(n))
    return float(t), 0.5 * math.erfc(t / math.sqrt(2.0))


def summarize(scenarios: Sequence[Scenario]) -> InfeasibilitySummary:
    nom = np.array([s.nominal_violation_pct for s in scenarios])
    rob = np.array([s.robust_violation_pct for s in scenarios])
    t, p = paired_t(nom, rob)
    return InfeasibilitySummary(
        n_scenarios=len(scenarios),
        nominal=violation_stats(nom),
        robust=violation_stats(rob),
        t_statistic=t,
        p_value=p,
        nominal_worse=bool(p < T_ALPHA) if not math.isnan(p) else False,
    )


def schedules(base: ProblemInstance, delta: float):
    """Cached nominal and robust optimal schedules for ``base`` at level ``delta``."""
    nom = _report("nominal", base)
    rob = _report("robust", base.with_uncertainty(delta))
    return nom.schedule, rob.schedule


def _max_violation_pct(oars, schedule, R: np.ndarray) -> np.ndarray:
    frac = violation_fractions(oars, schedule.total_dose, schedule.sum_squares, R)
    return 100.0 * frac.max(axis=1)


def inside_grid(base: ProblemInstance, delta: float, samples_per_oar: int) -> np.ndarray:
    """Cartesian product of evenly spaced points over each OAR interval."""
    axes = [np.linspace((1 - delta) * o.rho_nominal, (1 + delta) * o.rho_nominal, samples_per_oar) for o in base.oars]
    if delta == 0:
        axes = [a[:1] for a in axes]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def run_infeasibility_inside(
    base: ProblemInstance, delta_values=DEFAULT_DELTA, samples_per_oar: int = 5, max_scenarios: int = MAX_SCENARIOS
) -> InfeasibilityStudy:
    """Evaluate both schedules at every grid point inside the uncertainty box."""
    base = check_instance(base)
    if samples_per_oar < 2:
        raise InputError("samples_per_oar must be >= 2")
    if samples_per_oar**base.n_oars > max_scenarios:
        raise InputError(
            f"{samples_per_oar}^{base.n_oars} scenarios exceeds the cap of {max_scenarios}"
        )
    _tables([("nominal", base)] + [("robust", base.with_uncertainty(d)) for d in delta_values])
    scenarios = []
    for d in delta_values:
        check_fraction(d, "delta")
        nom_s, rob_s = schedules(base, d)
        R = inside_grid(base, d, samples_per_oar)
        nv = _max_violation_pct(base.oars, nom_s, R)
        rv = _max_violation_pct(base.oars, rob_s, R)
        for row, a, b in zip(R, nv, rv):
            scenarios.append(Scenario(d, tuple(float(r) for r in row), float(a), float(b)))
    return InfeasibilityStudy(StudyMode.INSIDE, tuple(scenarios), summarize(scenarios))


def run_infeasibility_outside(
    base: ProblemInstance, delta_values=DEFAULT_DELTA, gamma_values=DEFAULT_GAMMA, joint: bool = False
) -> InfeasibilityStudy:
    """Realized ratios at ``(1 + delta + gamma) rho`` and ``(1 - delta - gamma) rho``.

    By default one OAR is perturbed at a time with the others at nominal;
    ``joint=True`` moves every OAR to the same offset instead.
    """
    base = check_instance(base)
    _tables([("nominal", base)] + [("robust", base.with_uncertainty(d)) for d in delta_values])
    nominal_rhos = np.array([o.rho_nominal for o in base.oars])
    targets = [None] if joint else list(range(base.n_oars))
    scenarios, skipped = [], []
    for d in delta_values:
        check_fraction(d, "delta")
        nom_s, rob_s = schedules(base, d)
        for m, g, side in itertools.product(targets, gamma_values, ("upper", "lower")):
            factor = 1 + d + g if side == "upper" else 1 - d - g
            if factor <= 0:
                logger.info("skipping delta=%s gamma=%s oar=%s: nonpositive realized rho", d, g, m)
                skipped.append((d, m, g, side))
                continue
            rhos = nominal_rhos.copy()
            if m is None:
                rhos = rhos * factor
            else:
                rhos[m] *= factor
            R = rhos[None, :]
            a = _max_violation_pct(base.oars, nom_s, R)[0]
            b = _max_violation_pct(base.oars, rob_s, R)[0]
            scenarios.append(Scenario(d, tuple(float(r) for r in rhos), float(a), float(b), m, g, side))
    return InfeasibilityStudy(StudyMode.OUTSIDE, tuple(scenarios), summarize(scenarios), tuple(skipped))


# ---------------------------------------------------------------------------
# uncertainty-box sampling
# ---------------------------------------------------------------------------


def box_corners(instance: ProblemInstance) -> np.ndarray:
    """All ``2**n`` corners of the ratio box."""
    return np.array(list(itertools.product(*[(o.rho_min, o.rho_max) for o in instance.oars])), dtype=float)


def sample_box(instance: ProblemInstance, n_samples: int, seed=None) -> np.ndarray:
    rng = np.random.default_rng(seed)
    lo = np.array([o.rho_min for o in instance.oars])
    hi = np.array([o.rho_max for o in instance.oars])
    return lo + (hi - lo) * rng.random((n_samples, instance.n_oars))
