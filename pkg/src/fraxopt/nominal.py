"""Nominal fractionation: one two-variable LP per fraction count.

Substituting ``x = sum(d)`` and ``y = sum(d**2)`` turns the fixed-N problem
into a planar LP; the optimal ``(x, y)`` is then mapped back to a schedule of
the form ``(q, p, ..., p)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .lp2 import LpOutcome, PlanarLp, make_lp, solve_planar_lp
from .model import (
    EPS_REC,
    ConsistencyError,
    DoseSchedule,
    InfeasibleProblemError,
    InputError,
    ProblemInstance,
    ProliferationParams,
    Regime,
    SolveReport,
    proliferation_penalty,
)

# relative window inside which two fraction counts count as tied
EPS_TIE = 1e-9
_RADICAND_CLAMP = 1e-9


def b_m(rho: float, bed: float, n: int) -> float:
    """Largest equal per-fraction dose over ``n`` fractions with BED ``<= bed``.

    Positive root of ``n d + rho n d**2 = bed``, written in rationalized form
    so that ``rho = 0`` gives the limit ``bed / n``.
    """
    if rho < 0 or bed < 0 or n < 1:
        raise InputError(f"b_m needs rho >= 0, bed >= 0, n >= 1; got {rho}, {bed}, {n}")
    s = bed / n
    return 2.0 * s / (1.0 + math.sqrt(1.0 + 4.0 * rho * s))


@dataclass(frozen=True)
class NominalLpParams:
    gamma_star: float
    c_star: float
    bed: tuple
    rho: tuple


def band_bounds(rhos: Sequence[float], beds: Sequence[float], n: int):
    """``(gamma, c)``: slopes of the rays bounding ``y / x`` for ``n`` fractions."""
    gamma = min(b_m(r, b, 1) for r, b in zip(rhos, beds))
    c = min(b_m(r, b, n) for r, b in zip(rhos, beds))
    return gamma, c


def bed_lp(objective, rhos: Sequence[float], rhs: Sequence[float], n: int, extra: Iterable = ()) -> PlanarLp:
    """Planar LP with BED rows ``x + rho y <= rhs``, the representability band
    ``c x <= y <= gamma x``, nonnegativity and any ``extra`` rows."""
    gamma, c = band_bounds(rhos, rhs, n)
    rows = [(1.0, r, b) for r, b in zip(rhos, rhs)]
    rows += [(-gamma, 1.0, 0.0), (c, -1.0, 0.0), (-1.0, 0.0, 0.0), (0.0, -1.0, 0.0)]
    rows += list(extra)
    return make_lp(objective, rows)


def nominal_lp_params(instance: ProblemInstance, n: int) -> NominalLpParams:
    rhos = tuple(o.rho_nominal for o in instance.oars)
    beds = tuple(o.bed_limit() for o in instance.oars)
    gamma, c = band_bounds(rhos, beds, n)
    return NominalLpParams(gamma, c, beds, rhos)


def build_nominal_lp(instance: ProblemInstance, n: int) -> PlanarLp:
    if not 1 <= n <= instance.n_max:
        raise InputError(f"fraction count {n} outside 1..{instance.n_max}")
    params = nominal_lp_params(instance, n)
    tumor = instance.tumor
    return bed_lp((tumor.alpha0, tumor.beta0), params.rho, params.bed, n)


def recover_schedule(x_star: float, y_star: float, n: int) -> DoseSchedule:
    """Schedule ``(q, p, ..., p)`` with ``sum(d) = x_star`` and ``sum(d**2) = y_star``."""
    if n < 1:
        raise InputError(f"fraction count must be >= 1, got {n}")
    tol = EPS_REC * max(1.0, abs(x_star), abs(y_star))
    if x_star < -tol or y_star < -tol:
        raise ConsistencyError(f"negative LP solution ({x_star}, {y_star})")
    x, y = max(x_star, 0.0), max(y_star, 0.0)
    if x <= tol and y <= tol:
        return DoseSchedule(n, (0.0,) * n, Regime.ZERO)
    if not (math.sqrt(y) - tol <= x <= math.sqrt(n * y) + tol):
        raise ConsistencyError(f"(x={x}, y={y}) is not representable by {n} nonnegative doses")
    if n == 1:
        return DoseSchedule(1, (x,), Regime.SINGLE)

    # compared in squared form so snapping keeps sum(d**2) within EPS_REC of y
    if abs(x * x - y) <= EPS_REC:
        regime = Regime.SINGLE
        p = 0.0
    elif abs(x * x / n - y) <= EPS_REC:
        regime = Regime.EQUAL
        p = x / n
    else:
        regime = Regime.UNEQUAL
        # 1 - sqrt(r) computed as (1 - r) / (1 + sqrt(r)) to avoid cancellation
        one_minus_r = (1.0 - y / x**2) * n / (n - 1)
        radicand = 1.0 - one_minus_r
        if radicand < 0:
            if radicand < -_RADICAND_CLAMP:
                raise ConsistencyError(f"negative radicand {radicand} recovering ({x}, {y}, {n})")
            radicand = 0.0
            one_minus_r = 1.0
        p = x / n * one_minus_r / (1.0 + math.sqrt(radicand))
    q = x - (n - 1) * p
    if regime is Regime.EQUAL:
        doses = (p,) * n
    else:
        doses = (q,) + (p,) * (n - 1)
    sched = DoseSchedule(n, doses, regime)
    if abs(sched.total_dose - x) > tol or abs(sched.sum_squares - y) > tol:
        raise ConsistencyError(f"recovered schedule misses (x, y) = ({x}, {y})")
    return sched


@dataclass(frozen=True)
class FixedNSolution:
    """Best LP point for one fraction count; ``lp_value`` excludes proliferation."""

    n: int
    lp_value: float
    x: float
    y: float
    k: Optional[int] = None


def lp_solutions(instance: ProblemInstance, n_values: Optional[Iterable[int]] = None) -> list:
    """Solve the nominal LP for each fraction count (all of ``1..n_max`` by default)."""
    if n_values is None:
        n_values = range(1, instance.n_max + 1)
    out = []
    for n in n_values:
        res: LpOutcome = solve_planar_lp(build_nominal_lp(instance, n))
        if res.optimal:
            out.append(FixedNSolution(n, res.objective_value, res.x, res.y))
        elif res.status.value == "Unbounded":
            raise ConsistencyError(f"nominal LP unbounded at n={n}")
    return out


def select_best(solutions: Sequence[FixedNSolution], prolif: ProliferationParams, tie_break: str = "largest"):
    """Winning fraction count after subtracting the proliferation penalty.

    Objectives within ``EPS_TIE`` (relative) of the best are treated as
    tied; ``tie_break`` then picks the ``"largest"`` or ``"smallest"`` N.
    Returns ``(winner, values)`` where ``values[i]`` scores ``solutions[i]``.
    """
    if tie_break not in ("largest", "smallest"):
        raise InputError(f"tie_break must be 'largest' or 'smallest', got {tie_break!r}")
    if not solutions:
        raise InfeasibleProblemError("no fraction count admits a feasible schedule")
    values = [s.lp_value - proliferation_penalty(prolif, s.n) for s in solutions]
    best = max(values)
    window = EPS_TIE * max(1.0, abs(best))
    tied = [i for i, v in enumerate(values) if v >= best - window]
    pick = max if tie_break == "largest" else min
    i = pick(tied, key=lambda j: solutions[j].n)
    return solutions[i], values


def report_from(solutions, prolif, tie_break="largest", diagnostics=None) -> SolveReport:
    win, values = select_best(solutions, prolif, tie_break)
    schedule = recover_schedule(win.x, win.y, win.n)
    per_n = [math.nan] * max(s.n for s in solutions)
    for s, v in zip(solutions, values):
        per_n[s.n - 1] = v
    return SolveReport(
        schedule=schedule,
        objective=win.lp_value - proliferation_penalty(prolif, win.n),
        x_star=win.x,
        y_star=win.y,
        subproblem_k=win.k,
        per_n_objective=tuple(per_n),
        diagnostics=dict(diagnostics or {}),
    )


def solve_nominal(instance: ProblemInstance, n_values=None, tie_break: str = "largest") -> SolveReport:
    """Optimal nominal schedule over ``n_values`` (default ``1..n_max``)."""
    return report_from(lp_solutions(instance, n_values), instance.proliferation, tie_break)
