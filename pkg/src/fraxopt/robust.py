"""Robust fractionation under interval uncertainty in the OAR ratios.

For a fixed fraction count, the absolute-value term in each robust BED
constraint is removed by splitting the ``y = sum(d**2)`` axis at the sorted
breakpoints ``D_m**2 / N_m``. Inside band ``k`` the first ``k`` OARs (in
sorted order) are bound by their largest ratio and the rest by their
smallest, so each band is again a planar LP.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Optional

from .lp2 import LpStatus, solve_planar_lp
from .model import ConsistencyError, InputError, ProblemInstance, SolveReport, TumorParams
from .nominal import FixedNSolution, band_bounds, bed_lp, report_from


def sort_oars(instance: ProblemInstance):
    """OARs ordered by ``D**2 / N_m`` (stable); returns ``(perm, sorted_instance)``.

    ``sorted_instance.oars[i]`` is ``instance.oars[perm[i]]``.
    """
    perm = tuple(sorted(range(instance.n_oars), key=lambda m: instance.oars[m].conventional_y))
    return perm, replace(instance, oars=tuple(instance.oars[m] for m in perm))


@dataclass(frozen=True)
class SubproblemSpec:
    k: int
    rho_k: tuple
    rc_k: tuple
    y_lower: Optional[float]
    y_upper: Optional[float]
    c_k: float
    gamma_k: float


def build_subproblem(sorted_instance: ProblemInstance, n: int, k: int) -> SubproblemSpec:
    """Band ``k`` of the partition; ``sorted_instance`` must come from :func:`sort_oars`."""
    oars = sorted_instance.oars
    if not 0 <= k <= len(oars):
        raise InputError(f"subproblem index {k} outside 0..{len(oars)}")
    rho_k = tuple(o.rho_max if i < k else o.rho_min for i, o in enumerate(oars))
    rc_k = tuple(o.rc_plus if i < k else o.rc_minus for i, o in enumerate(oars))
    gamma_k, c_k = band_bounds(rho_k, rc_k, n)
    return SubproblemSpec(
        k=k,
        rho_k=rho_k,
        rc_k=rc_k,
        y_lower=oars[k - 1].conventional_y if k > 0 else None,
        y_upper=oars[k].conventional_y if k < len(oars) else None,
        c_k=c_k,
        gamma_k=gamma_k,
    )


def solve_subproblem(spec: SubproblemSpec, tumor: TumorParams, n: int) -> Optional[FixedNSolution]:
    """LP optimum over band ``k``, or ``None`` when the band is empty.

    The band limits are linear in ``y``, so they enter the LP directly.
    """
    extra = []
    if spec.y_lower is not None:
        extra.append((0.0, -1.0, -spec.y_lower))
    if spec.y_upper is not None:
        extra.append((0.0, 1.0, spec.y_upper))
    lp = bed_lp((tumor.alpha0, tumor.beta0), spec.rho_k, spec.rc_k, n, extra)
    res = solve_planar_lp(lp)
    if res.status is LpStatus.UNBOUNDED:
        raise ConsistencyError(f"robust subproblem k={spec.k}, n={n} is unbounded")
    if res.status is LpStatus.INFEASIBLE:
        return None
    return FixedNSolution(n, res.objective_value, res.x, res.y, spec.k)


def best_subproblem(sorted_instance: ProblemInstance, n: int, skipped: Optional[list] = None):
    """Best band for ``n`` fractions; ties go to the smallest ``k``."""
    best = None
    for k in range(sorted_instance.n_oars + 1):
        sol = solve_subproblem(build_subproblem(sorted_instance, n, k), sorted_instance.tumor, n)
        if sol is None:
            if skipped is not None:
                skipped.append((n, k))
            continue
        if best is None or sol.lp_value > best.lp_value + 1e-12 * max(1.0, abs(best.lp_value)):
            best = sol
    return best


def lp_solutions(instance: ProblemInstance, n_values: Optional[Iterable[int]] = None, skipped=None) -> list:
    """Per-N robust optimum (without proliferation) for each fraction count."""
    _, sorted_instance = sort_oars(instance)
    if n_values is None:
        n_values = range(1, instance.n_max + 1)
    out = []
    for n in n_values:
        if not 1 <= n <= instance.n_max:
            raise InputError(f"fraction count {n} outside 1..{instance.n_max}")
        sol = best_subproblem(sorted_instance, n, skipped)
        if sol is None:
            raise ConsistencyError(f"every robust subproblem is empty at n={n}")
        out.append(sol)
    return out


def solve_robust_fixed_n(instance: ProblemInstance, n: int) -> SolveReport:
    return solve_robust(instance, n_values=[n])


def solve_robust(instance: ProblemInstance, n_values=None, tie_break: str = "largest") -> SolveReport:
    """Optimal robust schedule over ``n_values`` (default ``1..n_max``).

    ``subproblem_k`` in the report indexes the sorted OAR order; the
    ``oar_order`` diagnostic maps it back to the input order.
    """
    perm, _ = sort_oars(instance)
    skipped: list = []
    sols = lp_solutions(instance, n_values, skipped)
    return report_from(
        sols,
        instance.proliferation,
        tie_break,
        diagnostics={"oar_order": perm, "empty_subproblems": tuple(skipped)},
    )
