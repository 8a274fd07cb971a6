import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraxopt import (
    Regime,
    build_subproblem,
    check_feasibility,
    head_and_neck,
    proliferation_penalty,
    solve_nominal,
    solve_robust,
    solve_robust_fixed_n,
    sort_oars,
)
from fraxopt.experiments import DEFAULT_T_DOUBLE, DEFAULT_T_LAG, box_corners, sample_box
from fraxopt.lp2 import solve_planar_lp
from fraxopt.nominal import bed_lp
from fraxopt.robust import best_subproblem, solve_subproblem

from conftest import load_rows
from oracles import oar_boxes, random_instance, robust_feasible, robust_grid_max


def test_sort_order(hn):
    perm, s = sort_oars(hn)
    assert perm == (2, 3, 0, 1)
    ys = [o.conventional_y for o in s.oars]
    assert ys == sorted(ys)


def test_subproblem_bands(hn):
    _, s = sort_oars(hn.with_uncertainty(0.5))
    spec = build_subproblem(s, 20, 2)
    assert spec.y_lower == pytest.approx(28**2 / 35)
    assert spec.y_upper == pytest.approx(45**2 / 35)
    assert spec.rho_k == pytest.approx((0.3, 0.25, 1 / 6, 0.125))
    assert spec.c_k <= spec.gamma_k
    first, last = build_subproblem(s, 20, 0), build_subproblem(s, 20, 4)
    assert first.y_lower is None and last.y_upper is None
    with pytest.raises(ValueError):
        build_subproblem(s, 20, 5)


def test_reduces_to_nominal_without_uncertainty():
    for t_lag in DEFAULT_T_LAG:
        for t_double in DEFAULT_T_DOUBLE:
            inst = head_and_neck(t_lag, t_double)
            g, f = solve_nominal(inst), solve_robust(inst.with_uncertainty(0.0))
            assert abs(f.objective - g.objective) <= 1e-9
            assert f.n_star == g.n_star


def test_reference_robust_table(full_sweep):
    """Every reference cell is reproduced or is an exact tie in N."""
    for row in load_rows("robust_table.csv"):
        delta = float(row["delta"])
        if delta == 0:
            continue
        rep = full_sweep[int(row["t_lag"]), int(row["t_double"]), delta].robust_report
        n_ref = int(row["n_star"])
        s = rep.schedule
        if s.n == n_ref:
            assert s.dose_q == pytest.approx(float(row["dose_q"]), abs=0.005)
            assert s.dose_p == pytest.approx(float(row["dose_p"]), abs=0.005)
        else:
            assert rep.per_n_objective[n_ref - 1] == pytest.approx(rep.objective, rel=1e-9), row


def test_unequal_cell_and_tie_break():
    inst = head_and_neck(35, 2).with_uncertainty(0.6)
    rep = solve_robust(inst)
    s = rep.schedule
    assert s.regime is Regime.UNEQUAL
    assert (s.n, round(s.dose_q, 2), round(s.dose_p, 2)) == (36, 1.44, 0.70)
    other = solve_robust(inst, tie_break="smallest")
    assert other.n_star == 35
    assert other.objective == pytest.approx(rep.objective, rel=1e-9)


def test_winner_lies_in_its_band(hn):
    for delta in (0.2, 0.6, 1.0):
        inst = hn.with_uncertainty(delta)
        _, s = sort_oars(inst)
        for n in (1, 5, 8, 20, 35, 60):
            sol = best_subproblem(s, n)
            spec = build_subproblem(s, n, sol.k)
            if spec.y_lower is not None:
                assert sol.y >= spec.y_lower - 1e-9
            if spec.y_upper is not None:
                assert sol.y <= spec.y_upper + 1e-9


def test_band_rows_match_relaxed_solution(hn):
    # optimum of the relaxed LP if it lies in the band, else on the band boundary it crosses
    inst = hn.with_uncertainty(0.7)
    _, s = sort_oars(inst)
    for n in (3, 10, 30, 36, 70):
        for k in range(inst.n_oars + 1):
            spec = build_subproblem(s, n, k)
            banded = solve_subproblem(spec, inst.tumor, n)
            relaxed = solve_planar_lp(bed_lp((inst.tumor.alpha0, inst.tumor.beta0), spec.rho_k, spec.rc_k, n))
            lo = spec.y_lower if spec.y_lower is not None else -np.inf
            hi = spec.y_upper if spec.y_upper is not None else np.inf
            if lo - 1e-9 <= relaxed.y <= hi + 1e-9:
                assert banded.lp_value == pytest.approx(relaxed.objective_value, rel=1e-12)
            elif banded is not None:
                bound = lo if relaxed.y < lo else hi
                assert banded.y == pytest.approx(bound, rel=1e-9)
                assert banded.lp_value <= relaxed.objective_value + 1e-12


def test_empty_bands_are_recorded(hn):
    rep = solve_robust(hn.with_uncertainty(0.5), n_values=[1, 2])
    empty = rep.diagnostics["empty_subproblems"]
    assert all(n in (1, 2) for n, _ in empty)
    assert rep.diagnostics["oar_order"] == (2, 3, 0, 1)


@pytest.mark.parametrize("seed", range(8))
def test_fixed_n_matches_literal_brute_force(seed):
    rng = np.random.default_rng(100 + seed)
    inst = random_instance(rng, int(rng.integers(1, 3)), 5)
    n = int(rng.integers(1, 6))
    rep = solve_robust_fixed_n(inst, n)
    lp_value = rep.objective + proliferation_penalty(inst.proliferation, n)
    best, _ = robust_grid_max(oar_boxes(inst), inst.tumor.alpha0, inst.tumor.beta0, n)
    assert best <= lp_value * (1 + 1e-9)
    assert lp_value == pytest.approx(best, rel=1e-3)
    assert robust_feasible(oar_boxes(inst), n, rep.x_star, rep.y_star, slack=1e-7)


seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=25, deadline=None)
@given(seeds, st.integers(1, 4))
def test_schedule_feasible_over_box(seed, n_oars):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, n_oars, 40)
    rep = solve_robust(inst)
    rhos = np.vstack([box_corners(inst), sample_box(inst, 200, seed)])
    for r in rhos:
        assert check_feasibility(inst, rep.schedule, r).feasible


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(1, 3))
def test_price_nonnegative_and_nested(seed, n_oars):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, n_oars, 30)
    g = solve_nominal(inst).objective
    prev = g
    for delta in (0.0, 0.2, 0.5, 0.9):
        f = solve_robust(inst.with_uncertainty(delta)).objective
        assert f <= prev + 1e-9 * max(1, abs(prev))
        prev = f
