"""Optimal radiotherapy fractionation, nominal and robust to uncertain OAR ratios."""

from .config import RunConfig, head_and_neck, load_config, parse_config
from .estimators import NominalFractionation, RobustFractionation
from .lp2 import HalfPlane, LpOutcome, LpStatus, PlanarLp, solve_planar_lp
from .model import (
    ConsistencyError,
    DoseSchedule,
    FeasibilityReport,
    FraxoptError,
    InfeasibleProblemError,
    InputError,
    OarSpec,
    ProblemInstance,
    ProliferationParams,
    Regime,
    SolveReport,
    TumorParams,
    bed_delivered,
    check_feasibility,
    proliferation_penalty,
    tumor_be,
)
from .nominal import b_m, build_nominal_lp, recover_schedule, solve_nominal
from .robust import build_subproblem, solve_robust, solve_robust_fixed_n, solve_subproblem, sort_oars

__version__ = "0.1.0"
