"""Domain types and linear-quadratic (LQ) dose-response arithmetic.

Units are fixed throughout the package: doses in Gy, times in days and
dose-response ratios ``rho = beta / alpha`` in Gy^-1.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

#: Tolerance on recovered sums ``sum(d)`` and ``sum(d**2)``.
EPS_REC = 1e-6
#: Relative tolerance under which an OAR constraint counts as satisfied.
EPS_FEAS = 1e-9


class FraxoptError(Exception):
    """Base class for package errors."""


class InputError(FraxoptError, ValueError):
    """Invalid user input."""


class ConsistencyError(FraxoptError, RuntimeError):
    """An internal invariant failed (signals a solver bug)."""


class InfeasibleProblemError(FraxoptError):
    """No fraction count admits a feasible schedule."""


class Regime(str, enum.Enum):
    SINGLE = "SingleDosage"
    EQUAL = "EqualDosage"
    UNEQUAL = "UnequalDosage"
    ZERO = "Zero"


@dataclass(frozen=True)
class TumorParams:
    alpha0: float
    beta0: float

    def __post_init__(self):
        if not (self.alpha0 > 0 and self.beta0 > 0):
            raise InputError(f"tumor alpha0 and beta0 must be positive, got {self.alpha0}, {self.beta0}")

    def scaled(self, factor: float) -> "TumorParams":
        return TumorParams(self.alpha0 * factor, self.beta0 * factor)


@dataclass(frozen=True)
class ProliferationParams:
    t_lag: int
    t_double: float

    def __post_init__(self):
        if self.t_lag < 0 or int(self.t_lag) != self.t_lag:
            raise InputError(f"t_lag must be a nonnegative integer, got {self.t_lag}")
        if not self.t_double > 0:
            raise InputError(f"t_double must be positive, got {self.t_double}")


@dataclass(frozen=True)
class OarSpec:
    """One organ-at-risk.

    ``rho_min`` may be zero: a 100% uncertainty level puts the lower end of
    the interval at ``(1 - 1) * rho``.
    """

    name: str
    rho_nominal: float
    tolerance_dose: float
    conventional_fractions: int
    rho_min: Optional[float] = None
    rho_max: Optional[float] = None

    def __post_init__(self):
        if self.rho_min is None:
            object.__setattr__(self, "rho_min", self.rho_nominal)
        if self.rho_max is None:
            object.__setattr__(self, "rho_max", self.rho_nominal)
        if not (0 <= self.rho_min <= self.rho_nominal <= self.rho_max < math.inf):
            raise InputError(
                f"OAR {self.name!r}: need 0 <= rho_min <= rho_nominal <= rho_max < inf, "
                f"got {self.rho_min}, {self.rho_nominal}, {self.rho_max}"
            )
        if self.rho_nominal <= 0:
            raise InputError(f"OAR {self.name!r}: rho_nominal must be positive")
        if not self.tolerance_dose > 0:
            raise InputError(f"OAR {self.name!r}: tolerance_dose must be positive")
        if self.conventional_fractions < 1 or int(self.conventional_fractions) != self.conventional_fractions:
            raise InputError(f"OAR {self.name!r}: conventional_fractions must be an integer >= 1")

    @property
    def conventional_y(self) -> float:
        """``D**2 / N_m``: sum of squared doses of the conventional schedule."""
        return self.tolerance_dose**2 / self.conventional_fractions

    @property
    def rho_mean(self) -> float:
        return 0.5 * (self.rho_max + self.rho_min)

    @property
    def rho_range(self) -> float:
        return 0.5 * (self.rho_max - self.rho_min)

    def bed_limit(self, rho: Optional[float] = None) -> float:
        """Tolerated BED ``D + rho * D**2 / N_m`` (nominal rho by default)."""
        if rho is None:
            rho = self.rho_nominal
        return self.tolerance_dose + rho * self.conventional_y

    @property
    def rc_plus(self) -> float:
        return self.bed_limit(self.rho_max)

    @property
    def rc_minus(self) -> float:
        return self.bed_limit(self.rho_min)

    @property
    def rc_mean(self) -> float:
        return self.bed_limit(self.rho_mean)

    def with_interval(self, delta: float) -> "OarSpec":
        """Interval ``[(1 - delta) rho, (1 + delta) rho]`` around the nominal value."""
        if not 0 <= delta <= 1:
            raise InputError(f"uncertainty level delta must lie in [0, 1], got {delta}")
        return replace(self, rho_min=(1 - delta) * self.rho_nominal, rho_max=(1 + delta) * self.rho_nominal)


@dataclass(frozen=True)
class ProblemInstance:
    tumor: TumorParams
    proliferation: ProliferationParams
    oars: tuple
    n_max: int = 100

    def __post_init__(self):
        object.__setattr__(self, "oars", tuple(self.oars))
        if not self.oars:
            raise InputError("at least one OAR is required")
        if self.n_max < 1 or int(self.n_max) != self.n_max:
            raise InputError(f"n_max must be an integer >= 1, got {self.n_max}")

    @property
    def n_oars(self) -> int:
        return len(self.oars)

    def with_uncertainty(self, delta: float) -> "ProblemInstance":
        return replace(self, oars=tuple(o.with_interval(delta) for o in self.oars))

    def with_tumor_uncertainty(self, theta: float) -> "ProblemInstance":
        """Worst-case tumor parameters ``(1 - theta) * (alpha0, beta0)``."""
        if not 0 <= theta < 1:
            raise InputError(f"tumor uncertainty theta must lie in [0, 1), got {theta}")
        return replace(self, tumor=self.tumor.scaled(1 - theta))

    def with_proliferation(self, t_lag: int, t_double: float) -> "ProblemInstance":
        return replace(self, proliferation=ProliferationParams(t_lag, t_double))


@dataclass(frozen=True)
class DoseSchedule:
    n: int
    doses: tuple
    regime: Regime

    def __post_init__(self):
        object.__setattr__(self, "doses", tuple(float(d) for d in self.doses))
        if len(self.doses) != self.n or self.n < 1:
            raise InputError(f"schedule has {len(self.doses)} doses for n={self.n}")
        if any(d < 0 for d in self.doses):
            raise InputError("doses must be nonnegative")

    @classmethod
    def uniform(cls, dose: float, n: int) -> "DoseSchedule":
        regime = Regime.ZERO if dose == 0 else (Regime.SINGLE if n == 1 else Regime.EQUAL)
        return cls(n, (dose,) * n, regime)

    @property
    def total_dose(self) -> float:
        """``x = sum(d)``."""
        return math.fsum(self.doses)

    @property
    def sum_squares(self) -> float:
        """``y = sum(d**2)``."""
        return math.fsum(d * d for d in self.doses)

    @property
    def dose_q(self) -> float:
        return self.doses[0]

    @property
    def dose_p(self) -> float:
        return self.doses[-1]


@dataclass(frozen=True)
class SolveReport:
    schedule: DoseSchedule
    objective: float
    x_star: float
    y_star: float
    subproblem_k: Optional[int] = None
    #: best objective for each fraction count tried, index ``n - 1``
    per_n_objective: tuple = ()
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def n_star(self) -> int:
        return self.schedule.n


@dataclass(frozen=True)
class FeasibilityReport:
    violation_pct: tuple
    feasible: bool

    @property
    def max_violation_pct(self) -> float:
        return max(self.violation_pct)


def proliferation_penalty(prolif: ProliferationParams, n: int) -> float:
    """Tumor repopulation ``[(n - 1) - t_lag]^+ * ln 2 / t_double``."""
    if n < 1:
        raise InputError(f"fraction count must be >= 1, got {n}")
    return max(0, (n - 1) - prolif.t_lag) * math.log(2) / prolif.t_double


def tumor_be(tumor: TumorParams, prolif: ProliferationParams, schedule: DoseSchedule) -> float:
    return (
        tumor.alpha0 * schedule.total_dose
        + tumor.beta0 * schedule.sum_squares
        - proliferation_penalty(prolif, schedule.n)
    )


def bed_delivered(rho: float, schedule: DoseSchedule) -> float:
    return schedule.total_dose + rho * schedule.sum_squares


def violation_fractions(oars: Sequence[OarSpec], x: float, y: float, rhos) -> np.ndarray:
    """Relative BED excess ``max(0, (BED(rho) - limit(rho)) / limit(rho))``.

    ``rhos`` may be one vector (one entry per OAR) or a matrix with one
    scenario per row; the result has the same shape.
    """
    rhos = np.asarray(rhos, dtype=float)
    tol_dose = np.array([o.tolerance_dose for o in oars])
    conv_y = np.array([o.conventional_y for o in oars])
    limit = tol_dose + rhos * conv_y
    delivered = x + rhos * y
    return np.maximum(0.0, (delivered - limit) / limit)


def check_feasibility(instance: ProblemInstance, schedule: DoseSchedule, realized_rhos) -> FeasibilityReport:
    rhos = np.asarray(realized_rhos, dtype=float)
    if rhos.shape != (instance.n_oars,):
        raise InputError(f"expected {instance.n_oars} realized rho values, got shape {rhos.shape}")
    if np.any(rhos < 0):
        raise InputError("realized rho values must be nonnegative")
    frac = violation_fractions(instance.oars, schedule.total_dose, schedule.sum_squares, rhos)
    return FeasibilityReport(
        violation_pct=tuple(float(v) for v in 100.0 * frac),
        feasible=bool(np.all(frac <= EPS_FEAS)),
    )
