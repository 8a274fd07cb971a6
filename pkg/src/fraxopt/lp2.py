"""Exact maximizer for linear programs in two variables.

Every LP in this package has at most a dozen half-plane constraints, so the
solver enumerates all pairwise boundary intersections instead of pivoting.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .model import InputError

EPS_LP = 1e-9
# relative window inside which two vertex objectives count as tied
_TIE = 1e-12


class LpStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


@dataclass(frozen=True)
class HalfPlane:
    """The set ``a * x + b * y <= c``."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        if self.a == 0 and self.b == 0:
            raise InputError("half-plane needs a nonzero normal (a, b)")


@dataclass(frozen=True)
class PlanarLp:
    """Maximize ``cx * x + cy * y`` over an intersection of half-planes."""

    objective: tuple
    constraints: tuple

    def __post_init__(self):
        object.__setattr__(self, "objective", tuple(float(v) for v in self.objective))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if len(self.objective) != 2:
            raise InputError("objective must have two coefficients")
        if not self.constraints:
            raise InputError("a planar LP needs at least one constraint")

    def arrays(self):
        A = np.array([[h.a, h.b] for h in self.constraints], dtype=float)
        c = np.array([h.c for h in self.constraints], dtype=float)
        return A, c


@dataclass(frozen=True)
class LpOutcome:
    status: LpStatus
    x: Optional[float] = None
    y: Optional[float] = None
    objective_value: Optional[float] = None

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


def _feasible_mask(A: np.ndarray, c: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Which rows of ``pts`` (k, 2) satisfy every constraint within tolerance."""
    terms = pts[:, None, :] * A[None, :, :]
    lhs = terms.sum(axis=2)
    scale = np.maximum(1.0, np.maximum(np.abs(c)[None, :], np.abs(terms).sum(axis=2)))
    return np.all(lhs <= c[None, :] + EPS_LP * scale, axis=1)


def _vertices(A: np.ndarray, c: np.ndarray) -> np.ndarray:
    m = len(c)
    if m < 2:
        return np.empty((0, 2))
    i, j = np.array(list(itertools.combinations(range(m), 2))).T
    det = A[i, 0] * A[j, 1] - A[j, 0] * A[i, 1]
    norm = np.hypot(*A[i].T) * np.hypot(*A[j].T)
    ok = np.abs(det) > 1e-13 * norm
    i, j, det = i[ok], j[ok], det[ok]
    x = (c[i] * A[j, 1] - c[j] * A[i, 1]) / det
    y = (A[i, 0] * c[j] - A[j, 0] * c[i]) / det
    return np.column_stack([x, y])


def _has_improving_ray(A: np.ndarray, obj: np.ndarray) -> bool:
    # extreme rays of the recession cone {d : A d <= 0} are among the
    # boundary directions; the objective direction covers the half-plane case
    normals = A / np.hypot(*A.T)[:, None]
    perp = np.column_stack([-normals[:, 1], normals[:, 0]])
    cands = np.vstack([perp, -perp, obj / max(np.hypot(*obj), 1e-300)])
    in_cone = np.all(cands @ normals.T <= 1e-12, axis=1)
    gain = cands @ obj
    return bool(np.any(in_cone & (gain > 1e-12 * np.hypot(*obj))))


def _pick(points: np.ndarray, values: np.ndarray) -> int:
    """Index of the best point; ties go to the lexicographically smallest (x, y)."""
    best = values.max()
    tied = np.flatnonzero(values >= best - _TIE * max(1.0, abs(best)))
    order = np.lexsort((points[tied, 1], points[tied, 0]))
    return int(tied[order[0]])


def solve_planar_lp(lp: PlanarLp) -> LpOutcome:
    A, c = lp.arrays()
    obj = np.asarray(lp.objective)

    verts = _vertices(A, c)
    feas = verts[_feasible_mask(A, c, verts)] if len(verts) else verts
    if len(feas) == 0:
        # a nonempty region without vertices contains a line; it then also
        # contains the foot of the origin on one of its boundary lines
        feet = A * (c / (A**2).sum(axis=1))[:, None]
        cands = np.vstack([np.zeros((1, 2)), feet])
        feas = cands[_feasible_mask(A, c, cands)]
        if len(feas) == 0:
            return LpOutcome(LpStatus.INFEASIBLE)

    if np.any(obj != 0) and _has_improving_ray(A, obj):
        return LpOutcome(LpStatus.UNBOUNDED)

    values = feas @ obj
    k = _pick(feas, values)
    x, y = float(feas[k, 0]), float(feas[k, 1])
    return LpOutcome(LpStatus.OPTIMAL, x, y, float(values[k]))


def make_lp(objective: Sequence[float], rows: Sequence[Sequence[float]]) -> PlanarLp:
    """Shorthand: ``rows`` are ``(a, b, c)`` triples."""
    return PlanarLp(tuple(objective), tuple(HalfPlane(*r) for r in rows))
