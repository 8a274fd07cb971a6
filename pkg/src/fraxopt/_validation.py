"""Input validation helpers shared by the estimators and experiments."""

from __future__ import annotations

import numpy as np
from sklearn.utils import check_array

from .model import InputError, ProblemInstance


def check_instance(instance) -> ProblemInstance:
    if not isinstance(instance, ProblemInstance):
        raise InputError(f"expected a ProblemInstance, got {type(instance).__name__}")
    return instance


def check_rhos(rhos, n_oars: int) -> np.ndarray:
    """Realized ratio scenarios as a float matrix of shape ``(n_scenarios, n_oars)``.

    A single vector is treated as one scenario.
    """
    arr = np.asarray(rhos, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    arr = check_array(arr, dtype=float, ensure_all_finite=True)
    if arr.shape[1] != n_oars:
        raise InputError(f"expected {n_oars} rho values per scenario, got {arr.shape[1]}")
    if np.any(arr < 0):
        raise InputError("realized rho values must be nonnegative")
    return arr


def check_fraction(value, name: str, upper_open: bool = False) -> float:
    value = float(value)
    ok = 0 <= value < 1 if upper_open else 0 <= value <= 1
    if not ok:
        bound = "[0, 1)" if upper_open else "[0, 1]"
        raise InputError(f"{name} must lie in {bound}, got {value}")
    return value
