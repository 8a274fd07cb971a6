"""Estimator-style front end for the nominal and robust solvers.

``fit`` takes a :class:`~fraxopt.model.ProblemInstance` and solves it. The
fitted estimator then scores realized OAR ratio scenarios: ``transform``
gives per-OAR BED violations in percent, ``predict`` gives feasibility flags
and ``score`` the feasible fraction. Hyperparameters follow the scikit-learn
conventions, so ``get_params``/``set_params``/``clone`` work as usual.

>>> from fraxopt import RobustFractionation, head_and_neck
>>> est = RobustFractionation(delta=0.5).fit(head_and_neck(t_lag=7, t_double=10))
>>> est.n_star_, round(est.schedule_.dose_p, 2)
(17, 1.34)
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import nominal, robust
from ._validation import check_fraction, check_instance, check_rhos
from .model import EPS_FEAS, violation_fractions


class _FractionationEstimator(BaseEstimator):
    def _prepare(self, instance):
        instance = check_instance(instance)
        theta = check_fraction(self.theta, "theta", upper_open=True)
        if theta:
            instance = instance.with_tumor_uncertainty(theta)
        return instance

    def _solve(self, instance):
        raise NotImplementedError

    def fit(self, instance, y=None):
        """Solve ``instance``; ``y`` is ignored."""
        instance = self._prepare(instance)
        report = self._solve(instance)
        self.instance_ = instance
        self.report_ = report
        self.schedule_ = report.schedule
        self.objective_ = report.objective
        self.n_star_ = report.n_star
        return self

    def transform(self, rhos):
        """Per-OAR relative BED violation (%) for each scenario row of ``rhos``."""
        check_is_fitted(self, "report_")
        R = check_rhos(rhos, self.instance_.n_oars)
        s = self.schedule_
        return 100.0 * violation_fractions(self.instance_.oars, s.total_dose, s.sum_squares, R)

    def predict(self, rhos):
        """``True`` where the fitted schedule is feasible under the scenario."""
        return np.all(self.transform(rhos) <= 100.0 * EPS_FEAS, axis=1)

    def score(self, rhos, y=None):
        return float(np.mean(self.predict(rhos)))


class NominalFractionation(_FractionationEstimator):
    """Optimal schedule at the nominal OAR ratios.

    Parameters
    ----------
    theta : float
        Tumor uncertainty level; ``alpha0`` and ``beta0`` are scaled by
        ``1 - theta`` (their worst case) before solving.
    n_values : iterable of int, optional
        Fraction counts to search; ``None`` means ``1..n_max``.
    tie_break : {"largest", "smallest"}
        Fraction count kept when several attain the same objective.
    """

    def __init__(self, theta=0.0, n_values=None, tie_break="largest"):
        self.theta = theta
        self.n_values = n_values
        self.tie_break = tie_break

    def _solve(self, instance):
        return nominal.solve_nominal(instance, self.n_values, self.tie_break)


class RobustFractionation(_FractionationEstimator):
    """Schedule feasible for every OAR ratio in its uncertainty interval.

    Parameters
    ----------
    delta : float, optional
        If given, every OAR interval is reset to
        ``[(1 - delta) rho, (1 + delta) rho]``; otherwise the intervals stored
        in the instance are used.
    theta, n_values, tie_break
        As for :class:`NominalFractionation`.
    """

    def __init__(self, delta=None, theta=0.0, n_values=None, tie_break="largest"):
        self.delta = delta
        self.theta = theta
        self.n_values = n_values
        self.tie_break = tie_break

    def _prepare(self, instance):
        instance = super()._prepare(instance)
        if self.delta is not None:
            instance = instance.with_uncertainty(check_fraction(self.delta, "delta"))
        return instance

    def _solve(self, instance):
        return robust.solve_robust(instance, self.n_values, self.tie_break)
