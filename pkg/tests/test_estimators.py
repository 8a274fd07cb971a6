import doctest

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from fraxopt import estimators
from fraxopt import InputError, NominalFractionation, RobustFractionation, head_and_neck


def test_params_and_clone():
    est = RobustFractionation(delta=0.3, theta=0.1)
    assert est.get_params() == {"delta": 0.3, "theta": 0.1, "n_values": None, "tie_break": "largest"}
    twin = clone(est).set_params(delta=0.6)
    assert twin.delta == 0.6 and est.delta == 0.3


def test_fit_matches_reference():
    est = RobustFractionation(delta=0.5).fit(head_and_neck(7, 10))
    assert (est.n_star_, round(est.schedule_.dose_p, 2)) == (17, 1.34)
    nom = NominalFractionation().fit(head_and_neck(7, 10))
    assert nom.objective_ >= est.objective_


def test_tumor_uncertainty():
    est = RobustFractionation(delta=0.5, theta=0.5).fit(head_and_neck(7, 20))
    assert (est.n_star_, round(est.schedule_.dose_p, 2)) == (17, 1.34)


def test_transform_predict_score():
    inst = head_and_neck(7, 2)
    rob = RobustFractionation(delta=0.5).fit(inst)
    nom = NominalFractionation().fit(inst)
    upper = [1.5 * o.rho_nominal for o in inst.oars]
    assert rob.transform(upper).shape == (1, 4)
    assert rob.predict([upper, [o.rho_nominal for o in inst.oars]]).tolist() == [True, True]
    assert nom.score([upper]) == 0.0
    assert np.all(nom.transform([upper]) >= 0)


def test_not_fitted_and_bad_input():
    with pytest.raises(NotFittedError):
        NominalFractionation().predict([[0.1] * 4])
    est = NominalFractionation().fit(head_and_neck())
    with pytest.raises(InputError):
        est.transform([[0.1, 0.2]])
    with pytest.raises(InputError):
        est.transform([[-0.1] * 4])
    with pytest.raises(ValueError):
        est.transform([[np.nan] * 4])
    with pytest.raises(InputError):
        RobustFractionation(delta=1.5).fit(head_and_neck())
    with pytest.raises(InputError):
        NominalFractionation().fit("not an instance")


def test_module_example():
    assert doctest.testmod(estimators).failed == 0
