import numpy as np
import pytest

from faddeev.errors import RenormalizationPole
from faddeev.geometry import build_k_3d, lambda_to_k
from faddeev.regularization import (CutoffModel, assemble_A_N, convergence_study, epsilon_of_N, fit_exponent,
                                    near_pole, renormalization_pole, solve_c_N)
from faddeev.solver import PotentialConfig


def test_epsilon_formulas():
    assert np.isclose(epsilon_of_N(2.0, 10.0, 3), 2.0 / (1 - 2.0 * 10.0 / (2 * np.pi ** 2)))
    assert np.isclose(epsilon_of_N(2.0, 10.0, 2), 2.0 / (1 - 2.0 * np.log(10.0) / (2 * np.pi)))
    assert epsilon_of_N(0.0, 10.0, 3) == 0.0
    with pytest.raises(ValueError):
        epsilon_of_N(1.0, -1.0, 3)


def test_pole_is_rejected():
    pole = renormalization_pole(3.0, 3)
    assert np.isclose(pole, 2 * np.pi ** 2 / 3.0)
    with pytest.raises(RenormalizationPole) as info:
        epsilon_of_N(3.0, pole, 3)
    assert np.isclose(info.value.pole, pole)
    assert renormalization_pole(-1.0, 3) is None


def test_near_pole_flagging():
    cfg = PotentialConfig.from_points(3, 4.0, [((0, 0, 0), 2 * np.pi ** 2 / 100.0)])
    assert near_pole(cfg, 102.0)
    assert not near_pole(cfg, 200.0)
    k = build_k_3d(4.0, [1, 0, 0], [0, 1, 0], 0.5)
    rep = convergence_study(cfg, k, (50.0, 100.0, 200.0, 400.0))
    flags = [r.excluded for r in rep.rows]
    assert flags == [False, True, False, False]
    assert np.isnan(rep.rows[1].err_abs)


def test_cutoff_matrix_shape(two_point_2d):
    k = lambda_to_k(2.0 + 0.3j, 4.0)
    model = CutoffModel(two_point_2d, 40.0)
    A = assemble_A_N(model, k)
    assert A.shape == (2, 2)
    c = solve_c_N(model, k)
    assert np.allclose(A @ c, model.eps)


def test_one_point_3d_converges(one_point_3d):
    k = build_k_3d(4.0, [1, 0, 0], [0, 1, 0], 0.8)
    rep = convergence_study(one_point_3d, k, (25.0, 50.0, 100.0, 200.0))
    a = 3.0
    assert np.isclose(rep.limit[0], a / (1 - a * 0.8 / (4 * np.pi)), rtol=1e-13)
    assert rep.fitted_exponent <= -0.8
    assert rep.monotone


def test_csv_layout(one_point_3d):
    k = build_k_3d(4.0, [1, 0, 0], [0, 1, 0], 0.8)
    rep = convergence_study(one_point_3d, k, (25.0, 50.0))
    lines = rep.to_csv().splitlines()
    assert lines[0] == "N,err_abs,err_rel,excluded_flag"
    assert len(lines) == 3 and lines[1].startswith("25.0,")


def test_fit_exponent_recovers_power():
    N = np.array([25, 50, 100, 200, 400.0])
    assert np.isclose(fit_exponent(N, 3.0 / N), -1.0)
    assert np.isnan(fit_exponent([10.0], [1.0]))
