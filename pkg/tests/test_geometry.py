import numpy as np
import pytest

from faddeev.errors import VarietyError
from faddeev.geometry import (ComplexMomentum, RealLimitMomentum, build_k_3d, dk_dlambda, k_to_lambda,
                              lambda_to_k, lambda_to_k_array, orthonormal_frame, validate_pair_theta)


@pytest.mark.parametrize("lam", [2.0, 0.5j, 0.3 - 1.7j, -4 + 0.1j])
def test_lambda_chart_lands_on_variety_and_inverts(lam):
    k = lambda_to_k(lam, 4.0)
    assert k.on_variety(4.0)
    assert abs(k_to_lambda(k, 4.0) - lam) < 1e-14 * max(1, abs(lam))


def test_unit_circle_gives_real_momentum():
    k = lambda_to_k(np.exp(0.7j), 4.0)
    assert k.is_real
    assert np.allclose(k.re, 2 * np.array([np.cos(0.7), np.sin(0.7)]))


def test_lambda_one_is_k_2_0():
    assert np.allclose(lambda_to_k(1.0, 4.0).k, [2.0, 0.0])


def test_im_k_norm_on_chart():
    lam = 3.0 * np.exp(0.4j)
    k = lambda_to_k(lam, 4.0)
    assert np.isclose(k.im_norm, (3.0 - 1 / 3.0) * 2.0 / 2)


def test_chart_array_matches_scalar():
    lam = np.array([0.5 + 0.5j, 2.0, -1j * 3])
    arr = lambda_to_k_array(lam, 5.0)
    for l, row in zip(lam, arr):
        assert np.allclose(row, lambda_to_k(l, 5.0).k)


def test_dk_dlambda_matches_difference():
    lam, h = 0.7 + 1.1j, 1e-6
    fd = (lambda_to_k(lam + h, 4.0).k - lambda_to_k(lam - h, 4.0).k) / (2 * h)
    assert np.allclose(dk_dlambda(lam, 4.0), fd, atol=1e-8)


def test_chart_rejects_bad_input():
    with pytest.raises(VarietyError):
        lambda_to_k(0.0, 4.0)
    with pytest.raises(VarietyError):
        lambda_to_k(1.0, -1.0)


def test_build_k_3d():
    k = build_k_3d(4.0, [1, 0, 0], [0, 0, 1], 1.5)
    assert k.on_variety(4.0)
    assert np.isclose(k.im_norm, 1.5)
    with pytest.raises(VarietyError):
        build_k_3d(4.0, [1, 0, 0], [1, 0, 0], 1.0)
    with pytest.raises(VarietyError):
        build_k_3d(4.0, [2, 0, 0], [0, 1, 0], 1.0)


def test_off_variety_is_detected():
    k = ComplexMomentum(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    assert not k.on_variety(4.0)
    with pytest.raises(VarietyError):
        k.require_on_variety(4.0)


def test_pair_theta():
    k = build_k_3d(4.0, [1, 0, 0], [0, 0, 1], 1.0)
    l = build_k_3d(4.0, [0, 1, 0], [0, 0, 1], 1.0)
    assert validate_pair_theta(k, l, 4.0)
    l2 = build_k_3d(4.0, [0, 1, 0], [1, 0, 0], 1.0)
    assert not validate_pair_theta(k, l2, 4.0)


def test_real_limit_momentum():
    km = RealLimitMomentum(np.array([2.0, 0.0, 0.0]), np.array([0.0, 0.0, 1.0]))
    assert np.isclose(km.energy, 4.0)
    k = km.approach(0.1)
    assert k.on_variety(4.0)
    assert np.allclose(k.im, [0, 0, 0.1])
    assert np.allclose(km.flipped().gamma, [0, 0, -1])
    with pytest.raises(VarietyError):
        RealLimitMomentum(np.array([2.0, 0.0, 0.0]), np.array([1.0, 0.0, 0.0]))


def test_frame_is_orthonormal():
    k = build_k_3d(4.0, [0, 1, 0], [0, 0, 1], 0.5)
    b, a = orthonormal_frame(k)
    assert np.isclose(a @ b, 0) and np.isclose(a @ a, 1) and np.isclose(b @ b, 1)
