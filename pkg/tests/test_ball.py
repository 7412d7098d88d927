import numpy as np
import pytest

from scipy.special import roots_legendre

from faddeev.ball import cutoff_integral, segment_integral, tail_correction
from faddeev.geometry import build_k_3d, lambda_to_k


def _segment_quad(u0, u1, p, n=20000):
    t, w = roots_legendre(n)
    u = u0 + (t + 1) / 2 * (u1 - u0)
    return np.sum(w * np.exp(1j * p * u) / u) * (u1 - u0) / 2


@pytest.mark.parametrize("u0,u1,p", [
    (-3 + 0.5j, 4 + 0.5j, 2.0),
    (-3 - 0.5j, 4 - 0.5j, 2.0),
    (-3 + 0.5j, 4 + 0.5j, -1.3),
    (1 - 0.2j, 9 - 0.2j, 0.7),
    (-5 + 0.1j, -1 + 0.1j, 3.0),
    (-2 + 0.3j, 2 + 0.3j, 0.0),
    # start exactly on the cut of E1, with either sign of zero
    (complex(0.0, -5.8), complex(160.0, -5.8), 0.031),
    (complex(-0.0, -5.8), complex(160.0, -5.8), 0.031),
    (complex(0.0, 5.8), complex(160.0, 5.8), -0.031),
])
def test_segment_integral_matches_quadrature(u0, u1, p):
    assert abs(segment_integral(u0, u1, p) - _segment_quad(u0, u1, p)) < 1e-9


def test_3d_constant_at_origin():
    k = build_k_3d(4.0, [1, 0, 0], [0, 1, 0], 0.8)
    errs = []
    for N in (50.0, 100.0, 200.0):
        val = cutoff_integral(np.zeros(3), k, N)
        errs.append(abs(val - (4 * np.pi * N - 2 * np.pi ** 2 * 0.8)))
    # the remainder is O(1/N)
    assert errs[1] < 0.6 * errs[0] and errs[2] < 0.6 * errs[1]


def test_2d_constant_at_origin():
    k = lambda_to_k(2.0 * np.exp(0.4j), 4.0)
    const = 2 * np.pi * np.log(k.re_norm + k.im_norm)
    errs = []
    for N in (50.0, 100.0, 200.0):
        val = cutoff_integral(np.zeros(2), k, N)
        errs.append(abs(val - (2 * np.pi * np.log(N) - const)))
    assert errs[1] < 0.6 * errs[0] and errs[2] < 0.6 * errs[1]


def test_cutoff_integral_is_batched():
    k = lambda_to_k(1.5j, 4.0)
    x = np.array([[0.3, 0.1], [-0.2, 0.5]])
    both = cutoff_integral(x, k, 30.0)
    single = [cutoff_integral(xi, k, 30.0) for xi in x]
    assert np.allclose(both, single, rtol=1e-12)


@pytest.mark.parametrize("d", [2, 3])
def test_tail_correction_leading_term_decays(d):
    x = np.ones(d) * 0.4
    small = abs(tail_correction(x, 400.0, d))
    assert small < abs(tail_correction(x, 50.0, d))


def test_tail_correction_rejects_origin():
    with pytest.raises(ValueError):
        tail_correction(np.zeros(2), 10.0, 2)


def test_cutoff_integral_independent_of_node_parity():
    # an odd count puts a node where Re(k.omega) = 0 exactly
    k = lambda_to_k(-0.238 - 0.2j, 4.0)
    x = np.array([-0.82093494, -0.64708764])
    a = cutoff_integral(x, k, 160.0, 1337)
    b = cutoff_integral(x, k, 160.0, 2674)
    assert abs(a - b) < 1e-9 * abs(b)
