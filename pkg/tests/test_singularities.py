import numpy as np
import pytest

from faddeev.errors import BracketError
from faddeev.geometry import lambda_to_k
from faddeev.singularities import (GridSpec, det_at_real_singularity, extract_zero_curves, figure_preset,
                                   real_singularity_alphas, refine_zero, scan_det_grid, split_alphas,
                                   symmetry_residual)
from faddeev.solver import PotentialConfig, det_A

SMALL = GridSpec(0.1, 10.0, 80, 120)


@pytest.fixture(scope="module")
def fig1_scan():
    cfg, _ = figure_preset(1)
    return cfg, scan_det_grid(cfg, SMALL, workers=1)


def test_presets():
    for i in (1, 2, 3, 4):
        cfg, grid = figure_preset(i)
        assert cfg.dimension == 2 and cfg.n == 2
        assert (grid.n_r, grid.n_theta) == (400, 720)
    with pytest.raises(ValueError):
        figure_preset(0)


def test_scan_matches_pointwise_det(fig1_scan):
    cfg, scan = fig1_scan
    lam = scan.lambdas
    for i, j in [(3, 5), (40, 17), (70, 100)]:
        assert np.isclose(scan.values[i, j], det_A(cfg, lambda_to_k(lam[i, j], cfg.energy)).real,
                          rtol=1e-9, atol=1e-12)


def test_det_is_real_and_symmetric(fig1_scan):
    _, scan = fig1_scan
    assert scan.reality_residual < 1e-12
    assert symmetry_residual(scan) < 1e-10


def test_unit_circle_is_flagged(fig1_scan):
    _, scan = fig1_scan
    on_circle = np.isclose(scan.spec.radii, 1.0)
    assert not np.any(on_circle) or np.all(scan.flags[on_circle] != 0)


def test_curves_are_refined(fig1_scan):
    _, scan = fig1_scan
    curves = extract_zero_curves(scan)
    assert len(curves.curves) > 0
    assert curves.max_residual <= 1e-8
    obj = curves.to_json_obj(1, scan.config)
    assert obj["preset"] == 1 and "unit_circle" in obj["annotations"]
    for c in curves.curves:
        assert np.all(np.abs(np.abs(c) - 1) > 1e-6)


def test_grid_csv(fig1_scan):
    _, scan = fig1_scan
    lines = scan.to_csv().splitlines()
    assert lines[0] == "re_lambda,im_lambda,detA_re,detA_im_residual,flag"
    assert len(lines) == 1 + SMALL.n_r * SMALL.n_theta
    float(lines[1].split(",")[0])


def test_scan_is_worker_independent(fig1_scan):
    cfg, scan = fig1_scan
    other = scan_det_grid(cfg, SMALL, workers=2)
    assert other.to_csv() == scan.to_csv()


def test_refine_zero(fig1_scan):
    cfg, scan = fig1_scan
    c = extract_zero_curves(scan).curves[0]
    lam = refine_zero(cfg, c[len(c) // 2] * 1.001)
    assert abs(det_A(cfg, lambda_to_k(lam, cfg.energy))) <= 1e-8
    far = PotentialConfig.from_points(2, 4.0, [((0, 0), 0.01), ((0.5, 0), 0.01)])
    with pytest.raises(BracketError):
        refine_zero(far, 2.0)


def test_real_singularity_construction(rng):
    for _ in range(3):
        z1, z2 = rng.normal(size=3), rng.normal(size=3)
        kp = 2.0 * np.array([1.0, 0.0, 0.0])
        gamma = np.array([0.0, np.cos(0.4), np.sin(0.4)])
        prod = real_singularity_alphas(z1, z2, kp, gamma)
        det = det_at_real_singularity(z1, z2, kp, gamma, split_alphas(prod))
        assert abs(det) <= 1e-8


def test_grid_spec_validation():
    with pytest.raises(ValueError):
        GridSpec(1.0, 0.5)
    with pytest.raises(ValueError):
        GridSpec(0.1, 10, 1, 10)
