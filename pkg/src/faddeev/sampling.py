"""Seeded sampling of admissible evaluation points for the checks."""

from __future__ import annotations

import numpy as np

from .errors import FaddeevError
from .geometry import build_k_3d, lambda_to_k
from .solver import PotentialConfig, solve_coefficients


def random_unit(rng: np.random.Generator, d: int) -> np.ndarray:
    v = rng.normal(size=d)
    return v / np.linalg.norm(v)


def orthogonal_unit(rng: np.random.Generator, u: np.ndarray) -> np.ndarray:
    """Random unit vector orthogonal to the unit vector ``u``."""
    while True:
        v = rng.normal(size=u.size)
        v -= (v @ u) * u
        n = np.linalg.norm(v)
        if n > 1e-6:
            return v / n


def random_complex_k(rng: np.random.Generator, E: float, d: int, s_range=(0.2, 3.0)):
    """Random point of ``Sigma_E`` off the real momenta."""
    if d == 2:
        while True:
            r = np.exp(rng.uniform(np.log(0.25), np.log(4.0)))
            if abs(r - 1) > 0.05:
                return lambda_to_k(r * np.exp(1j * rng.uniform(0, 2 * np.pi)), E)
    a = random_unit(rng, 3)
    return build_k_3d(E, a, orthogonal_unit(rng, a), rng.uniform(*s_range))


def random_x(rng: np.random.Generator, config: PotentialConfig, min_dist: float = 0.5, spread: float = 1.5):
    """Random point near the support of the potential, at least ``min_dist`` from every point."""
    lo = config.z.min(axis=0) - spread
    hi = config.z.max(axis=0) + spread
    while True:
        x = rng.uniform(lo, hi)
        if np.min(np.linalg.norm(config.z - x, axis=-1)) > min_dist:
            return x


def admissible_lambdas(config: PotentialConfig, rng: np.random.Generator, count: int,
                       r_range=(0.3, 3.0), min_det: float = 1e-3, max_cond: float = 1e4):
    """Random ``lam`` away from the unit circle and from the singular curves."""
    out = []
    tries = 0
    while len(out) < count:
        tries += 1
        if tries > 200 * count:
            raise RuntimeError("could not find enough admissible lambda samples")
        r = np.exp(rng.uniform(np.log(r_range[0]), np.log(r_range[1])))
        if abs(r - 1) < 0.1:
            continue
        lam = complex(r * np.exp(1j * rng.uniform(0, 2 * np.pi)))
        try:
            sol = solve_coefficients(config, lambda_to_k(lam, config.energy))
            # the dbar right side also needs the reflected momentum -conj(k)
            sol2 = solve_coefficients(config, lambda_to_k(-1 / np.conj(lam), config.energy))
        except FaddeevError:
            continue
        if min(abs(sol.detA), abs(sol2.detA)) < min_det or max(sol.condition_estimate, sol2.condition_estimate) > max_cond:
            continue
        out.append(lam)
    return out
