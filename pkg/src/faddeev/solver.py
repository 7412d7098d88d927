"""Multipoint potentials: the coefficient system and the eigenfunctions it yields.

For points ``z_j`` with strengths ``alpha_j`` the eigenfunctions are

    psi(x, k) = e^{ikx} + sum_j C_j(k) G_reg(x - z_j, k),     A C = B,

with ``B_m = e^{ikz_m}``, off-diagonal ``A_mj = -G_reg(z_m - z_j, k)`` and a
diagonal ``1/alpha_m + const`` fixed by the regime:

==========  ===============================  ==============================
regime      d = 3                            d = 2
==========  ===============================  ==============================
complex     ``1/a - |Im k|/(4 pi)``          ``1/a - ln(|Re k|+|Im k|)/(2 pi)``
gamma       ``1/a``                          ``1/a - ln|k|/(2 pi)``
plus        ``1/a + i|k|/(4 pi)``            ``1/a + (pi i - 2 ln|k|)/(4 pi)``
==========  ===============================  ==============================

``G_reg`` is the Faddeev ``G`` (complex), ``G_gamma`` (gamma) or ``G^+``
(plus).  For complex ``k`` the entries of ``A`` scale like ``e^{|Im k||z|}``,
so the solve runs on the similar matrix ``M = D^{-1} A D`` with
``D = diag(e^{ikz_m})``: ``M_mj = -g(z_m - z_j)``, ``M c = 1`` and
``C = D c``.  ``det M = det A``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SpectralSingularity, VarietyError
from .geometry import ComplexMomentum, RealLimitMomentum, _close
from .green import eval_G, eval_g, faddeev_G, limit_G, outgoing_G
from .quadrature import DEFAULT_SPEC, QuadratureSpec

REGIMES = ("complex", "gamma", "plus")
SINGULAR_REL = 1e-8
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class PotentialConfig:
    """Point interactions ``(z_j, alpha_j)`` in dimension ``d`` at energy ``E``."""

    dimension: int
    energy: float
    z: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        d = int(self.dimension)
        if d not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.dimension}")
        z = np.asarray(self.z, dtype=float).reshape(-1, d) if np.size(self.z) else np.zeros((0, d))
        alpha = np.asarray(self.alpha, dtype=float).reshape(-1)
        if z.shape[0] != alpha.size:
            raise ValueError("need one strength per point")
        if alpha.size < 1:
            raise ValueError("at least one point is required")
        if not (np.all(np.isfinite(z)) and np.all(np.isfinite(alpha)) and np.isfinite(self.energy)):
            raise ValueError("points, strengths and energy must be finite")
        diff = z[:, None, :] - z[None, :, :]
        dist = np.linalg.norm(diff, axis=-1) + np.eye(alpha.size)
        if np.any(dist == 0):
            raise ValueError("points must be distinct")
        object.__setattr__(self, "dimension", d)
        object.__setattr__(self, "energy", float(self.energy))
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "alpha", alpha)

    @classmethod
    def from_points(cls, dimension, energy, points):
        """Build from a sequence of ``(z, alpha)`` pairs."""
        z = [p[0] for p in points]
        a = [p[1] for p in points]
        return cls(dimension, energy, np.array(z, dtype=float), np.array(a, dtype=float))

    @classmethod
    def from_dict(cls, data: dict) -> "PotentialConfig":
        return cls.from_points(data["dimension"], data["energy"],
                               [(p["z"], p["alpha"]) for p in data["points"]])

    def to_dict(self) -> dict:
        return {"dimension": self.dimension, "energy": self.energy,
                "points": [{"z": [float(v) for v in zj], "alpha": float(a)}
                           for zj, a in zip(self.z, self.alpha)]}

    @property
    def n(self) -> int:
        return self.alpha.size

    @property
    def active(self) -> np.ndarray:
        """Indices of the points with ``alpha != 0``; the others are inert."""
        return np.flatnonzero(self.alpha != 0)

    def translated(self, t) -> "PotentialConfig":
        return PotentialConfig(self.dimension, self.energy, self.z + np.asarray(t, float), self.alpha)

    def permuted(self, order) -> "PotentialConfig":
        order = np.asarray(order)
        return PotentialConfig(self.dimension, self.energy, self.z[order], self.alpha[order])


@dataclass(frozen=True)
class SystemMatrix:
    """``A`` and ``B`` restricted to the active points, plus the balanced matrix ``M``."""

    entries: np.ndarray
    rhs: np.ndarray
    balanced: np.ndarray
    phases: np.ndarray
    regime: str
    k: object
    active: np.ndarray
    scale: float = 1.0  # row-sum norm of |M| before the diagonal cancellation


@dataclass(frozen=True)
class CoefficientSolution:
    C: np.ndarray
    c: np.ndarray
    detA: complex
    condition_estimate: float
    regime: str
    residual: float
    system: SystemMatrix = field(repr=False)


@dataclass(frozen=True)
class ScatteringData:
    kind: str  # h | h_gamma | f | H | H_gamma
    value: complex
    momenta: tuple


@dataclass(frozen=True)
class PsiEvaluation:
    psi: np.ndarray
    mu: np.ndarray


def _check_regime(regime: str) -> str:
    if regime not in REGIMES:
        raise ValueError(f"regime must be one of {REGIMES}, got {regime!r}")
    return regime


def normalize_momentum(config: PotentialConfig, k, regime: str):
    """Validate ``k`` for ``regime`` and return it in canonical form.

    complex: :class:`ComplexMomentum` on ``Sigma_E`` with ``Im k != 0``;
    gamma: :class:`RealLimitMomentum` with ``k'^2 = E``; plus: real vector
    with ``k^2 = E``.
    """
    _check_regime(regime)
    d, E = config.dimension, config.energy
    if regime == "complex":
        k = k if isinstance(k, ComplexMomentum) else ComplexMomentum.from_complex(k)
        if k.dimension != d:
            raise VarietyError("momentum dimension does not match the configuration")
        k.require_on_variety(E)
        if k.is_real:
            raise VarietyError("complex regime needs Im k != 0")
        return k
    if regime == "gamma":
        if not isinstance(k, RealLimitMomentum):
            raise VarietyError("gamma regime needs a RealLimitMomentum")
        if k.dimension != d or not _close(k.energy, E):
            raise VarietyError(f"k'^2 = {k.energy} does not match E = {E}")
        return k
    kr = np.asarray(k)
    if np.iscomplexobj(kr):
        if np.any(np.abs(kr.imag) > 0):
            raise VarietyError("plus regime needs a real momentum")
        kr = kr.real
    kr = np.asarray(kr, dtype=float).reshape(-1)
    if kr.size != d or not _close(float(kr @ kr), E):
        raise VarietyError(f"k^2 = {kr @ kr} does not match E = {E}")
    return kr


def _plane_k(k, regime) -> np.ndarray:
    """The vector ``k`` entering the plane wave ``e^{ikx}``."""
    if regime == "complex":
        return k.k
    if regime == "gamma":
        return k.k_prime.astype(complex)
    return np.asarray(k, dtype=complex)


def green_values(x, k, regime, spec: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray:
    """Regime Green function ``G_reg`` at the rows of ``x``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[0] == 0:
        return np.zeros(0, complex)
    if regime == "complex":
        if x.shape[0] <= 4:
            return np.array([eval_G(xi, k, spec).value for xi in x])
        return faddeev_G(x, k.k, spec)[0].astype(complex)
    if regime == "gamma":
        return limit_G(x, k.k_prime, k.gamma, spec)[0]
    return outgoing_G(x, np.broadcast_to(k, x.shape))


def reduced_green_values(x, k, regime, spec: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray:
    """``g_reg(x) = e^{-ikx} G_reg(x)``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if regime == "complex" and x.shape[0]:
        # the growth e^{x Im k} of G is cancelled inside the quadrature
        if x.shape[0] <= 4:
            return np.array([eval_g(xi, k, spec).value for xi in x])
        return np.exp(-1j * (x @ k.re)) * faddeev_G(x, k.k, spec, scaled=True)[0]
    return np.exp(-1j * (x @ _plane_k(k, regime))) * green_values(x, k, regime, spec)


def diagonal_constant(config: PotentialConfig, k, regime: str) -> complex:
    """``A_mm - 1/alpha_m``, the renormalized self-interaction."""
    d = config.dimension
    if regime == "complex":
        if d == 3:
            return -k.im_norm / (4 * np.pi)
        return -np.log(k.re_norm + k.im_norm) / (2 * np.pi)
    kap = np.sqrt(config.energy)
    if regime == "gamma":
        return 0.0 if d == 3 else -np.log(kap) / (2 * np.pi)
    if d == 3:
        return 1j * kap / (4 * np.pi)
    return (np.pi * 1j - 2 * np.log(kap)) / (4 * np.pi)


def assemble_system(config: PotentialConfig, k, regime: str = "complex",
                    spec: QuadratureSpec = DEFAULT_SPEC) -> SystemMatrix:
    """Assemble ``A`` and ``B`` over the active points.

    Points with ``alpha = 0`` are dropped first; they decouple with ``C = 0``.
    The entries of ``A`` carry the factors ``e^{ik(z_m - z_j)}`` and overflow
    to infinity once ``|Im k| |z_m - z_j|`` exceeds about 700; the balanced
    matrix ``M`` does not.
    """
    k = normalize_momentum(config, k, regime)
    act = config.active
    z = config.z[act]
    n = act.size
    kv = _plane_k(k, regime)
    with np.errstate(over="ignore", invalid="ignore"):
        phases = np.exp(1j * (z @ kv))
    M = np.zeros((n, n), dtype=complex)
    scale = 1.0
    if n:
        const = diagonal_constant(config, k, regime)
        M[np.diag_indices(n)] = 1.0 / config.alpha[act] + const
        if n > 1:
            mi, ji = np.nonzero(~np.eye(n, dtype=bool))
            M[mi, ji] = -reduced_green_values(z[mi] - z[ji], k, regime, spec)
        mag = np.abs(M)
        mag[np.diag_indices(n)] = np.abs(1.0 / config.alpha[act]) + abs(const)
        scale = float(np.max(mag.sum(axis=1)))
    with np.errstate(over="ignore", invalid="ignore"):
        A = M * np.exp(1j * ((z[:, None, :] - z[None, :, :]) @ kv))
    return SystemMatrix(A, phases.copy(), M, phases, regime, k, act, scale)


def det_A(config: PotentialConfig, k, regime: str = "complex",
          spec: QuadratureSpec = DEFAULT_SPEC) -> complex:
    """``det A(k)``; equal to 1 when every point is inert."""
    system = assemble_system(config, k, regime, spec)
    if system.balanced.size == 0:
        return 1.0 + 0j
    return complex(np.linalg.det(system.balanced))


def condition_number(M: np.ndarray) -> float:
    """2-norm condition number, infinite for an exactly singular matrix."""
    sv = np.linalg.svd(M, compute_uv=False)
    return float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")


def solve_system(config: PotentialConfig, system: SystemMatrix) -> CoefficientSolution:
    """Solve the assembled system by LU with partial pivoting."""
    M = system.balanced
    n = M.shape[0]
    C = np.zeros(config.n, dtype=complex)
    c = np.zeros(config.n, dtype=complex)
    if n == 0:
        return CoefficientSolution(C, c, 1.0 + 0j, 1.0, system.regime, 0.0, system)
    det = complex(np.linalg.det(M))
    norm = system.scale
    cond = condition_number(M)
    if not np.isfinite(det) or abs(det) < SINGULAR_REL * norm ** n:
        raise SpectralSingularity(
            f"|det A| = {abs(det):.3e} is below the singularity threshold "
            f"{SINGULAR_REL * norm ** n:.3e} (condition {cond:.3e})", det=det, condition=cond)
    ones = np.ones(n, dtype=complex)
    c_act = np.linalg.solve(M, ones)
    residual = float(np.linalg.norm(M @ c_act - ones, np.inf))
    if residual > RESIDUAL_TOL:
        raise SpectralSingularity(f"solve residual {residual:.3e} exceeds {RESIDUAL_TOL:g} "
                                  f"(condition {cond:.3e})", det=det, condition=cond)
    c[system.active] = c_act
    with np.errstate(over="ignore", invalid="ignore"):
        C[system.active] = system.phases * c_act
    return CoefficientSolution(C, c, det, cond, system.regime, residual, system)


def solve_coefficients(config: PotentialConfig, k, regime: str = "complex",
                       spec: QuadratureSpec = DEFAULT_SPEC) -> CoefficientSolution:
    """``C(k)`` with ``A C = B`` and ``c_j = e^{-ikz_j} C_j``.

    Raises
    ------
    SpectralSingularity
        If ``|det A| < 1e-8 ||M||_inf^n`` (``M`` the balanced matrix) or the
        solve residual exceeds ``1e-10``.
    """
    return solve_system(config, assemble_system(config, k, regime, spec))


def eval_psi(config: PotentialConfig, x, k, regime: str = "complex",
             spec: QuadratureSpec = DEFAULT_SPEC, solution: CoefficientSolution | None = None
             ) -> PsiEvaluation:
    """``psi(x, k)`` and ``mu = e^{-ikx} psi`` at one point or many (rows of ``x``).

    ``mu = 1 + sum_j c_j g_reg(x - z_j)`` is computed first, so ``mu`` keeps
    full accuracy when ``e^{ikx}`` is exponentially large or small.
    """
    k = normalize_momentum(config, k, regime)
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[-1] != config.dimension:
        raise ValueError("x has the wrong dimension")
    dist = np.linalg.norm(x[:, None, :] - config.z[None, :, :], axis=-1)
    if np.any(dist == 0):
        raise ValueError("psi is singular at the points z_j")
    if solution is None:
        solution = solve_coefficients(config, k, regime, spec)
    mu = np.ones(x.shape[0], dtype=complex)
    for j in config.active:
        mu += solution.c[j] * reduced_green_values(x - config.z[j], k, regime, spec)
    # far along Im k the plane wave overflows; mu stays finite and is the usable output
    with np.errstate(over="ignore", invalid="ignore"):
        psi = np.exp(1j * (x @ _plane_k(k, regime))) * mu
    if single:
        return PsiEvaluation(psi[0], mu[0])
    return PsiEvaluation(psi, mu)


def _H_sum(config: PotentialConfig, c, p) -> complex:
    p = np.asarray(p, dtype=complex).reshape(-1)
    return complex(np.sum(c * np.exp(1j * (config.z @ p)))) / (2 * np.pi) ** config.dimension


def eval_H(config: PotentialConfig, k, p, regime: str = "complex",
           spec: QuadratureSpec = DEFAULT_SPEC, solution: CoefficientSolution | None = None
           ) -> ScatteringData:
    """``H(k, p) = (2 pi)^{-d} sum_j c_j(k) e^{ipz_j}`` (``H_gamma`` in the gamma regime)."""
    k = normalize_momentum(config, k, regime)
    if regime == "plus":
        raise ValueError("H is defined for the complex and gamma regimes")
    if solution is None:
        solution = solve_coefficients(config, k, regime, spec)
    kind = "H" if regime == "complex" else "H_gamma"
    return ScatteringData(kind, _H_sum(config, solution.c, p), (_plane_k(k, regime), np.asarray(p)))


def eval_h(config: PotentialConfig, k, l, regime: str = "complex",
           spec: QuadratureSpec = DEFAULT_SPEC, solution: CoefficientSolution | None = None
           ) -> ScatteringData:
    """Generalized scattering data ``h(k, l) = H(k, k - l)``.

    complex: ``(k, l)`` on ``Theta_E`` (``Im k = Im l``, ``k^2 = l^2 = E``);
    gamma: ``h_gamma`` with real ``l``, ``l^2 = k'^2``; plus: the classical
    amplitude ``f(k, l)`` with real ``l``, ``l^2 = k^2``.
    """
    k = normalize_momentum(config, k, regime)
    E = config.energy
    if regime == "complex":
        l = l if isinstance(l, ComplexMomentum) else ComplexMomentum.from_complex(l)
        l.require_on_variety(E)
        if not np.allclose(l.im, k.im, rtol=1e-10, atol=1e-12):
            raise VarietyError("h(k, l) needs Im k = Im l")
        lv = l.k
    else:
        lv = np.asarray(l)
        if np.iscomplexobj(lv) and np.any(lv.imag != 0):
            raise VarietyError("l must be real in the gamma and plus regimes")
        lv = np.asarray(lv.real if np.iscomplexobj(lv) else lv, dtype=float).reshape(-1)
        if lv.size != config.dimension or not _close(float(lv @ lv), E):
            raise VarietyError(f"l^2 = {lv @ lv} does not match E = {E}")
        lv = lv.astype(complex)
    if solution is None:
        solution = solve_coefficients(config, k, regime, spec)
    kv = _plane_k(k, regime)
    kind = {"complex": "h", "gamma": "h_gamma", "plus": "f"}[regime]
    return ScatteringData(kind, _H_sum(config, solution.c, kv - lv), (kv, lv))
