"""Complex momenta on the fixed-energy varieties.

For ``d = 2`` the variety ``k1**2 + k2**2 = E`` (``E > 0``) is the punctured
plane in the coordinate ``lam``::

    k1 = (1/lam + lam) * sqrt(E) / 2
    k2 = (1/lam - lam) * 1j * sqrt(E) / 2

and ``|lam| = 1`` is the circle of real momenta.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import VarietyError

REL_TOL = 1e-10
ABS_TOL = 1e-12


def _close(lhs: complex, rhs: complex, scale: float = 1.0) -> bool:
    return abs(lhs - rhs) <= ABS_TOL + REL_TOL * max(scale, abs(lhs), abs(rhs))


@dataclass(frozen=True)
class ComplexMomentum:
    """A point ``k = a + i b`` of ``C^d`` stored by real and imaginary parts."""

    re: np.ndarray
    im: np.ndarray

    def __post_init__(self):
        re = np.asarray(self.re, dtype=float).reshape(-1)
        im = np.asarray(self.im, dtype=float).reshape(-1)
        if re.shape != im.shape or re.size not in (2, 3):
            raise VarietyError(f"momentum must be a 2- or 3-vector, got shapes {re.shape}, {im.shape}")
        if not (np.all(np.isfinite(re)) and np.all(np.isfinite(im))):
            raise VarietyError("momentum components must be finite")
        object.__setattr__(self, "re", re)
        object.__setattr__(self, "im", im)

    @classmethod
    def from_complex(cls, k) -> "ComplexMomentum":
        k = np.asarray(k, dtype=complex)
        return cls(k.real, k.imag)

    @property
    def dimension(self) -> int:
        return self.re.size

    @property
    def k(self) -> np.ndarray:
        return self.re + 1j * self.im

    @property
    def square(self) -> complex:
        """Bilinear square ``k . k`` (no conjugation)."""
        return complex(self.k @ self.k)

    @property
    def im_norm(self) -> float:
        return float(np.linalg.norm(self.im))

    @property
    def re_norm(self) -> float:
        return float(np.linalg.norm(self.re))

    @property
    def is_real(self) -> bool:
        return self.im_norm <= ABS_TOL

    def on_variety(self, E: float) -> bool:
        """True iff ``a.b = 0`` and ``|a|^2 - |b|^2 = E`` within tolerance."""
        a2 = float(self.re @ self.re)
        b2 = float(self.im @ self.im)
        ab = float(self.re @ self.im)
        scale = a2 + b2 + abs(E)
        return _close(ab, 0.0, scale) and _close(a2 - b2, E, scale)

    def require_on_variety(self, E: float) -> None:
        if not self.on_variety(E):
            raise VarietyError(f"k = {self.k} is not on Sigma_E for E = {E} (k.k = {self.square})")

    def __neg__(self) -> "ComplexMomentum":
        return ComplexMomentum(-self.re, -self.im)

    def conj(self) -> "ComplexMomentum":
        return ComplexMomentum(self.re, -self.im)


@dataclass(frozen=True)
class RealLimitMomentum:
    """Real momentum ``k'`` approached from the direction ``gamma`` (``k' + i0 gamma``)."""

    k_prime: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        kp = np.asarray(self.k_prime, dtype=float).reshape(-1)
        g = np.asarray(self.gamma, dtype=float).reshape(-1)
        if kp.shape != g.shape or kp.size not in (2, 3):
            raise VarietyError("k_prime and gamma must be matching 2- or 3-vectors")
        if not _close(float(np.linalg.norm(g)), 1.0):
            raise VarietyError(f"gamma must be a unit vector, |gamma| = {np.linalg.norm(g)}")
        kn = float(np.linalg.norm(kp))
        if kn == 0.0:
            raise VarietyError("k_prime must be nonzero")
        if not _close(float(kp @ g), 0.0, kn):
            raise VarietyError(f"k_prime . gamma = {kp @ g} must vanish")
        object.__setattr__(self, "k_prime", kp)
        object.__setattr__(self, "gamma", g)

    @property
    def dimension(self) -> int:
        return self.k_prime.size

    @property
    def energy(self) -> float:
        return float(self.k_prime @ self.k_prime)

    def approach(self, eps: float) -> ComplexMomentum:
        """Point of ``Sigma_E`` at distance ``eps`` along ``gamma``.

        The real part is stretched so the result keeps ``k^2 = E`` exactly.
        """
        E = self.energy
        khat = self.k_prime / np.linalg.norm(self.k_prime)
        return ComplexMomentum(np.sqrt(E + eps * eps) * khat, eps * self.gamma)

    def flipped(self) -> "RealLimitMomentum":
        return RealLimitMomentum(self.k_prime, -self.gamma)


def _check_energy(E: float) -> float:
    E = float(E)
    if not np.isfinite(E) or E <= 0.0:
        raise VarietyError(f"the lambda chart needs a finite energy E > 0, got {E}")
    return E


def lambda_to_k(lam: complex, E: float) -> ComplexMomentum:
    """Map a chart coordinate ``lam != 0`` to the point of ``Sigma_E`` (d = 2)."""
    E = _check_energy(E)
    lam = complex(lam)
    if lam == 0 or not np.isfinite(lam):
        raise VarietyError("lambda must be finite and nonzero")
    r = np.sqrt(E) / 2.0
    inv = 1.0 / lam
    k = np.array([(inv + lam) * r, (inv - lam) * 1j * r])
    return ComplexMomentum.from_complex(k)


def lambda_to_k_array(lam, E: float) -> np.ndarray:
    """Vectorized chart map; returns complex momenta with shape ``lam.shape + (2,)``."""
    E = _check_energy(E)
    lam = np.asarray(lam, dtype=complex)
    if np.any(lam == 0):
        raise VarietyError("lambda must be nonzero")
    r = np.sqrt(E) / 2.0
    inv = 1.0 / lam
    return np.stack([(inv + lam) * r, (inv - lam) * 1j * r], axis=-1)


def dk_dlambda(lam: complex, E: float) -> np.ndarray:
    """Holomorphic derivative of the chart map."""
    E = _check_energy(E)
    lam = complex(lam)
    r = np.sqrt(E) / 2.0
    return np.array([(1.0 - 1.0 / lam**2) * r, (-1.0 / lam**2 - 1.0) * 1j * r])


def k_to_lambda(k: ComplexMomentum, E: float) -> complex:
    """Inverse chart: ``lam = (k1 + i k2) / sqrt(E)``."""
    E = _check_energy(E)
    if k.dimension != 2:
        raise VarietyError("the lambda chart exists only for d = 2")
    k.require_on_variety(E)
    kk = k.k
    lam = complex((kk[0] + 1j * kk[1]) / np.sqrt(E))
    if lam == 0:
        raise VarietyError("k maps to lambda = 0")
    return lam


def build_k_3d(E: float, a_dir, b_dir, b_norm: float) -> ComplexMomentum:
    """``k = sqrt(E + b_norm^2) a_dir + i b_norm b_dir`` on ``Sigma_E`` in 3D."""
    a_dir = np.asarray(a_dir, dtype=float).reshape(-1)
    b_dir = np.asarray(b_dir, dtype=float).reshape(-1)
    if a_dir.size != 3 or b_dir.size != 3:
        raise VarietyError("directions must be 3-vectors")
    for name, v in (("a_dir", a_dir), ("b_dir", b_dir)):
        if not _close(float(np.linalg.norm(v)), 1.0):
            raise VarietyError(f"{name} must be a unit vector")
    if abs(float(a_dir @ b_dir)) > 1e-10:
        raise VarietyError(f"directions must be orthogonal, a.b = {a_dir @ b_dir}")
    b_norm = float(b_norm)
    if b_norm < 0:
        raise VarietyError("b_norm must be nonnegative")
    re2 = float(E) + b_norm * b_norm
    if re2 <= 0:
        raise VarietyError(f"E + b_norm^2 = {re2} must be positive")
    return ComplexMomentum(np.sqrt(re2) * a_dir, b_norm * b_dir)


def validate_pair_theta(k: ComplexMomentum, l: ComplexMomentum, E: float) -> bool:
    """Membership of ``(k, l)`` in ``{Im k = Im l, k^2 = l^2 = E}``."""
    if k.dimension != l.dimension:
        return False
    scale = 1.0 + k.im_norm + l.im_norm
    if not np.all(np.abs(k.im - l.im) <= ABS_TOL + REL_TOL * scale):
        return False
    return k.on_variety(E) and l.on_variety(E)


def orthonormal_frame(k: ComplexMomentum):
    """Unit vectors along ``Im k`` and ``Re k`` (the latter completed if ``Re k = 0``)."""
    b = k.im / k.im_norm
    if k.re_norm > 0:
        a = k.re / k.re_norm
    else:
        trial = np.zeros_like(b)
        trial[np.argmin(np.abs(b))] = 1.0
        a = trial - (trial @ b) * b
        a /= np.linalg.norm(a)
    return b, a
