"""Faddeev, limiting and outgoing Green functions of the Helmholtz operator.

Conventions
-----------
``G(x, k) = e^{ikx} g(x, k)`` with ``(Delta + k^2) G = delta``.  For complex
``k = a + i b`` on ``Sigma_E`` the Fourier integral defining ``g`` is reduced
in a frame where ``b`` points along the last axis: the integral along ``b`` is
done by residues, the transverse part in closed form or along a steepest
descent path.  What is left is a handful of one-dimensional integrals of
smooth functions on finite intervals.  Writing ``z = x . b/|b|`` and
``kappa = sqrt(E)``, ``s = |b|``, ``A = |a|``, ``u0 = asinh(s/kappa)``:

d = 2, z >= 0 (``rho = |x|``, ``phi = atan2(z, |x.a|/A)``)::

    G = -1/(2 pi) [ int_{u0}^inf exp(-kappa rho sinh u) du
                    - int_phi^{pi/2} sin(rho A cos t) exp(-rho s sin t) dt ]

d = 2, z < 0 (``x1 = x . a/A``)::

    G = Y0(kappa rho)/4 - 1/(4 pi) int_0^pi cos(kappa x1 cos t) sin(kappa z sin t) dt
        + 1/(2 pi) int_0^{u0} cos(kappa x1 cosh u) exp(-kappa z sinh u) du

d = 3, z < 0 (``rho'`` the distance from the ``b`` axis, ``R = |x|``)::

    G = -1/(4 pi) [ cos(kappa R)/R + int_0^kappa J0(rho' sqrt(kappa^2 - w^2)) sin(w z) dw
                    - int_0^s J0(rho' sqrt(q^2 + kappa^2)) exp(-q z) dq ]

d = 3, z >= 0: the last integral above starts at ``q = s`` instead and is
rotated onto the steepest descent path of ``H0^(1)``, see :func:`_G3_upper`.

The z >= 0 forms never cancel exponentially large terms, so ``G`` keeps its
relative accuracy where it is exponentially small.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from .errors import QuadratureError, VarietyError
from .geometry import ComplexMomentum, RealLimitMomentum
from .quadrature import DEFAULT_SPEC, QuadratureSpec, integrate, panels_for

# Truncation of the exponentially decaying tails, in e-folds.
TAIL_EFOLDS = 60.0


@dataclass(frozen=True)
class GreenEvaluation:
    value: complex
    abs_error_estimate: float
    method: str  # "reduced-quadrature" | "closed-form" | "oracle"


def _finish(value, err, ok, spec, what):
    if not np.all(ok):
        bad = np.flatnonzero(~ok)
        raise QuadratureError(
            f"{what}: quadrature did not converge within {spec.max_subdivisions} panels "
            f"for {bad.size} point(s)", value=value, abs_error=err)
    return value, err


def _quad(f, lo, hi, panels, spec):
    return integrate(f, lo, hi, panels, rel_tol=spec.rel_tol, abs_tol=spec.abs_tol,
                     max_panels=spec.max_subdivisions)


def _frame(x, k):
    """Per-point invariants: kappa, s, A, z, |x.a|/A, rho, rho_perp."""
    a, b = k.real, k.imag
    s = np.linalg.norm(b, axis=-1)
    A = np.linalg.norm(a, axis=-1)
    E = A * A - s * s
    if np.any(s <= 0):
        raise VarietyError("Faddeev Green function needs Im k != 0")
    if np.any(E <= 0):
        raise VarietyError("the Green function evaluators support real E > 0 only")
    kap = np.sqrt(E)
    z = np.einsum("...i,...i->...", x, b) / s
    with np.errstate(invalid="ignore", divide="ignore"):
        x1 = np.where(A > 0, np.abs(np.einsum("...i,...i->...", x, a)) / np.where(A > 0, A, 1), 0.0)
    R = np.linalg.norm(x, axis=-1)
    rperp = np.sqrt(np.maximum(R * R - z * z, 0.0))
    if np.any(R == 0):
        raise ValueError("the Green functions are singular at x = 0")
    return kap, s, A, z, x1, R, rperp


def _G2_upper(kap, s, A, z, x1, R, spec, sc):
    """d = 2, z >= 0.  The result carries the factor ``e^{sc}``."""
    u0 = np.arcsinh(s / kap)
    umax = np.arcsinh(np.sinh(u0) + TAIL_EFOLDS / (kap * R))
    X = kap * R

    def f1(u, i):
        return np.exp(-X[i, None] * (np.sinh(u) - np.sinh(u0[i, None]))) * np.exp(sc[i, None] - s[i, None] * R[i, None])

    j1, e1, ok1 = _quad(f1, u0, umax, 4 + 4 * np.ceil(umax - u0).astype(np.int64), spec)
    phi = np.arctan2(z, x1)
    RA, Rs = R * A, R * s

    def f2(t, i):
        return np.sin(RA[i, None] * np.cos(t)) * np.exp(sc[i, None] - Rs[i, None] * np.sin(t))

    j2, e2, ok2 = _quad(f2, phi, np.full_like(phi, np.pi / 2), panels_for(np.pi / 2 - phi, RA + Rs, 2), spec)
    val = -(j1.real - j2.real) / (2 * np.pi)
    return val, (e1 + e2) / (2 * np.pi), ok1 & ok2


def _G2_lower(kap, s, A, z, x1, R, spec, sc):
    """d = 2, z < 0.  The result carries the factor ``e^{sc}``."""
    u0 = np.arcsinh(s / kap)
    kx1, kz = kap * x1, kap * z

    def f1(t, i):
        return np.cos(kx1[i, None] * np.cos(t)) * np.sin(kz[i, None] * np.sin(t))

    half = np.full_like(z, np.pi / 2)
    t1, e1, ok1 = _quad(f1, np.zeros_like(z), half, panels_for(half, kap * R, 2), spec)

    def f2(u, i):
        return np.cos(kx1[i, None] * np.cosh(u)) * np.exp(sc[i, None] - kz[i, None] * np.sinh(u))

    t2, e2, ok2 = _quad(f2, np.zeros_like(z), u0, panels_for(u0, A * (x1 - z), 2), spec)
    w = np.exp(sc)
    val = w * (special.y0(kap * R) / 4 - 2 * t1.real / (4 * np.pi)) + t2.real / (2 * np.pi)
    return val, w * 2 * e1 / (4 * np.pi) + e2 / (2 * np.pi), ok1 & ok2


def _G3_upper(kap, s, A, z, rperp, R, spec, sc):
    """d = 3, z >= 0.  The result carries the factor ``e^{sc}``.

    ``-kappa/(4 pi) Re int H0(kappa rho' cosh w) exp(-kappa z sinh w) cosh w dw``
    from ``u0`` up the imaginary direction to ``u0 + i tau`` and then out to
    ``+inf + i tau``, ``tau = atan2(rho', z)``; the second leg carries no
    oscillation.
    """
    val = np.empty_like(z)
    err = np.zeros_like(z)
    ok = np.ones(z.shape, dtype=bool)
    axis = rperp <= 1e-14 * R
    if np.any(axis):
        val[axis] = -np.exp(sc[axis] - s[axis] * z[axis]) / (4 * np.pi * z[axis])
    m = ~axis
    if not np.any(m):
        return val, err, ok
    kap, s, A, z, rperp, R, sc = (v[m] for v in (kap, s, A, z, rperp, R, sc))
    u0 = np.arcsinh(s / kap)
    tau = np.arctan2(rperp, z)

    def integrand(w, i):
        return (special.hankel1(0, kap[i, None] * rperp[i, None] * np.cosh(w))
                * np.exp(sc[i, None] - kap[i, None] * z[i, None] * np.sinh(w)) * np.cosh(w))

    def vertical(t, i):
        return (1j * integrand(u0[i, None] + 1j * t, i)).real

    v, ev, okv = _quad(vertical, np.zeros_like(tau), tau, panels_for(tau, R * (A + s), 2), spec)
    umax = np.arcsinh(np.sinh(u0) + TAIL_EFOLDS / (kap * R))

    def horizontal(u, i):
        return integrand(u + 1j * tau[i, None], i).real

    h, eh, okh = _quad(horizontal, u0, umax, 4 + 4 * np.ceil(umax - u0).astype(np.int64), spec)
    val[m] = -kap * (v.real + h.real) / (4 * np.pi)
    err[m] = kap * (ev + eh) / (4 * np.pi)
    ok[m] = okv & okh
    return val, err, ok


def _G3_lower(kap, s, A, z, rperp, R, spec, sc):
    """d = 3, z < 0.  The result carries the factor ``e^{sc}``."""

    def f1(w, i):
        return special.j0(rperp[i, None] * np.sqrt(np.maximum(kap[i, None] ** 2 - w * w, 0.0))) * np.sin(w * z[i, None])

    w1, e1, ok1 = _quad(f1, np.zeros_like(z), kap, panels_for(kap, R, 2), spec)

    def f2(q, i):
        return special.j0(rperp[i, None] * np.sqrt(q * q + kap[i, None] ** 2)) * np.exp(sc[i, None] - q * z[i, None])

    w2, e2, ok2 = _quad(f2, np.zeros_like(z), s, panels_for(s, R, 2), spec)
    w = np.exp(sc)
    val = -(w * (np.cos(kap * R) / R + w1.real) - w2.real) / (4 * np.pi)
    return val, (w * e1 + e2) / (4 * np.pi), ok1 & ok2


def faddeev_G(x, k, spec: QuadratureSpec = DEFAULT_SPEC, scaled: bool = False):
    """Batched ``G(x, k)`` for real ``x`` of shape ``(m, d)`` and complex ``k`` of shape ``(m, d)``.

    Returns the (real) values and absolute error estimates; with ``scaled``
    the values are ``e^{x Im k} G(x, k)``.

    Raises
    ------
    QuadratureError
        If any member fails to converge; see :func:`faddeev_G_flagged`.
    """
    val, err, ok = faddeev_G_flagged(x, k, spec, scaled)
    return _finish(val, err, ok, spec, "Faddeev Green function")


def faddeev_G_flagged(x, k, spec: QuadratureSpec = DEFAULT_SPEC, scaled: bool = False):
    """As :func:`faddeev_G` but returns a convergence mask instead of raising.

    With ``scaled`` the values are ``e^{x Im k} G(x, k)``, which stay bounded
    where ``G`` itself grows exponentially.
    """
    if isinstance(k, ComplexMomentum):
        k = k.k
    x = np.atleast_2d(np.asarray(x, dtype=float))
    k = np.atleast_2d(np.asarray(k, dtype=complex))
    x, k = np.broadcast_arrays(x, k)
    d = x.shape[-1]
    if d not in (2, 3):
        raise ValueError("dimension must be 2 or 3")
    kap, s, A, z, x1, R, rperp = _frame(x, k)
    val = np.empty(z.shape)
    err = np.empty(z.shape)
    ok = np.empty(z.shape, dtype=bool)
    sc = s * z if scaled else np.zeros_like(z)
    up = z >= 0
    for mask, fn in ((up, _G2_upper if d == 2 else _G3_upper), (~up, _G2_lower if d == 2 else _G3_lower)):
        if not np.any(mask):
            continue
        lateral = x1 if d == 2 else rperp
        v, e, o = fn(kap[mask], s[mask], A[mask], z[mask], lateral[mask], R[mask], spec, sc[mask])
        val[mask], err[mask], ok[mask] = v, e, o
    return val, err, ok


def _as_complex_momentum(k) -> ComplexMomentum:
    return k if isinstance(k, ComplexMomentum) else ComplexMomentum.from_complex(k)


def _key(arr):
    return tuple(float(v) for v in np.asarray(arr).reshape(-1))


@lru_cache(maxsize=1 << 16)
def _G_cached(x_key, kre_key, kim_key, spec, scaled=False):
    k = np.array(kre_key) + 1j * np.array(kim_key)
    v, e = faddeev_G(np.array(x_key)[None, :], k[None, :], spec, scaled)
    return float(v[0]), float(e[0])


def _checked(x, k):
    k = _as_complex_momentum(k)
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != k.dimension:
        raise ValueError("x and k dimensions differ")
    if not np.any(x):
        raise ValueError("the Green functions are singular at x = 0")
    if k.is_real:
        raise VarietyError("Faddeev Green function needs Im k != 0")
    return x, k


def eval_G(x, k, spec: QuadratureSpec = DEFAULT_SPEC) -> GreenEvaluation:
    """``G(x, k)`` for ``k`` on ``Sigma_E`` with ``Im k != 0``, ``x != 0``."""
    x, k = _checked(x, k)
    v, e = _G_cached(_key(x), _key(k.re), _key(k.im), spec)
    return GreenEvaluation(complex(v), e, "reduced-quadrature")


def eval_g(x, k, spec: QuadratureSpec = DEFAULT_SPEC) -> GreenEvaluation:
    """``g(x, k) = e^{-ikx} G(x, k)``."""
    x, k = _checked(x, k)
    # e^{-ikx} = e^{-i x Re k} e^{x Im k}; the second factor goes into the quadrature
    v, e = _G_cached(_key(x), _key(k.re), _key(k.im), spec, True)
    return GreenEvaluation(complex(np.exp(-1j * (k.re @ x)) * v), e, "reduced-quadrature")


def outgoing_G(x, k_real) -> np.ndarray:
    """Outgoing free Green function ``G^+`` (batched over leading axes)."""
    x = np.asarray(x, dtype=float)
    kr = np.asarray(k_real, dtype=float)
    d = x.shape[-1]
    R = np.linalg.norm(x, axis=-1)
    kap = np.linalg.norm(kr, axis=-1)
    if np.any(R == 0):
        raise ValueError("the Green functions are singular at x = 0")
    if np.any(kap == 0):
        raise ValueError("k must be nonzero")
    if d == 3:
        return -np.exp(1j * kap * R) / (4 * np.pi * R)
    if d == 2:
        return -0.25j * special.hankel1(0, kap * R)
    raise ValueError("dimension must be 2 or 3")


def eval_G_plus(x, k_real, spec: QuadratureSpec = DEFAULT_SPEC) -> GreenEvaluation:
    return GreenEvaluation(complex(outgoing_G(x, k_real)), 0.0, "closed-form")


def eval_g_plus(x, k_real, spec: QuadratureSpec = DEFAULT_SPEC) -> GreenEvaluation:
    """``g^+(x, k) = e^{-ikx} G^+(x, k)``; elementary in 3D, Hankel ``H0^(1)`` in 2D."""
    x = np.asarray(x, dtype=float)
    kr = np.asarray(k_real, dtype=float)
    return GreenEvaluation(complex(np.exp(-1j * (kr @ x)) * outgoing_G(x, kr)), 0.0, "closed-form")


def gamma_correction(x, k_prime, gamma, spec: QuadratureSpec = DEFAULT_SPEC):
    """``2 pi i/(2 pi)^d int e^{i xi x} delta(xi^2 - k^2) theta(xi . gamma) dxi``.

    The half-sphere ``|xi| = |k|``, ``xi . gamma > 0`` carries the surface
    measure ``|k|^{d-2}/2 dOmega``.  Batched over the leading axes of ``x``.
    Returns values and error estimates.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    kp = np.asarray(k_prime, dtype=float)
    g = np.asarray(gamma, dtype=float)
    x, kp, g = np.broadcast_arrays(x, np.atleast_2d(kp), np.atleast_2d(g))
    d = x.shape[-1]
    kap = np.linalg.norm(kp, axis=-1)
    zg = np.einsum("...i,...i->...", x, g)
    R = np.linalg.norm(x, axis=-1)
    zeros = np.zeros_like(kap)
    if d == 2:
        x1 = np.einsum("...i,...i->...", x, kp) / kap
        kx1, kz = kap * x1, kap * zg

        def f(t, i):
            return np.exp(1j * (kx1[i, None] * np.cos(t) + kz[i, None] * np.sin(t)))

        v, e, ok = _quad(f, zeros, np.full_like(kap, np.pi), panels_for(np.pi, kap * R, 2), spec)
        return _finish(0.25j * v / np.pi, e / (4 * np.pi), ok, spec, "gamma correction")
    rperp = np.sqrt(np.maximum(R * R - zg * zg, 0.0))

    def f3(w, i):
        return np.exp(1j * w * zg[i, None]) * special.j0(
            rperp[i, None] * np.sqrt(np.maximum(kap[i, None] ** 2 - w * w, 0.0)))

    v, e, ok = _quad(f3, zeros, kap, panels_for(kap, R, 2), spec)
    return _finish(0.25j * v / np.pi, e / (4 * np.pi), ok, spec, "gamma correction")


def limit_G(x, k_prime, gamma, spec: QuadratureSpec = DEFAULT_SPEC):
    """Batched ``G_gamma(x, k') = G(x, k' + i0 gamma) = G^+ + gamma_correction``."""
    corr, err = gamma_correction(x, k_prime, gamma, spec)
    return outgoing_G(np.atleast_2d(x), np.atleast_2d(k_prime)) + corr, err


def eval_G_gamma(x, k: RealLimitMomentum, spec: QuadratureSpec = DEFAULT_SPEC) -> GreenEvaluation:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != k.dimension:
        raise ValueError("x and k dimensions differ")
    v, e = limit_G(x, k.k_prime, k.gamma, spec)
    return GreenEvaluation(complex(v[0]), float(e[0]), "reduced-quadrature")


def eval_g_gamma(x, k: RealLimitMomentum, spec: QuadratureSpec = DEFAULT_SPEC) -> GreenEvaluation:
    """``g_gamma(x, k') = e^{-ik'x} G_gamma(x, k')`` for ``k' . gamma = 0``."""
    G = eval_G_gamma(x, k, spec)
    phase = np.exp(-1j * (k.k_prime @ np.asarray(x, dtype=float)))
    return GreenEvaluation(complex(phase * G.value), G.abs_error_estimate, G.method)


def oracle_g_direct(x, k, cutoffs=None, nodes=None, spec: QuadratureSpec = DEFAULT_SPEC) -> GreenEvaluation:
    """Brute-force ``g(x, k)`` from the truncated Fourier integral.

    ``-(2 pi)^{-d} [I_N(x, k) + T_N(x, k)]`` for each cutoff ``N``, where
    ``T_N`` integrates the leading terms of the large-``|xi|`` expansion of
    the symbol outside the ball (see :func:`faddeev.ball.tail_correction`).  The value at the largest
    cutoff is returned; its distance to the previous cutoff is the error
    estimate.  Shares no code with the reduced quadrature of :func:`eval_g`.
    """
    from .ball import cutoff_integral, tail_correction

    k = _as_complex_momentum(k)
    x = np.asarray(x, dtype=float).reshape(-1)
    d = k.dimension
    if not np.any(x):
        raise ValueError("the Green functions are singular at x = 0")
    cutoffs = sorted(spec.oracle_cutoffs if cutoffs is None else cutoffs)
    vals = [-(cutoff_integral(x, k, N, nodes) + tail_correction(x, N, d, k.k)) / (2 * np.pi) ** d
            for N in cutoffs]
    err = abs(vals[-1] - vals[-2]) if len(vals) > 1 else np.inf
    return GreenEvaluation(complex(vals[-1]), float(err), "oracle")


def _outgoing_ball(x, q, N, d, nodes):
    """``int_{|xi|<=N} e^{i xi x}/(xi^2 - q^2) dxi`` for complex ``q`` with ``Im q > 0``."""
    from .ball import segment_integral

    x = np.asarray(x, dtype=float)
    R = np.linalg.norm(x)
    xg, wg = special.roots_legendre(nodes)
    c = xg  # cos of the angle between xi and x
    p = R * c
    # 1/(r^2 - q^2) = (1/2q) [1/(r - q) - 1/(r + q)]
    lo_m, hi_m = -q, N - q
    lo_p, hi_p = q, N + q
    rad = (np.exp(1j * q * p) * segment_integral(lo_m, hi_m, p)
           - np.exp(-1j * q * p) * segment_integral(lo_p, hi_p, p)) / (2 * q)
    if d == 3:
        Np = N * p
        safe = np.where(np.abs(Np) < 1e-8, 1.0, p)
        first = np.where(np.abs(Np) < 1e-8, N + 0.5j * N * Np, (np.exp(1j * Np) - 1) / (1j * safe))
        # r^2/(r^2 - q^2) = 1 + q^2/(r^2 - q^2), azimuth gives 2 pi
        return 2 * np.pi * np.sum(wg * (first + q * q * rad))
    # d = 2: theta in [0, 2 pi], c = cos(theta); integrate over theta directly
    th = np.pi * (xg + 1)
    p2 = R * np.cos(th)
    # r/(r^2 - q^2) = (1/2) [1/(r - q) + 1/(r + q)]
    rad2 = (np.exp(1j * q * p2) * segment_integral(lo_m, hi_m, p2)
            + np.exp(-1j * q * p2) * segment_integral(lo_p, hi_p, p2)) / 2
    return np.pi * np.sum(wg * rad2)


def oracle_g_plus(x, k_real, eps=(0.02, 0.01, 0.005), N=None, nodes=None) -> GreenEvaluation:
    """Limiting-absorption oracle for ``g^+``.

    The outgoing kernel is approximated by the ball integral with the
    wavenumber ``|k| (1 + i eps)`` plus the ``1/xi^2`` tail, and the result is
    extrapolated to ``eps -> 0`` with a quadratic fit in ``eps``.
    """
    from .ball import tail_correction

    x = np.asarray(x, dtype=float).reshape(-1)
    kr = np.asarray(k_real, dtype=float).reshape(-1)
    d = x.size
    kap = np.linalg.norm(kr)
    R = np.linalg.norm(x)
    if R == 0 or kap == 0:
        raise ValueError("x and k must be nonzero")
    if N is None:
        N = 40.0 * max(kap, 1.0 / R)
    if nodes is None:
        nodes = int(max(400, 8 * N * R))
    vals = []
    for e in eps:
        q = kap * (1 + 1j * e)
        vals.append(-(_outgoing_ball(x, q, N, d, nodes) + tail_correction(x, N, d)) / (2 * np.pi) ** d)
    coef = np.polyfit(np.asarray(eps), np.asarray(vals), len(eps) - 1)
    G0 = coef[-1]
    lin = np.polyfit(np.asarray(eps[-2:]), np.asarray(vals[-2:]), 1)[-1]
    err = abs(G0 - lin)
    return GreenEvaluation(complex(np.exp(-1j * (kr @ x)) * G0), float(err), "oracle")
