"""Numerical checks of the identities satisfied by the constructed eigenfunctions.

dbar (d = 2)
    In the chart ``lam`` of ``Sigma_E``, ``d/d conj(lam) = sum_j conj(dk_j/dlam) d/d conj(k_j)``
    and the right-hand side ``-2 pi int xi_j H(k, -xi) F(k + xi) delta(xi^2 + 2 k xi) dxi``
    is a point mass.  With ``k = a + i b`` the constraint set
    ``{xi^2 + 2a xi = 0, b xi = 0}`` is ``{0, -2a}``; ``xi = 0`` is killed by
    the factor ``xi_j`` and at ``xi0 = -2a`` the two constraint gradients
    ``-2a`` and ``2b`` give the Jacobian ``4 |a| |b|``.  Also ``k + xi0 = -conj(k)``.
limit (d = 2, 3)
    ``delta(xi^2 - k^2)`` on ``|xi| = |k|`` has the surface density
    ``|k|^{d-2}/2``; ``theta((xi - k) gamma) = theta(xi gamma)`` when ``k gamma = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import SpectralSingularity
from .geometry import ComplexMomentum, RealLimitMomentum, dk_dlambda, lambda_to_k
from .quadrature import QuadratureSpec
from .solver import PotentialConfig, det_A, eval_H, eval_psi, solve_coefficients
from .green import gamma_correction, oracle_g_direct

# Tight tolerances so that finite differences see the function, not the quadrature.
VERIFY_SPEC = QuadratureSpec(rel_tol=1e-13, abs_tol=1e-16)
DBAR_STEPS = (1e-3, 5e-4)
HELMHOLTZ_STEPS = (0.04, 0.02, 0.01)
IDENTITIES = ("dbar_psi", "dbar_H", "limit_psi", "limit_h", "mu_asymptotic", "helmholtz",
              "reality", "point_mass")


@dataclass(frozen=True)
class IdentityReport:
    identity_id: str
    lhs: complex
    rhs: complex
    rel_error: float
    threshold: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        ok = bool(np.isfinite(self.rel_error) and self.rel_error < self.threshold)
        order = self.diagnostics.get("order")
        lo, hi = self.diagnostics.get("order_range", (None, None))
        if order is not None and lo is not None:
            ok = ok and lo <= order <= (hi if hi is not None else np.inf)
        return ok

    def to_json_obj(self) -> dict:
        def conv(v):
            if isinstance(v, (complex, np.complexfloating)):
                return {"re": float(np.real(v)), "im": float(np.imag(v))}
            if isinstance(v, np.ndarray):
                return [conv(t) for t in v.tolist()]
            if isinstance(v, (list, tuple)):
                return [conv(t) for t in v]
            if isinstance(v, (np.floating, np.integer)):
                return v.item()
            if isinstance(v, dict):
                return {k: conv(t) for k, t in v.items()}
            return v

        return {"identity_id": self.identity_id, "lhs": conv(complex(self.lhs)), "rhs": conv(complex(self.rhs)),
                "rel_error": float(self.rel_error), "threshold": self.threshold, "passed": self.passed,
                "diagnostics": conv(self.diagnostics)}


def rel_error(lhs, rhs) -> float:
    return float(abs(lhs - rhs) / (1 + max(abs(lhs), abs(rhs))))


# -- dbar ------------------------------------------------------------------------

def _dbar_fd(fun, lam: complex, h: float) -> complex:
    """Central difference ``d/d conj(lam) = (d/du + i d/dv)/2``, ``lam = u + i v``."""
    du = (fun(lam + h) - fun(lam - h)) / (2 * h)
    dv = (fun(lam + 1j * h) - fun(lam - 1j * h)) / (2 * h)
    return 0.5 * (du + 1j * dv)


def point_mass(k: ComplexMomentum):
    """Nonzero point ``xi0`` of ``{xi^2 + 2 k xi = 0}`` and its co-area weight."""
    if k.re_norm == 0 or k.im_norm == 0:
        raise ValueError("the point-mass Jacobian degenerates when Re k = 0 or Im k = 0")
    return -2 * k.re, 1.0 / (4 * k.re_norm * k.im_norm)


def mollified_delta(k: ComplexMomentum, F, sigmas=(2e-3, 1e-3), n: int = 201):
    """``int F(xi) delta(Re(xi^2+2k xi)) delta(Im(xi^2+2k xi)) dxi`` near ``xi0`` with Gaussian mollifiers.

    The integral is done on a box around ``xi0 = -2 Re k`` in the frame
    ``(Re k, Im k)`` for each width ``sigma`` and extrapolated quadratically
    to ``sigma = 0``.  Independent of :func:`point_mass`.
    """
    a, b = k.re, k.im
    A, s = k.re_norm, k.im_norm
    ah, bh = a / A, b / s
    vals = []
    for sig in sigmas:
        # f2 = 2 s v, f1 = -2 A u + u^2 + v^2 at xi = xi0 + u ah + v bh
        hv = 10 * sig / (2 * s)
        hu = 10 * sig / (2 * A) * 1.5
        v = np.linspace(-hv, hv, n)
        u = np.linspace(-hu, hu, n)
        U, V = np.meshgrid(u, v, indexing="ij")
        xi = -2 * a + U[..., None] * ah + V[..., None] * bh
        xi2 = np.einsum("...i,...i->...", xi, xi)
        f1 = xi2 + 2 * (xi @ a)
        f2 = 2 * (xi @ b)
        phi = np.exp(-0.5 * (f1 / sig) ** 2 - 0.5 * (f2 / sig) ** 2) / (2 * np.pi * sig * sig)
        vals.append(np.trapezoid(np.trapezoid(F(xi) * phi, v, axis=1), u))
    sig = np.asarray(sigmas)
    if len(vals) == 1:
        return complex(vals[0])
    # F phi integrates to F(xi0) w + O(sigma^2)
    return complex((vals[1] * sig[0] ** 2 - vals[0] * sig[1] ** 2) / (sig[0] ** 2 - sig[1] ** 2))


def check_point_mass(x, lam: complex, E: float, threshold: float = 1e-6) -> IdentityReport:
    """Compare the point-mass reading of ``int xi_1 e^{i(k+xi)x} delta(xi^2+2k xi) dxi`` with the mollified oracle."""
    k = lambda_to_k(lam, E)
    x = np.asarray(x, dtype=float)
    kv = k.k

    def F(xi):
        return xi[..., 0] * np.exp(1j * ((kv + xi) @ x))

    xi0, w = point_mass(k)
    rhs = complex(F(xi0) * w)
    lhs = mollified_delta(k, F)
    return IdentityReport("point_mass", lhs, rhs, rel_error(lhs, rhs), threshold,
                          {"lambda": lam, "weight": w, "relative_to_value": abs(lhs - rhs) / abs(rhs)})


def dbar_rhs(config: PotentialConfig, x_or_p, lam: complex, which: str = "psi",
             spec: QuadratureSpec = VERIFY_SPEC) -> complex:
    """Point-mass right-hand side of the dbar identity pulled back to the lambda chart."""
    E = config.energy
    k = lambda_to_k(lam, E)
    xi0, w = point_mass(k)
    kx = ComplexMomentum.from_complex(k.k + xi0)  # = -conj(k)
    Hk = eval_H(config, k, -xi0, "complex", spec).value
    q = np.asarray(x_or_p, dtype=float)
    if which == "psi":
        other = eval_psi(config, q, kx, "complex", spec).psi
    elif which == "H":
        other = eval_H(config, kx, q + xi0, "complex", spec).value
    else:
        raise ValueError("which must be 'psi' or 'H'")
    dbar_k = -2 * np.pi * xi0 * Hk * other * w  # d/d conj(k_j), j = 1..d
    return complex(np.sum(np.conj(dk_dlambda(lam, E)) * dbar_k))


def check_dbar(config: PotentialConfig, x_or_p, lam: complex, which: str = "psi",
               steps=DBAR_STEPS, spec: QuadratureSpec = VERIFY_SPEC,
               threshold: float = 1e-4) -> IdentityReport:
    """Compare a central-difference ``d/d conj(lam)`` of ``psi`` (or ``H``) with the point-mass formula.

    The steps are scaled by ``min(|lam|, 1/|lam|)^3``.  The observed order is the
    log of the error ratio over the log of the step ratio.
    """
    if config.dimension != 2:
        raise ValueError("dbar checks are implemented for d = 2")
    if abs(abs(lam) - 1) < 10 * max(steps):
        raise ValueError("lambda too close to the unit circle")
    q = np.asarray(x_or_p, dtype=float)
    E = config.energy
    if which == "psi":
        fun = lambda l: eval_psi(config, q, lambda_to_k(l, E), "complex", spec).psi  # noqa: E731
    elif which == "H":
        fun = lambda l: eval_H(config, lambda_to_k(l, E), q, "complex", spec).value  # noqa: E731
    else:
        raise ValueError("which must be 'psi' or 'H'")
    rhs = dbar_rhs(config, q, lam, which, spec)
    # the chart compresses near lam = 0 and near lam = infinity
    steps = tuple(h * min(abs(lam), 1 / abs(lam)) ** 3 for h in steps)
    lhs = [_dbar_fd(fun, lam, h) for h in steps]
    errs = [abs(l - rhs) for l in lhs]
    order = float(np.log(errs[-2] / errs[-1]) / np.log(steps[-2] / steps[-1])) if len(steps) > 1 and errs[-1] > 0 else None
    rich = lhs[-1] + (lhs[-1] - lhs[-2]) / ((steps[-2] / steps[-1]) ** 2 - 1) if len(steps) > 1 else lhs[-1]
    diag = {"lambda": lam, "steps": list(steps), "fd_errors": errs, "order": order,
            "order_range": (1.5, 2.5), "richardson_rel_error": rel_error(rich, rhs)}
    return IdentityReport("dbar_" + which, lhs[-1], rhs, rel_error(lhs[-1], rhs), threshold, diag)


# -- limit relations -------------------------------------------------------------

def _hemisphere(kp: np.ndarray, gamma: np.ndarray, n: int):
    """Nodes ``xi`` on ``{|xi| = |k'|, xi gamma > 0}`` with weights including ``|k'|^{d-2}/2``."""
    kap = np.linalg.norm(kp)
    d = kp.size
    khat = kp / kap
    xg, wg = special.roots_legendre(n)
    if d == 2:
        t = xg * np.pi / 2  # angle from gamma
        om = np.cos(t)[:, None] * gamma + np.sin(t)[:, None] * khat
        return kap * om, wg * (np.pi / 2) * 0.5
    third = np.cross(gamma, khat)
    th = (xg + 1) * np.pi / 4  # polar angle from gamma, [0, pi/2]
    nph = 2 * n
    ph = (np.arange(nph) + 0.5) * 2 * np.pi / nph
    TH, PH = np.meshgrid(th, ph, indexing="ij")
    om = (np.cos(TH)[..., None] * gamma + np.sin(TH)[..., None]
          * (np.cos(PH)[..., None] * khat + np.sin(PH)[..., None] * third)).reshape(-1, 3)
    w = (np.sin(TH) * (wg * np.pi / 4)[:, None] * (2 * np.pi / nph)).reshape(-1)
    return kap * om, w * kap * 0.5


def limit_rhs(config: PotentialConfig, km: RealLimitMomentum, x_or_l, which: str = "psi",
              n: int = 48, spec: QuadratureSpec = VERIFY_SPEC):
    """``F^+ + 2 pi i int_{xi gamma > 0} h_gamma(k', xi) F^+(xi) delta(xi^2 - k'^2) dxi``.

    ``F^+`` is ``psi^+(x, .)`` or ``f(., l)``.  Returns the value and the
    change from halving the node count.
    """
    q = np.asarray(x_or_l, dtype=float)
    sol_g = solve_coefficients(config, km, "gamma", spec)
    d = config.dimension

    def Fplus(kv):
        if which == "psi":
            return eval_psi(config, q, kv, "plus", spec).psi
        from .solver import eval_h

        return eval_h(config, kv, q, "plus", spec).value

    def integral(nodes):
        xis, w = _hemisphere(km.k_prime, km.gamma, nodes)
        tot = 0j
        for xi, wi in zip(xis, w):
            hg = np.sum(sol_g.c * np.exp(1j * (config.z @ (km.k_prime - xi)))) / (2 * np.pi) ** d
            tot += wi * hg * Fplus(xi)
        return 2j * np.pi * tot

    base = Fplus(km.k_prime)
    fine = integral(n)
    coarse = integral(max(n // 2, 4))
    return complex(base + fine), float(abs(fine - coarse))


def check_limit_relation(config: PotentialConfig, k_prime, gamma, x_or_l, which: str = "psi",
                         n: int = 48, spec: QuadratureSpec = VERIFY_SPEC,
                         threshold: float | None = None) -> IdentityReport:
    """``psi_gamma`` (or ``h_gamma``) against ``psi^+`` (or ``f``) plus the half-sphere term."""
    km = k_prime if isinstance(k_prime, RealLimitMomentum) else RealLimitMomentum(
        np.asarray(k_prime, float), np.asarray(gamma, float))
    q = np.asarray(x_or_l, dtype=float)
    if threshold is None:
        threshold = 1e-6 if config.dimension == 3 else 1e-4
    if which == "psi":
        lhs = eval_psi(config, q, km, "gamma", spec).psi
    elif which == "h":
        from .solver import eval_h

        lhs = eval_h(config, km, q, "gamma", spec).value
    else:
        raise ValueError("which must be 'psi' or 'h'")
    rhs, qerr = limit_rhs(config, km, q, which, n, spec)
    return IdentityReport("limit_" + which, lhs, rhs, rel_error(lhs, rhs), threshold,
                          {"k_prime": km.k_prime.tolist(), "gamma": km.gamma.tolist(),
                           "nodes": n, "quadrature_change": qerr})


def full_sphere_term(x, k_prime) -> complex:
    """``2 pi i (2 pi)^{-d} int e^{i xi x} delta(xi^2 - k^2) dxi`` over the whole sphere (closed form)."""
    x = np.asarray(x, float)
    kap = np.linalg.norm(k_prime)
    R = np.linalg.norm(x)
    if x.size == 2:
        return 0.5j * special.j0(kap * R)
    return 1j * kap / (2 * np.pi) * np.sinc(kap * R / np.pi)


def check_heaviside_complementarity(x, k_prime, gamma, threshold: float = 1e-10) -> IdentityReport:
    """The gamma and -gamma half-sphere terms add up to the full-sphere term."""
    a = gamma_correction(x, k_prime, gamma)[0][0]
    b = gamma_correction(x, k_prime, -np.asarray(gamma, float))[0][0]
    lhs = a + b
    rhs = full_sphere_term(x, k_prime)
    return IdentityReport("limit_psi", lhs, rhs, rel_error(lhs, rhs), threshold,
                          {"kind": "heaviside_complementarity"})


# -- asymptotics -----------------------------------------------------------------

def mu_path(config: PotentialConfig, t: float, direction):
    """Point of ``Sigma_E`` with ``|Im k| = t``.

    d = 3: ``direction = (a_dir, b_dir)``; d = 2: ``direction`` is the angle
    of the ray in the lambda plane (``|lam| > 1``).
    """
    E = config.energy
    if config.dimension == 3:
        a_dir, b_dir = direction
        from .geometry import build_k_3d

        return build_k_3d(E, a_dir, b_dir, t)
    r = (t + np.sqrt(t * t + E)) / np.sqrt(E)
    return lambda_to_k(r * np.exp(1j * float(direction)), E)


def _mu_dev(config, x, t, direction, spec):
    k = mu_path(config, t, direction)
    return float(abs(eval_psi(config, x, k, "complex", spec).mu - 1))


MU_T_SEQUENCE = {2: (4.0, 12.0, 36.0, 108.0), 3: (5.0, 10.0, 20.0, 40.0)}


def check_mu_asymptotic(config: PotentialConfig, x, direction, t_sequence=None,
                        spec: QuadratureSpec = VERIFY_SPEC, max_exponent: float = -0.8,
                        window: int = 16) -> IdentityReport:
    """``|mu(x, k(t)) - 1|`` along a path with ``|Im k| = t``, with the fitted decay exponent.

    ``|mu - 1|`` is an oscillation under a decaying envelope, so the pointwise
    values need not decrease.  The check samples ``window`` log-spaced points
    of each window ``[t_i, t_{i+1})`` (the geometric sequence is continued past
    the last ``t``) and requires the window maxima to decrease; in d = 3 the
    exponent fitted to the window maxima must also be at most ``max_exponent``.
    Points where the path meets a spectral singularity are skipped and listed.
    """
    x = np.asarray(x, dtype=float)
    t_sequence = MU_T_SEQUENCE[config.dimension] if t_sequence is None else tuple(t_sequence)
    ratio = t_sequence[1] / t_sequence[0] if len(t_sequence) > 1 else 2.0
    ts, devs, env, skipped = [], [], [], []
    for t in t_sequence:
        try:
            dev = _mu_dev(config, x, t, direction, spec)
            if window > 1:
                grid = t * ratio ** (np.arange(1, window) / window)
                env.append(max([dev] + [_mu_dev(config, x, tt, direction, spec) for tt in grid]))
        except SpectralSingularity:
            skipped.append(t)
            continue
        ts.append(t)
        devs.append(dev)
    devs_arr = np.asarray(devs)
    series = np.asarray(env) if env else devs_arr
    if series.size >= 2 and np.all(series > 0):
        expo = float(np.polyfit(np.log(ts), np.log(series), 1)[0])
    else:
        expo = float("-inf") if series.size and not np.any(series) else float("nan")
    pointwise = bool(np.all(np.diff(devs_arr) < 0)) if devs_arr.size > 1 else True
    monotone = bool(np.all(np.diff(series) < 0)) if series.size > 1 else True
    ok = monotone and (config.dimension == 2 or expo <= max_exponent)
    last = devs_arr[-1] if devs_arr.size else np.nan
    return IdentityReport("mu_asymptotic", 1 + last, 1.0, 0.0 if ok else float(abs(last) + 1), 0.5,
                          {"t": ts, "abs_mu_minus_1": devs, "window_max": env, "fitted_exponent": expo,
                           "monotone": monotone, "pointwise_monotone": pointwise, "skipped": skipped})


# -- Helmholtz -------------------------------------------------------------------

def laplacian_residual(config: PotentialConfig, x, k, regime: str, h: float,
                       spec: QuadratureSpec = VERIFY_SPEC) -> float:
    """``|-Delta_h psi - E psi| / |E psi|`` with the centred second-difference Laplacian."""
    x = np.asarray(x, dtype=float)
    d = config.dimension
    pts = [x]
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        pts += [x + e, x - e]
    sol = solve_coefficients(config, k, regime, spec)
    vals = eval_psi(config, np.array(pts), k, regime, spec, solution=sol).psi
    lap = (np.sum(vals[1:]) - 2 * d * vals[0]) / (h * h)
    return float(abs(-lap - config.energy * vals[0]) / abs(config.energy * vals[0]))


def check_helmholtz(config: PotentialConfig, x, k, regime: str = "complex", h_sequence=HELMHOLTZ_STEPS,
                    spec: QuadratureSpec = VERIFY_SPEC, min_order: float = 1.7) -> IdentityReport:
    """Finite-difference residual of ``-Delta psi = E psi`` away from the points.

    The residual of an exact solution is pure stencil error ``O(h^2)``;
    the report passes when every consecutive halving shows order >= 1.7.
    """
    x = np.asarray(x, dtype=float)
    dist = np.min(np.linalg.norm(config.z - x, axis=-1))
    if dist <= 10 * max(h_sequence):
        raise ValueError(f"x is {dist:.3g} from a point; need more than 10 * max(h)")
    res = [laplacian_residual(config, x, k, regime, h, spec) for h in h_sequence]
    orders = [float(np.log(res[i] / res[i + 1]) / np.log(h_sequence[i] / h_sequence[i + 1]))
              for i in range(len(res) - 1)]
    order = min(orders) if orders else None
    return IdentityReport("helmholtz", res[-1], 0.0, res[-1], 1.0,
                          {"regime": regime, "h": list(h_sequence), "residuals": res, "orders": orders,
                           "order": order, "order_range": (min_order, None)})


# -- reality ---------------------------------------------------------------------

def check_reality(G_value: complex, tol: float = 1e-6, diagnostics: dict | None = None) -> IdentityReport:
    """``|Im G| <= tol (1 + |G|)`` for a value that should be real."""
    bound = abs(G_value.imag) / (1 + abs(G_value))
    return IdentityReport("reality", G_value, G_value.real, bound, tol, dict(diagnostics or {}))


# Cutoffs for the complex Fourier route; the remainder is below 1e-7 relative
REALITY_CUTOFF = {2: 320.0, 3: 160.0}


def check_G_reality(x, k, tol: float = 1e-6, cutoff: float | None = None) -> IdentityReport:
    """Reality of ``G = e^{ikx} g`` with ``g`` from the truncated Fourier integral.

    :func:`faddeev.green.eval_G` is real by construction; this route works in
    complex arithmetic throughout, so its imaginary part is a genuine test.
    """
    k = k if isinstance(k, ComplexMomentum) else ComplexMomentum.from_complex(k)
    x = np.asarray(x, dtype=float)
    N = REALITY_CUTOFF[k.dimension] if cutoff is None else cutoff
    g = oracle_g_direct(x, k, cutoffs=(N,)).value
    G = complex(np.exp(1j * (k.k @ x)) * g)
    return check_reality(G, tol, {"route": "fourier", "cutoff": N, "x": x.tolist()})


def check_det_reality(config: PotentialConfig, k, tol: float = 1e-6) -> IdentityReport:
    """Reality of ``det A(k)``, assembled from complex ``g`` entries."""
    det = det_A(config, k, "complex")
    return check_reality(det, tol, {"route": "det"})
