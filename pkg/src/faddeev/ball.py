"""Cutoff Fourier integrals over a ball.

``I_N(x, k) = int_{|xi| <= N} e^{i xi x} / (xi^2 + 2 k xi) dxi``

In polar coordinates ``xi = r omega`` the radial integral is elementary:
with ``beta = k . omega`` and ``p = omega . x``,

* d = 2: ``int_0^N e^{irp}/(r + 2 beta) dr``
* d = 3: ``int_0^N e^{irp} r/(r + 2 beta) dr``

and ``int e^{ipu}/u du`` along a segment of constant imaginary part is a
difference of exponential integrals ``E1``, corrected by ``2 pi i`` when
the image segment crosses the branch cut of ``E1``.  Only the angular
integral is done numerically, with nodes clustered at the directions
``omega = +-Re k/|Re k|`` where the denominator can vanish.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .geometry import ComplexMomentum


def segment_integral(u0, u1, p):
    """``int_{u0}^{u1} e^{ipu}/u du`` along the straight segment ``u0 -> u1``.

    The segment must not pass through 0.  Broadcasts over all arguments.
    """
    u0, u1, p = np.broadcast_arrays(np.asarray(u0, complex), np.asarray(u1, complex),
                                    np.asarray(p, float))
    out = np.empty(u0.shape, complex)
    small = np.abs(p * (np.abs(u0) + np.abs(u1))) < 1e-8
    out[small] = np.log(u1[small]) - np.log(u0[small])
    m = ~small
    w0 = -1j * p[m] * u0[m]
    w1 = -1j * p[m] * u1[m]
    # an end exactly on the cut of E1 takes the limit from the side the path lies on
    # (written through .imag: adding a real float would turn -0.0 into +0.0)
    on0, on1 = w0.imag == 0, w1.imag == 0
    w0.imag[on0] = np.copysign(0.0, w1.imag[on0])
    w1.imag[on1] = np.copysign(0.0, w0.imag[on1])
    val = special.exp1(w0) - special.exp1(w1)
    cross = w0.imag * w1.imag < 0
    t = np.where(cross, w0.imag / np.where(cross, w0.imag - w1.imag, 1.0), 0.0)
    wr = w0.real + t * (w1.real - w0.real)
    jump = cross & (wr < 0)
    val = val - np.where(jump, np.where(w0.imag > 0, -2j * np.pi, 2j * np.pi), 0.0)
    out[m] = val
    return out


def _radial(beta, p, N, d):
    b2 = 2 * beta
    tail = np.exp(-1j * b2 * p) * segment_integral(b2, N + b2, p)
    if d == 2:
        return tail
    Np = N * p
    safe = np.where(np.abs(Np) < 1e-8, 1.0, p)
    first = np.where(np.abs(Np) < 1e-8, N + 0.5j * N * Np, (np.exp(1j * Np) - 1) / (1j * safe))
    return first - b2 * tail


@lru_cache(maxsize=32)
def _clustered(n):
    """Gauss-Legendre nodes on [0, 1] mapped by ``3t^2 - 2t^3`` (both ends clustered)."""
    xg, wg = special.roots_legendre(n)
    t = (xg + 1) / 2
    return t * t * (3 - 2 * t), 6 * t * (1 - t) * wg / 2


def _frame(k):
    a, b = k.real, k.imag
    A = np.linalg.norm(a)
    s = np.linalg.norm(b)
    if A == 0 or s == 0:
        raise ValueError("cutoff integral needs Re k != 0 and Im k != 0")
    return a / A, b / s


def default_nodes(N, d, radius=0.0):
    """Angular node counts for ball radius ``N`` and ``|x| <= radius``.

    The angular integrand oscillates about ``N |x|`` times; these counts keep
    the angular error near 1e-10 relative.
    """
    nr = N * radius
    if d == 2:
        return int(max(400, 8 * nr))
    return int(max(100, 2 * nr)), int(max(200, 4 * nr))


def cutoff_integral(x, k, N, nodes=None):
    """``I_N(x, k)`` for one ``k`` and many ``x`` (shape ``(m, d)``).

    Parameters
    ----------
    x : array_like, shape (m, d) or (d,)
    k : ComplexMomentum or complex array
    N : float
        Ball radius.
    nodes : int or (int, int), optional
        Angular nodes per half circle (d=2), or (polar per hemisphere,
        azimuthal) for d=3.
    """
    kc = k.k if isinstance(k, ComplexMomentum) else np.asarray(k, complex)
    x = np.asarray(x, float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    d = kc.size
    if N <= 0:
        raise ValueError("cutoff N must be positive")
    ah, bh = _frame(kc)
    if nodes is None:
        nodes = default_nodes(N, d, float(np.max(np.linalg.norm(x, axis=-1))))
    if d == 2:
        g, dg = _clustered(int(nodes))
        total = np.zeros(x.shape[0], complex)
        for lo in (0.0, np.pi):
            ph = lo + np.pi * g
            om = np.cos(ph)[:, None] * ah + np.sin(ph)[:, None] * bh
            beta = om @ kc
            p = x @ om.T
            total += _radial(beta[None, :], p, N, 2) @ (np.pi * dg)
    elif d == 3:
        nt, nph = nodes
        ch = np.cross(bh, ah)
        g, dg = _clustered(int(nt))
        # equator is where beta can be real, clustering sits there
        g = g / 2
        dg = dg / 2
        # beta vanishes on the equator at phi = +-pi/2; split the azimuth there
        # and cluster towards both ends
        gp, dgp = _clustered(max(int(nph) // 2, 1))
        ph = np.concatenate([-np.pi / 2 + np.pi * gp, np.pi / 2 + np.pi * gp])
        dph = np.concatenate([np.pi * dgp, np.pi * dgp])
        total = np.zeros(x.shape[0], complex)
        for th, dth in ((np.pi * g, np.pi * dg), (np.pi - np.pi * g, np.pi * dg)):
            TH, PH = np.meshgrid(th, ph, indexing="ij")
            om = (np.sin(TH)[..., None] * (np.cos(PH)[..., None] * ah + np.sin(PH)[..., None] * ch)
                  + np.cos(TH)[..., None] * bh).reshape(-1, 3)
            w = (np.sin(TH) * dth[:, None] * dph[None, :]).reshape(-1)
            beta = om @ kc
            for s0 in range(0, x.shape[0], 64):
                p = x[s0:s0 + 64] @ om.T
                total[s0:s0 + 64] += _radial(beta[None, :], p, N, 3) @ w
    else:
        raise ValueError("dimension must be 2 or 3")
    return total[0] if single else total


def tail_correction(x, N, d, k=None):
    """``int_{|xi| > N} e^{i xi x} [1/xi^2 - 2 k xi/xi^4 + ...] dxi``.

    The leading terms of the large-``|xi|`` expansion of the symbol
    ``1/(xi^2 + 2 k xi)``: two in d = 2, three in d = 3 (only the first when
    ``k`` is None).  What remains of the tail is ``O(N^{-3})`` times an
    oscillating factor.
    """
    x = np.asarray(x, float)
    R = np.linalg.norm(x, axis=-1)
    if np.any(R == 0):
        raise ValueError("tail correction needs x != 0")
    a = N * R
    if d == 2:
        # 2 pi int_N^inf J0(rR)/r dr
        lead = 2 * np.pi * _int_j0_over_r(a)
    else:
        lead = 4 * np.pi / R * (np.pi / 2 - special.sici(a)[0])
    if k is None:
        return lead
    kx = x @ np.asarray(k, complex)
    if d == 2:
        # int_a^inf J1(t)/t^2 dt = (int_a^inf J0/t dt + J1(a)/a)/2
        j1t2 = 0.5 * (_int_j0_over_r(a) + special.j1(a) / a)
        return lead - 4j * np.pi * kx * j1t2
    s3 = np.sin(a) / (2 * a * a) + np.cos(a) / (2 * a) - 0.5 * (np.pi / 2 - special.sici(a)[0])
    dF = 4 * np.pi * (s3 - np.sin(a) / (a * a))
    # third term 4 (k xi)^2/xi^6: the sphere average of e^{i r omega x} (k omega)^2 is
    # 4 pi [c^2 j0(rR) + (k^2 - 3 c^2) j1(rR)/(rR)] with c = k x/R
    kk = complex(np.asarray(k, complex) @ np.asarray(k, complex))
    c2 = (kx / R) ** 2
    third = np.empty(R.shape, complex)
    for i, ai in enumerate(np.atleast_1d(a)):
        j0t2 = _fourier_tail(ai, 3, "sin")
        j1t3 = _fourier_tail(ai, 5, "sin") - _fourier_tail(ai, 4, "cos")
        third.flat[i] = 16 * np.pi * R.flat[i] * (c2.flat[i] * j0t2 + (kk - 3 * c2.flat[i]) * j1t3)
    return lead + 2j * kx / R * dF + third


def _fourier_tail(a, power, kind):
    """``int_a^inf sin(t)/t^power dt`` (or ``cos``)."""
    val, _ = integrate.quad(lambda t: t ** (-power), a, np.inf, weight=kind, wvar=1.0, limlst=200)
    return val


def _int_j0_over_r(t):
    """``int_t^inf J0(u)/u du``."""
    # int_0^t (1 - J0(u))/u du is it2j0y0(t)[0]
    return special.it2j0y0(t)[0] - np.log(t / 2) - np.euler_gamma
