"""Cutoff (non-local) approximations of the point interactions and their limit.

The potential ``V_N = sum_j eps_j(N) u_j u_j^*`` with ``u_j`` the plane waves
``e^{-i xi z_j}`` restricted to ``|xi| <= N`` leads to the finite system

    A_N c_N = eps(N),   A_N[m, j] = delta_mj + eps_m (2 pi)^{-d} I_N(z_m - z_j, k),

with the renormalized couplings

    d = 3:  eps(N) = alpha / (1 - alpha N / (2 pi^2))
    d = 2:  eps(N) = alpha / (1 - alpha ln(N) / (2 pi)).

As ``N -> inf``, ``c_N`` tends to the coefficients ``c`` of
:mod:`faddeev.solver`.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .ball import cutoff_integral
from .errors import RenormalizationPole, SpectralSingularity
from .geometry import ComplexMomentum
from .solver import PotentialConfig, condition_number, normalize_momentum, solve_coefficients

DEFAULT_N_SEQUENCE = (25.0, 50.0, 100.0, 200.0, 400.0)
POLE_EXCLUSION = 0.05
POLE_TOL = 1e-12


def renormalization_pole(alpha: float, d: int) -> float | None:
    """Cutoff ``N`` at which ``eps(N)`` diverges, or None if there is none."""
    if alpha == 0:
        return None
    if d == 3:
        N = 2 * np.pi ** 2 / alpha
    elif d == 2:
        N = np.exp(2 * np.pi / alpha)
    else:
        raise ValueError("dimension must be 2 or 3")
    return float(N) if N > 0 else None


def epsilon_of_N(alpha: float, N: float, d: int) -> float:
    """Renormalized coupling ``eps(N)`` for strength ``alpha``.

    Raises
    ------
    RenormalizationPole
        If ``N`` sits on the pole of the renormalization.
    """
    if not N > 0:
        raise ValueError("cutoff N must be positive")
    if alpha == 0:
        return 0.0
    if d == 3:
        denom = 1 - alpha * N / (2 * np.pi ** 2)
    elif d == 2:
        denom = 1 - alpha * np.log(N) / (2 * np.pi)
    else:
        raise ValueError("dimension must be 2 or 3")
    if abs(denom) <= POLE_TOL * (1 + abs(alpha) * max(N, abs(np.log(N)))):
        pole = renormalization_pole(alpha, d)
        raise RenormalizationPole(f"eps(N) diverges at N = {pole!r} for alpha = {alpha}", pole=pole)
    return float(alpha / denom)


@dataclass(frozen=True)
class CutoffModel:
    config: PotentialConfig
    N: float
    eps: np.ndarray = field(init=False)

    def __post_init__(self):
        if not self.N > 0:
            raise ValueError("cutoff N must be positive")
        eps = np.array([epsilon_of_N(a, self.N, self.config.dimension) for a in self.config.alpha])
        object.__setattr__(self, "eps", eps)


def ball_kernel(model: CutoffModel, k, nodes=None) -> np.ndarray:
    """``(2 pi)^{-d} I_N(z_m - z_j, k)`` for all pairs of points."""
    cfg = model.config
    d = cfg.dimension
    diff = cfg.z[:, None, :] - cfg.z[None, :, :]
    flat = diff.reshape(-1, d)
    # I_N depends on x only; evaluate each distinct difference once
    uniq, inv = np.unique(np.round(flat, 14), axis=0, return_inverse=True)
    vals = cutoff_integral(uniq, k, model.N, nodes)
    return (vals[np.asarray(inv).reshape(-1)] / (2 * np.pi) ** d).reshape(cfg.n, cfg.n)


def assemble_A_N(model: CutoffModel, k, nodes=None) -> np.ndarray:
    """The cutoff system matrix ``A_N(k)``."""
    k = normalize_momentum(model.config, k, "complex")
    K = ball_kernel(model, k, nodes)
    return np.eye(model.config.n) + model.eps[:, None] * K


def solve_c_N(model: CutoffModel, k, nodes=None) -> np.ndarray:
    """Cutoff coefficients ``c_N(k)`` with ``A_N c_N = eps(N)``."""
    A = assemble_A_N(model, k, nodes)
    b = model.eps.astype(complex)
    if not np.any(b):
        return np.zeros_like(b)
    det = np.linalg.det(A)
    norm = np.linalg.norm(A, np.inf)
    if abs(det) < 1e-14 * norm ** A.shape[0]:
        raise SpectralSingularity(f"A_N is singular (|det| = {abs(det):.3e})", det=det,
                                  condition=condition_number(A))
    c = np.linalg.solve(A, b)
    res = np.linalg.norm(A @ c - b, np.inf)
    if res > 1e-10 * max(np.linalg.norm(b, np.inf), 1e-300):
        raise SpectralSingularity(f"A_N solve residual {res:.3e} too large", det=det,
                                  condition=condition_number(A))
    return c


@dataclass(frozen=True)
class ConvergenceRow:
    N: float
    err_abs: float
    err_rel: float
    excluded: bool


@dataclass(frozen=True)
class ConvergenceReport:
    rows: tuple
    limit: np.ndarray
    c_N: tuple
    fitted_exponent: float
    extrapolated: np.ndarray
    extrapolation_rel_error: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["N", "err_abs", "err_rel", "excluded_flag"])
        for r in self.rows:
            w.writerow([repr(float(r.N)), repr(float(r.err_abs)), repr(float(r.err_rel)), int(r.excluded)])
        return buf.getvalue()

    @property
    def monotone(self) -> bool:
        e = [r.err_abs for r in self.rows if not r.excluded]
        return all(b < a for a, b in zip(e, e[1:]))


def near_pole(config: PotentialConfig, N: float) -> bool:
    """True if ``N`` is within 5% of some renormalization pole."""
    for a in config.alpha:
        p = renormalization_pole(a, config.dimension)
        if p is not None and abs(N - p) <= POLE_EXCLUSION * p:
            return True
    return False


def fit_exponent(N, err) -> float:
    """Least-squares slope of ``log err`` against ``log N``, dropping the smallest ``N``."""
    N = np.asarray(N, dtype=float)
    err = np.asarray(err, dtype=float)
    keep = err > 0
    N, err = N[keep], err[keep]
    if N.size > 3:
        N, err = N[1:], err[1:]
    if N.size < 2:
        return float("nan")
    return float(np.polyfit(np.log(N), np.log(err), 1)[0])


def convergence_study(config: PotentialConfig, k, N_sequence=DEFAULT_N_SEQUENCE,
                      workers: int = 1, nodes=None) -> ConvergenceReport:
    """Errors ``||c_N - c||`` over a sequence of cutoffs and their decay rate.

    Cutoffs within 5% of a renormalization pole are skipped and flagged.
    The limit is also estimated from the cutoff data alone by fitting
    ``c_N = c + a/N + b/N^2`` to the three largest admissible cutoffs.
    """
    k = normalize_momentum(config, k, "complex")
    limit = solve_coefficients(config, k, "complex").c
    Ns = [float(N) for N in N_sequence]
    excluded = [near_pole(config, N) for N in Ns]
    todo = [N for N, ex in zip(Ns, excluded) if not ex]

    def one(N):
        return solve_c_N(CutoffModel(config, N), k, nodes)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = dict(zip(todo, pool.map(one, todo)))
    else:
        results = {N: one(N) for N in todo}
    scale = max(np.linalg.norm(limit), np.finfo(float).tiny)
    rows, cs = [], []
    for N, ex in zip(Ns, excluded):
        if ex:
            rows.append(ConvergenceRow(N, float("nan"), float("nan"), True))
            continue
        cN = results[N]
        cs.append(cN)
        e = float(np.linalg.norm(cN - limit))
        rows.append(ConvergenceRow(N, e, e / scale if np.any(limit) else 0.0, False))
    good = [r for r in rows if not r.excluded]
    expo = fit_exponent([r.N for r in good], [r.err_abs for r in good])
    if len(cs) >= 3:
        n3 = np.array([r.N for r in good][-3:])
        V = np.stack([np.ones(3), 1 / n3, 1 / n3 ** 2], axis=1)
        ext = np.linalg.solve(V, np.array(cs[-3:]))[0]
    else:
        ext = cs[-1] if cs else limit
    ext_err = float(np.linalg.norm(ext - limit) / scale) if np.any(limit) else 0.0
    return ConvergenceReport(tuple(rows), limit, tuple(cs), expo, ext, ext_err)
