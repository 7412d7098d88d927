"""Zero sets of ``det A(k)``: curves in the lambda plane (d = 2) and real
spectral singularities of two-point potentials (d = 3).

The scan samples ``det A(k(lam))`` on a log-polar grid of the annulus
``r_min <= |lam| <= r_max``, extracts the level-zero contour of its real part
by marching squares (periodic in the angle), and polishes every contour
vertex by bisection along its grid edge until ``|det A| <= refinement_tol``.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import BracketError, VarietyError
from .geometry import RealLimitMomentum, lambda_to_k, lambda_to_k_array
from .green import faddeev_G_flagged, limit_G
from .quadrature import DEFAULT_SPEC, QuadratureSpec
from .solver import PotentialConfig, det_A

REFINEMENT_TOL = 1e-8
MAX_BISECTIONS = 60
UNIT_CIRCLE_GAP = 1e-9
WORKERS_ENV = "FADDEEV_WORKERS"

# cell flags
OK, FAILED, UNIT_CIRCLE = 0, 1, 2


def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        n = int(env)
        if n < 1:
            raise ValueError(f"{WORKERS_ENV} must be a positive integer")
        return n
    return os.cpu_count() or 1


@dataclass(frozen=True)
class GridSpec:
    r_min: float = 0.1
    r_max: float = 10.0
    n_r: int = 400
    n_theta: int = 720

    def __post_init__(self):
        if not (0 < self.r_min < self.r_max and np.isfinite(self.r_max)):
            raise ValueError("need 0 < r_min < r_max")
        if self.n_r < 2 or self.n_theta < 3:
            raise ValueError("grid needs n_r >= 2 and n_theta >= 3")

    @property
    def radii(self) -> np.ndarray:
        return np.geomspace(self.r_min, self.r_max, self.n_r)

    @property
    def angles(self) -> np.ndarray:
        return np.arange(self.n_theta) * (2 * np.pi / self.n_theta)

    def lambdas(self) -> np.ndarray:
        return self.radii[:, None] * np.exp(1j * self.angles[None, :])

    def to_dict(self) -> dict:
        return {"r_min": self.r_min, "r_max": self.r_max, "n_r": self.n_r, "n_theta": self.n_theta}


@dataclass(frozen=True)
class ScanGrid:
    spec: GridSpec
    values: np.ndarray  # Re det A, shape (n_r, n_theta)
    imag: np.ndarray  # Im det A
    flags: np.ndarray
    reality_residual: float
    config: PotentialConfig = field(repr=False)

    @property
    def lambdas(self) -> np.ndarray:
        return self.spec.lambdas()

    def to_csv(self) -> str:
        lam = self.lambdas.reshape(-1)
        lines = ["re_lambda,im_lambda,detA_re,detA_im_residual,flag"]
        for l, v, im, f in zip(lam, self.values.reshape(-1), self.imag.reshape(-1), self.flags.reshape(-1)):
            lines.append(f"{float(l.real)!r},{float(l.imag)!r},{float(v)!r},{abs(float(im))!r},{int(f)}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SingularCurveSet:
    curves: list  # list of complex arrays (polylines in lambda)
    refinement_tol: float
    residuals: list  # |det A| at the refined vertices, per curve
    dropped_vertices: int = 0
    annotations: dict = field(default_factory=dict)

    @property
    def max_residual(self) -> float:
        return max((float(np.max(r)) for r in self.residuals if len(r)), default=0.0)

    def to_json_obj(self, preset=None, config: PotentialConfig | None = None) -> dict:
        return {
            "curves": [[{"re": float(p.real), "im": float(p.imag)} for p in c] for c in self.curves],
            "preset": preset,
            "config": None if config is None else config.to_dict(),
            "refinement_tol": self.refinement_tol,
            "annotations": self.annotations,
        }


def figure_preset(fig_id: int):
    """Configuration and grid of figure presets 1-4 (``z_1`` at the origin)."""
    presets = {
        1: (4.0, (0.5, 0.0), (5.0, 6.0)),
        2: (6.0, (0.5, 0.0), (5.0, 6.0)),
        3: (5.0, (10.0, 0.0), (6.0, 6.0)),
        4: (5.0, (10.0, 0.0), (6.0, 6.8)),
    }
    if fig_id not in presets:
        raise ValueError(f"figure preset must be 1..4, got {fig_id!r}")
    E, delta, alpha = presets[fig_id]
    cfg = PotentialConfig.from_points(2, E, [((0.0, 0.0), alpha[0]), (delta, alpha[1])])
    return cfg, GridSpec()


# -- batched determinant ---------------------------------------------------------

def _det_batch(config: PotentialConfig, lam, spec: QuadratureSpec):
    """``det A(k(lam))`` for a flat array of ``lam`` off the unit circle.

    Returns the complex determinants and a convergence mask.
    """
    lam = np.asarray(lam, dtype=complex).reshape(-1)
    act = config.active
    n = act.size
    m = lam.size
    if n == 0:
        return np.ones(m, complex), np.ones(m, bool)
    k = lambda_to_k_array(lam, config.energy)
    a = k.real
    b = k.imag
    diag = 1.0 / config.alpha[act][None, :] - (
        np.log(np.linalg.norm(a, axis=-1) + np.linalg.norm(b, axis=-1)) / (2 * np.pi))[:, None]
    M = np.zeros((m, n, n), dtype=complex)
    M[:, np.arange(n), np.arange(n)] = diag
    ok = np.ones(m, dtype=bool)
    z = config.z[act]
    for p in range(n):
        for q in range(n):
            if p == q:
                continue
            x = z[p] - z[q]
            Gs, _, good = faddeev_G_flagged(np.broadcast_to(x, (m, 2)), k, spec, scaled=True)
            M[:, p, q] = -np.exp(-1j * (a @ x)) * Gs
            ok &= good
    if n == 2:
        det = M[:, 0, 0] * M[:, 1, 1] - M[:, 0, 1] * M[:, 1, 0]
    else:
        det = np.linalg.det(M)
    ok &= np.isfinite(det)
    return det, ok


def _det_rows(args):
    config, lam, spec = args
    det, ok = _det_batch(config, lam, spec)
    if not ok.all():
        # one retry with a tighter tolerance and a larger subdivision budget
        tight = QuadratureSpec(spec.rel_tol / 10, spec.abs_tol / 10, spec.max_subdivisions * 4,
                               spec.oracle_cutoffs)
        bad = np.flatnonzero(~ok)
        d2, ok2 = _det_batch(config, lam[bad], tight)
        det[bad], ok[bad] = d2, ok2
    return det, ok


def scan_det_grid(config: PotentialConfig, grid: GridSpec = GridSpec(),
                  spec: QuadratureSpec = DEFAULT_SPEC, workers: int = 1) -> ScanGrid:
    """Sample ``det A(k(lam))`` over the grid.

    Points on ``|lam| = 1`` (real momenta) are excluded and flagged 2;
    cells whose Green functions fail to converge after one retry are
    flagged 1.  Neither is fatal.
    """
    if config.dimension != 2:
        raise ValueError("lambda-plane scans need d = 2")
    if config.energy <= 0:
        raise VarietyError("lambda-plane scans need E > 0")
    lam = grid.lambdas()
    flags = np.zeros(lam.shape, dtype=np.int8)
    unit = np.abs(np.abs(lam) - 1.0) <= UNIT_CIRCLE_GAP
    flags[unit] = UNIT_CIRCLE
    det = np.full(lam.shape, np.nan + 0j)
    todo = np.flatnonzero(~unit.reshape(-1))
    flat = lam.reshape(-1)[todo]
    chunks = np.array_split(np.arange(todo.size), max(1, min(workers * 4, todo.size // 2000 + 1)))
    jobs = [(config, flat[c], spec) for c in chunks]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_det_rows, jobs))
    else:
        results = [_det_rows(j) for j in jobs]
    dflat = det.reshape(-1)
    fflat = flags.reshape(-1)
    for c, (d, ok) in zip(chunks, results):
        dflat[todo[c]] = d
        fflat[todo[c][~ok]] = FAILED
    good = fflat == OK
    resid = float(np.max(np.abs(dflat[good].imag))) if np.any(good) else 0.0
    return ScanGrid(grid, dflat.real.reshape(lam.shape), dflat.imag.reshape(lam.shape),
                    flags, resid, config)


# -- marching squares ------------------------------------------------------------

# For each corner-sign case, the pairs of cell edges joined by a segment.
# Corners: 0=(i,j) 1=(i+1,j) 2=(i+1,j+1) 3=(i,j+1); edges: 0: c0-c1, 1: c1-c2, 2: c2-c3, 3: c3-c0.
_SEGMENTS = {
    0: (), 15: (),
    1: ((3, 0),), 14: ((3, 0),),
    2: ((0, 1),), 13: ((0, 1),),
    3: ((3, 1),), 12: ((3, 1),),
    4: ((1, 2),), 11: ((1, 2),),
    6: ((0, 2),), 9: ((0, 2),),
    7: ((3, 2),), 8: ((3, 2),),
}


def _edge_key(i, j, e, n_theta):
    """Global id of edge ``e`` of cell (i, j); shared between neighbouring cells."""
    if e == 0:
        return ("t", i, j % n_theta)  # from (i,j) to (i+1,j) along r
    if e == 1:
        return ("r", i + 1, j % n_theta)  # from (i+1,j) to (i+1,j+1) along theta
    if e == 2:
        return ("t", i, (j + 1) % n_theta)
    return ("r", i, j % n_theta)


def _segments(grid: ScanGrid):
    v = grid.values
    nr, nt = v.shape
    usable = grid.flags == OK
    segs = []
    pos = v > 0
    for i in range(nr - 1):
        for j in range(nt):
            jj = (j + 1) % nt
            if not (usable[i, j] and usable[i + 1, j] and usable[i + 1, jj] and usable[i, jj]):
                continue
            case = (pos[i, j] * 1) | (pos[i + 1, j] * 2) | (pos[i + 1, jj] * 4) | (pos[i, jj] * 8)
            if case in (5, 10):
                centre = (v[i, j] + v[i + 1, j] + v[i + 1, jj] + v[i, jj]) / 4
                # ambiguous saddle: join so that the centre's sign region stays connected
                if (case == 5) == (centre > 0):
                    pairs = ((3, 2), (0, 1))
                else:
                    pairs = ((3, 0), (1, 2))
            else:
                pairs = _SEGMENTS[case]
            for e1, e2 in pairs:
                segs.append((_edge_key(i, j, e1, nt), _edge_key(i, j, e2, nt)))
    return segs


def _chain(segs):
    """Join segments sharing edge ids into polylines (lists of edge ids)."""
    adj = {}
    for s_id, (a, b) in enumerate(segs):
        adj.setdefault(a, []).append(s_id)
        adj.setdefault(b, []).append(s_id)
    used = np.zeros(len(segs), dtype=bool)
    lines = []
    # start from open ends first so open curves come out whole
    starts = [e for e, lst in adj.items() if len(lst) == 1] + list(adj)
    for start in starts:
        nxt = [s for s in adj[start] if not used[s]]
        if not nxt:
            continue
        line = [start]
        cur = start
        while True:
            cand = [s for s in adj[cur] if not used[s]]
            if not cand:
                break
            s_id = cand[0]
            used[s_id] = True
            a, b = segs[s_id]
            cur = b if a == cur else a
            line.append(cur)
        lines.append(line)
    return lines


def _edge_ends(key, grid: GridSpec):
    kind, i, j = key
    lr = np.log(grid.radii)
    th = grid.angles
    if kind == "t":  # varies in r at fixed theta
        return (lr[i], th[j]), (lr[i + 1], th[j])
    jj = (j + 1) % grid.n_theta
    t1 = th[jj] if jj else 2 * np.pi
    return (lr[i], th[j]), (lr[i], t1)


def _edge_values(key, grid: ScanGrid):
    kind, i, j = key
    if kind == "t":
        return grid.values[i, j], grid.values[i + 1, j]
    return grid.values[i, j], grid.values[i, (j + 1) % grid.spec.n_theta]


def _polar_to_lambda(lr, th):
    return np.exp(lr) * np.exp(1j * th)


def refine_edges(config: PotentialConfig, lo, hi, spec: QuadratureSpec = DEFAULT_SPEC,
                 tol: float = REFINEMENT_TOL, max_iter: int = MAX_BISECTIONS):
    """Vectorized bisection of ``Re det A`` on segments ``lo -> hi`` in (log r, theta).

    Returns the refined lambdas and ``|det A|`` there.  Endpoints must bracket
    a sign change of the real part.
    """
    lo = np.array(lo, dtype=float).reshape(-1, 2)
    hi = np.array(hi, dtype=float).reshape(-1, 2)
    if lo.shape[0] == 0:
        return np.zeros(0, complex), np.zeros(0)
    f_lo = _det_batch(config, _polar_to_lambda(lo[:, 0], lo[:, 1]), spec)[0].real
    mid = (lo + hi) / 2
    det_mid = np.zeros(lo.shape[0], complex)
    active = np.ones(lo.shape[0], dtype=bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        mid[idx] = (lo[idx] + hi[idx]) / 2
        d, _ = _det_batch(config, _polar_to_lambda(mid[idx, 0], mid[idx, 1]), spec)
        det_mid[idx] = d
        done = np.abs(d) <= tol
        same = np.sign(d.real) == np.sign(f_lo[idx])
        move_lo = idx[same & ~done]
        move_hi = idx[~same & ~done]
        lo[move_lo] = mid[move_lo]
        f_lo[move_lo] = d.real[same & ~done]
        hi[move_hi] = mid[move_hi]
        active[idx[done]] = False
    return _polar_to_lambda(mid[:, 0], mid[:, 1]), np.abs(det_mid)


def extract_zero_curves(grid: ScanGrid, spec: QuadratureSpec = DEFAULT_SPEC,
                        tol: float = REFINEMENT_TOL) -> SingularCurveSet:
    """Marching-squares zero curves of ``Re det A``, vertices refined to ``|det A| <= tol``.

    Vertices that fail to reach the tolerance (e.g. a sign change of
    ``Re det A`` through a pole rather than a zero) are dropped and counted.
    """
    lines = _chain(_segments(grid))
    keys = sorted({k for line in lines for k in line})
    ends = [_edge_ends(k, grid.spec) for k in keys]
    lo = [e[0] for e in ends]
    hi = [e[1] for e in ends]
    lam, res = refine_edges(grid.config, lo, hi, spec, tol)
    where = {k: n for n, k in enumerate(keys)}
    curves, residuals = [], []
    dropped = 0
    for line in lines:
        pts, rs = [], []
        for key in line:
            n = where[key]
            if res[n] <= tol:
                pts.append(lam[n])
                rs.append(res[n])
            else:
                dropped += 1
        if len(pts) >= 2:
            curves.append(np.array(pts))
            residuals.append(np.array(rs))
        else:
            dropped += len(pts)
    notes = {"unit_circle": "excluded: |lambda| = 1 carries real momenta where Im k = 0",
             "grid": grid.spec.to_dict(),
             "failed_cells": int(np.sum(grid.flags == FAILED)),
             "reality_residual": grid.reality_residual}
    return SingularCurveSet(curves, tol, residuals, dropped, notes)


def refine_zero(config: PotentialConfig, lambda_seed: complex, direction: complex = None,
                step: float = 1e-2, spec: QuadratureSpec = DEFAULT_SPEC,
                tol: float = REFINEMENT_TOL) -> complex:
    """Polish a zero of ``det A(k(lam))`` near ``lambda_seed``.

    Searches along ``direction`` (default radial) for a sign change of
    ``Re det A`` within ``+-step`` (in ``log|lam|`` and angle), widening up
    to eight times, then bisects.

    Raises
    ------
    BracketError
        If no sign change is found.
    """
    lam0 = complex(lambda_seed)
    if lam0 == 0:
        raise ValueError("lambda must be nonzero")
    p0 = np.array([np.log(abs(lam0)), np.angle(lam0)])
    if direction is None:
        dvec = np.array([1.0, 0.0])
    else:
        dvec = np.array([complex(direction).real, complex(direction).imag], dtype=float)
        dvec /= np.linalg.norm(dvec)
    f0 = _det_batch(config, np.array([lam0]), spec)[0][0].real
    if abs(f0) <= tol:
        return lam0
    h = step
    for _ in range(8):
        for sgn in (1.0, -1.0):
            p1 = p0 + sgn * h * dvec
            f1 = _det_batch(config, _polar_to_lambda(p1[:1], p1[1:]), spec)[0][0].real
            if np.sign(f1) != np.sign(f0):
                lam, res = refine_edges(config, [p0], [p1], spec, tol)
                if res[0] <= tol:
                    return complex(lam[0])
        h *= 2
    raise BracketError(f"no sign change of det A bracketed near lambda = {lam0}")


def symmetry_residual(grid: ScanGrid) -> float:
    """Largest ``|det(lam) - det(1/conj(lam))|`` on the grid, relative to ``1 + max|det|``.

    Meaningful when the grid is symmetric under ``r -> 1/r`` (``r_min r_max = 1``).
    """
    if not np.isclose(grid.spec.r_min * grid.spec.r_max, 1.0):
        raise ValueError("symmetry check needs r_min * r_max = 1")
    good = (grid.flags == OK) & (grid.flags[::-1] == OK)
    v = grid.values
    diff = np.abs(v - v[::-1])[good]
    return float(np.max(diff) / (1 + np.max(np.abs(v[good])))) if diff.size else 0.0


# -- real spectral singularities (d = 3, n = 2) ----------------------------------

def real_singularity_alphas(z1, z2, k_prime, gamma, spec: QuadratureSpec = DEFAULT_SPEC,
                            min_product: float = 1e-12) -> float:
    """Strength product making ``k' + i0 gamma`` a spectral singularity.

    ``det A = 1/(alpha_1 alpha_2) - G_g(z1 - z2) G_g(z2 - z1)`` in the gamma
    regime (d = 3), so ``alpha_1 alpha_2 = 1/(G_g(z1 - z2) G_g(z2 - z1))``.

    Raises
    ------
    VarietyError
        If ``k' . gamma != 0`` or the dimension is not 3.
    ValueError
        If the Green product vanishes.
    """
    km = RealLimitMomentum(np.asarray(k_prime, float), np.asarray(gamma, float))
    if km.dimension != 3:
        raise VarietyError("real singularity construction is for d = 3")
    d12 = np.asarray(z1, float) - np.asarray(z2, float)
    G, _ = limit_G(np.stack([d12, -d12]), km.k_prime, km.gamma, spec)
    prod = G[0] * G[1]
    if abs(prod) <= min_product:
        raise ValueError(f"Green product {prod:.3e} vanishes; no real singularity at this configuration")
    return float((1.0 / prod).real)


def split_alphas(product: float):
    """``alpha_1 = alpha_2 = +-sqrt|product|`` with the sign of the product."""
    r = float(np.sqrt(abs(product)))
    return (r, r) if product > 0 else (r, -r)


def det_at_real_singularity(z1, z2, k_prime, gamma, alphas, spec: QuadratureSpec = DEFAULT_SPEC):
    """``det A(k' + i0 gamma)`` for the two-point potential with strengths ``alphas``."""
    E = float(np.dot(k_prime, k_prime))
    cfg = PotentialConfig.from_points(3, E, [(z1, alphas[0]), (z2, alphas[1])])
    km = RealLimitMomentum(np.asarray(k_prime, float), np.asarray(gamma, float))
    return det_A(cfg, km, "gamma", spec)


def scan_and_extract(config: PotentialConfig, grid: GridSpec = GridSpec(),
                     spec: QuadratureSpec = DEFAULT_SPEC, workers: int = 1):
    """Convenience: scan then extract."""
    scan = scan_det_grid(config, grid, spec, workers)
    return scan, extract_zero_curves(scan, spec)
