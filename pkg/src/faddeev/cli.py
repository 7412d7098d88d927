"""Command-line front end.

Commands: ``eval``, ``green``, ``curves``, ``figures``, ``converge``, ``verify``.
Exit codes: 0 success, 1 verification failure, 2 invalid configuration,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import jsonschema
import numpy as np

from .errors import BracketError, FaddeevError, QuadratureError, SpectralSingularity, VarietyError
from .geometry import ComplexMomentum, RealLimitMomentum, build_k_3d, lambda_to_k
from .quadrature import QuadratureSpec

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["dimension", "energy", "points"],
    "properties": {
        "dimension": {"enum": [2, 3]},
        "energy": {"type": "number"},
        "points": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["z", "alpha"],
                "properties": {
                    "z": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 3},
                    "alpha": {"type": "number"},
                },
            },
        },
    },
}

CURVES_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["curves", "preset", "config"],
    "properties": {
        "curves": {"type": "array", "items": {"type": "array", "items": {
            "type": "object", "additionalProperties": False, "required": ["re", "im"],
            "properties": {"re": {"type": "number"}, "im": {"type": "number"}}}}},
        "preset": {"type": ["integer", "null"]},
        "config": {"anyOf": [{"type": "null"}, CONFIG_SCHEMA]},
        "refinement_tol": {"type": "number"},
        "annotations": {"type": "object"},
    },
}


class ConfigError(ValueError):
    """Invalid command-line or file configuration."""


def load_config(path):
    from .solver import PotentialConfig

    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        jsonschema.validate(data, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config {path}: {exc.message}") from exc
    if any(len(p["z"]) != data["dimension"] for p in data["points"]):
        raise ConfigError("every z must have `dimension` components")
    return PotentialConfig.from_dict(data)


def _complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from exc


def _cjson(z):
    return {"re": float(np.real(z)), "im": float(np.imag(z))}


def _write(text: str, out) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _spec(args) -> QuadratureSpec:
    return QuadratureSpec(rel_tol=args.rel_tol, abs_tol=args.abs_tol)


def _workers(args) -> int:
    from .singularities import default_workers

    return args.workers if args.workers else default_workers()


def _momentum(args, d: int, E: float):
    """Momentum and regime from the flags: (k, regime)."""
    gamma = None if args.gamma is None else np.asarray(args.gamma, float)
    if args.lam is not None:
        if d != 2:
            raise ConfigError("--lambda is for d = 2")
        k = lambda_to_k(args.lam, E)
    elif args.k_re is not None:
        re = np.asarray(args.k_re, float)
        im = np.zeros_like(re) if args.k_im is None else np.asarray(args.k_im, float)
        if re.size != d or im.size != d:
            raise ConfigError(f"--k-re/--k-im need {d} components")
        k = ComplexMomentum(re, im)
    elif args.b_norm is not None:
        if d != 3 or args.a_dir is None or args.b_dir is None:
            raise ConfigError("--a-dir, --b-dir, --b-norm build a d = 3 momentum")
        k = build_k_3d(E, args.a_dir, args.b_dir, args.b_norm)
    else:
        raise ConfigError("give a momentum: --lambda, --k-re/--k-im or --a-dir/--b-dir/--b-norm")
    regime = args.regime
    if regime == "auto":
        regime = "complex" if not k.is_real else ("gamma" if gamma is not None else "plus")
    if regime == "complex":
        return k, regime
    if not k.is_real:
        raise ConfigError(f"regime {regime} needs a real momentum")
    if regime == "gamma":
        if gamma is None:
            raise ConfigError("regime gamma needs --gamma")
        return RealLimitMomentum(k.re, gamma), regime
    return k.re, regime


def _momentum_json(k, regime):
    if regime == "complex":
        return [_cjson(v) for v in k.k]
    if regime == "gamma":
        return {"k_prime": k.k_prime.tolist(), "gamma": k.gamma.tolist()}
    return [float(v) for v in k]


# -- commands --------------------------------------------------------------------

def cmd_eval(args) -> int:
    from .solver import eval_h, eval_psi, solve_coefficients

    x = np.asarray(args.x, float)
    if args.config:
        cfg = load_config(args.config)
        d, E = cfg.dimension, cfg.energy
    else:
        if args.energy is None:
            raise ConfigError("eval needs --config or --energy")
        cfg = None
        d, E = x.size, args.energy
    if x.size != d:
        raise ConfigError(f"--x needs {d} components")
    k, regime = _momentum(args, d, E)
    if regime == "complex":
        k.require_on_variety(E)
    kv = k.k if regime == "complex" else (k.k_prime if regime == "gamma" else k)
    out = {"regime": regime, "k": _momentum_json(k, regime), "x": x.tolist()}
    if cfg is None or not cfg.active.size:
        psi = np.exp(1j * (np.asarray(kv) @ x))
        out.update({"psi": _cjson(psi), "mu": _cjson(1.0), "C": [], "detA": _cjson(1.0)})
    else:
        spec = _spec(args)
        sol = solve_coefficients(cfg, k, regime, spec)
        ev = eval_psi(cfg, x, k, regime, spec, solution=sol)
        out.update({"psi": _cjson(ev.psi), "mu": _cjson(ev.mu), "C": [_cjson(c) for c in sol.C],
                    "c": [_cjson(c) for c in sol.c], "detA": _cjson(sol.detA),
                    "condition": sol.condition_estimate})
        if args.l is not None:
            lv = np.asarray(args.l, complex)
            if regime == "complex":
                lv = ComplexMomentum.from_complex(lv.real + 1j * np.asarray(k.im))
            sd = eval_h(cfg, k, lv, regime, spec, solution=sol)
            out[sd.kind] = _cjson(sd.value)
    _write(_dump(out), args.out)
    return EXIT_OK


def cmd_green(args) -> int:
    from . import green

    x = np.asarray(args.x, float)
    d = x.size
    if args.energy is None:
        raise ConfigError("green needs --energy")
    k, regime = _momentum(args, d, args.energy)
    spec = _spec(args)
    if regime == "complex":
        k.require_on_variety(args.energy)
        g = green.oracle_g_direct(x, k, spec=spec) if args.oracle else green.eval_g(x, k, spec)
        G = np.exp(1j * (k.k @ x)) * g.value
    elif regime == "gamma":
        g = green.eval_g_gamma(x, k, spec)
        G = np.exp(1j * (k.k_prime @ x)) * g.value
    else:
        g = green.oracle_g_plus(x, k) if args.oracle else green.eval_g_plus(x, k, spec)
        G = np.exp(1j * (k @ x)) * g.value
    out = {"regime": regime, "k": _momentum_json(k, regime), "x": x.tolist(), "g": _cjson(g.value),
           "G": _cjson(G), "abs_error_estimate": g.abs_error_estimate, "method": g.method}
    _write(_dump(out), args.out)
    return EXIT_OK


def _grid_from_args(args, base):
    from .singularities import GridSpec

    return GridSpec(args.r_min if args.r_min is not None else base.r_min,
                    args.r_max if args.r_max is not None else base.r_max,
                    args.n_r if args.n_r is not None else base.n_r,
                    args.n_theta if args.n_theta is not None else base.n_theta)


def _run_curves(cfg, grid, args, preset) -> int:
    from .singularities import extract_zero_curves, scan_det_grid

    spec = _spec(args)
    scan = scan_det_grid(cfg, grid, spec, _workers(args))
    curves = extract_zero_curves(scan, spec)
    obj = curves.to_json_obj(preset, cfg)
    jsonschema.validate(obj, CURVES_SCHEMA)
    _write(_dump(obj), args.out)
    if args.grid_out:
        Path(args.grid_out).write_text(scan.to_csv())
    return EXIT_OK


def cmd_curves(args) -> int:
    from .singularities import GridSpec

    if not args.config:
        raise ConfigError("curves needs --config")
    cfg = load_config(args.config)
    if cfg.dimension != 2:
        raise ConfigError("curves needs a d = 2 configuration")
    if cfg.energy <= 0:
        raise ConfigError("curves needs E > 0")
    return _run_curves(cfg, _grid_from_args(args, GridSpec()), args, None)


def cmd_figures(args) -> int:
    from .singularities import figure_preset

    try:
        cfg, grid = figure_preset(args.id)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return _run_curves(cfg, _grid_from_args(args, grid), args, args.id)


def cmd_converge(args) -> int:
    from .regularization import DEFAULT_N_SEQUENCE, convergence_study

    if not args.config:
        raise ConfigError("converge needs --config")
    cfg = load_config(args.config)
    k, regime = _momentum(args, cfg.dimension, cfg.energy)
    if regime != "complex":
        raise ConfigError("converge needs a complex momentum")
    Ns = args.N if args.N else DEFAULT_N_SEQUENCE
    if any(n <= 0 for n in Ns):
        raise ConfigError("cutoffs must be positive")
    rep = convergence_study(cfg, k, Ns, workers=_workers(args))
    if args.format == "json":
        obj = {"rows": [{"N": r.N, "err_abs": r.err_abs, "err_rel": r.err_rel, "excluded_flag": r.excluded}
                        for r in rep.rows],
               "fitted_exponent": rep.fitted_exponent, "limit": [_cjson(c) for c in rep.limit],
               "extrapolated": [_cjson(c) for c in rep.extrapolated],
               "extrapolation_rel_error": rep.extrapolation_rel_error}
        _write(_dump(obj), args.out)
    else:
        _write(rep.to_csv(), args.out)
    return EXIT_OK


def default_suite(seed: int, samples: int, tol_scale: float, suite: str):
    """The verification suite on the built-in configurations."""
    from . import verification as V
    from .geometry import RealLimitMomentum as RLM
    from .sampling import admissible_lambdas, orthogonal_unit, random_complex_k, random_unit, random_x
    from .singularities import figure_preset
    from .solver import PotentialConfig

    rng = np.random.default_rng(seed)
    reports = []
    want = (lambda name: suite in ("all", name))  # noqa: E731
    if want("pointmass"):
        for _ in range(samples):
            k_lam = complex(rng.uniform(0.3, 3) * np.exp(1j * rng.uniform(0, 2 * np.pi)))
            if abs(abs(k_lam) - 1) > 0.05:
                reports.append(V.check_point_mass(rng.normal(size=2), k_lam, 4.0, 1e-6 * tol_scale))
    if want("dbar"):
        for fid in (1, 2, 3, 4):
            cfg, _ = figure_preset(fid)
            for lam in admissible_lambdas(cfg, rng, samples):
                x = random_x(rng, cfg)
                reports.append(V.check_dbar(cfg, x, lam, "psi", threshold=1e-4 * tol_scale))
                reports.append(V.check_dbar(cfg, rng.normal(size=2), lam, "H", threshold=1e-4 * tol_scale))
    if want("limit"):
        c3 = PotentialConfig.from_points(3, 4.0, [((0.0, 0.0, 0.0), 3.0)])
        c2, _ = figure_preset(1)
        for cfg, thr in ((c3, 1e-6), (c2, 1e-4)):
            d = cfg.dimension
            for _ in range(samples):
                kh = random_unit(rng, d)
                km = RLM(np.sqrt(cfg.energy) * kh, orthogonal_unit(rng, kh))
                reports.append(V.check_limit_relation(cfg, km, None, random_x(rng, cfg), "psi",
                                                      threshold=thr * tol_scale))
                lh = random_unit(rng, d)
                reports.append(V.check_limit_relation(cfg, km, None, np.sqrt(cfg.energy) * lh, "h",
                                                      threshold=thr * tol_scale))
    if want("helmholtz"):
        c2, _ = figure_preset(1)
        c3 = PotentialConfig.from_points(3, 4.0, [((0.0, 0.0, 0.0), 3.0), ((0.4, 0.1, -0.3), 2.0)])
        for cfg in (c2, c3):
            d = cfg.dimension
            kc = random_complex_k(rng, cfg.energy, d)
            kh = random_unit(rng, d)
            for k, reg in ((kc, "complex"), (RLM(2.0 * kh, orthogonal_unit(rng, kh)), "gamma"), (2.0 * kh, "plus")):
                try:
                    reports.append(V.check_helmholtz(cfg, random_x(rng, cfg), k, reg))
                except SpectralSingularity:
                    continue
    if want("asymptotic"):
        c3 = PotentialConfig.from_points(3, 4.0, [((0.0, 0.0, 0.0), 3.0), ((0.4, 0.1, -0.3), 2.0)])
        a = random_unit(rng, 3)
        reports.append(V.check_mu_asymptotic(c3, random_x(rng, c3), (a, orthogonal_unit(rng, a))))
        c2, _ = figure_preset(1)
        reports.append(V.check_mu_asymptotic(c2, random_x(rng, c2), rng.uniform(0, 2 * np.pi)))
    if want("reality"):
        c3 = PotentialConfig.from_points(3, 4.0, [((0.0, 0.0, 0.0), 3.0), ((0.4, 0.1, -0.3), 2.0)])
        c2, _ = figure_preset(1)
        for d, cfg in ((2, c2), (3, c3)):
            for _ in range(samples):
                k = random_complex_k(rng, 4.0, d)
                reports.append(V.check_G_reality(rng.normal(size=d), k, 1e-6 * tol_scale))
                try:
                    reports.append(V.check_det_reality(cfg, k, 1e-6 * tol_scale))
                except SpectralSingularity:
                    continue
    return reports


def cmd_verify(args) -> int:
    reports = default_suite(args.seed, args.samples, args.tol_scale, args.suite)
    obj = [r.to_json_obj() for r in reports]
    _write(_dump(obj), args.out)
    failed = [r for r in reports if not r.passed]
    sys.stderr.write(f"{len(reports) - len(failed)}/{len(reports)} checks passed\n")
    return EXIT_VERIFY if failed else EXIT_OK


# -- parser ----------------------------------------------------------------------

def _add_common(p):
    p.add_argument("--config", help="potential configuration (JSON)")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.add_argument("--workers", type=int, default=None,
                   help="worker count (default: $FADDEEV_WORKERS or the CPU count)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rel-tol", type=float, default=1e-8)
    p.add_argument("--abs-tol", type=float, default=1e-12)


def _add_momentum(p):
    p.add_argument("--lambda", dest="lam", type=_complex, help="lambda chart coordinate (d = 2)")
    p.add_argument("--k-re", type=float, nargs="+")
    p.add_argument("--k-im", type=float, nargs="+")
    p.add_argument("--a-dir", type=float, nargs=3)
    p.add_argument("--b-dir", type=float, nargs=3)
    p.add_argument("--b-norm", type=float)
    p.add_argument("--gamma", type=float, nargs="+", help="approach direction for the gamma regime")
    p.add_argument("--regime", choices=("auto", "complex", "gamma", "plus"), default="auto")


def _add_grid(p):
    p.add_argument("--r-min", type=float)
    p.add_argument("--r-max", type=float)
    p.add_argument("--n-r", type=int)
    p.add_argument("--n-theta", type=int)
    p.add_argument("--grid-out", help="write the sampled determinant grid as CSV")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="faddeev", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="psi, mu, C and det A at one point")
    _add_common(p)
    _add_momentum(p)
    p.add_argument("--energy", type=float)
    p.add_argument("--x", type=float, nargs="+", required=True)
    p.add_argument("--l", type=float, nargs="+", help="real part of the second momentum for h, h_gamma or f; in the complex regime Im l = Im k")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("green", help="Green functions g, G, g_gamma, g+")
    _add_common(p)
    _add_momentum(p)
    p.add_argument("--energy", type=float)
    p.add_argument("--x", type=float, nargs="+", required=True)
    p.add_argument("--oracle", action="store_true", help="use the brute-force oracle")
    p.set_defaults(func=cmd_green)

    p = sub.add_parser("curves", help="zero curves of det A in the lambda plane")
    _add_common(p)
    _add_grid(p)
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("figures", help="curves for figure presets 1-4")
    p.add_argument("id", type=int)
    _add_common(p)
    _add_grid(p)
    p.set_defaults(func=cmd_figures)

    p = sub.add_parser("converge", help="cutoff-model convergence study")
    _add_common(p)
    _add_momentum(p)
    p.add_argument("--N", type=float, nargs="+")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("verify", help="identity verification suite")
    _add_common(p)
    p.add_argument("--suite", choices=("all", "dbar", "limit", "helmholtz", "asymptotic", "reality", "pointmass"),
                   default="all")
    p.add_argument("--samples", type=int, default=3)
    p.add_argument("--tol-scale", type=float, default=1.0)
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, VarietyError, jsonschema.ValidationError) as exc:
        sys.stderr.write(f"invalid configuration: {exc}\n")
        return EXIT_CONFIG
    except (QuadratureError, SpectralSingularity, BracketError, FaddeevError, ArithmeticError) as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERIC
    except ValueError as exc:
        sys.stderr.write(f"invalid configuration: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
