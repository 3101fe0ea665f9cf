"""Command-line entry point: ``grassharm <subcommand> ...``.

Exit codes: 0 success, 2 configuration/validation error, 3 numerical
certification failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from importlib import resources

import jsonschema

from . import lattice as lc
from .io import dumps_json, root_rows, rows_to_csv, weight_records, weight_rows, write_text
from .montecarlo import (
    OrbitalMeasureSpec,
    convolution_consistency_check,
    functional_equation_check,
    pairing_estimate,
    pairing_reference,
)
from .sobolev import density_synthesis, sobolev_partial_sums
from .spherical import SphericalEvalOptions, TorusPoint, spherical_values

EXIT_OK, EXIT_CONFIG, EXIT_UNCERTIFIED = 0, 2, 3


class ConfigError(Exception):
    pass


def load_config(path: str, schema_name: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    schema = json.loads(resources.files("grassharm").joinpath(f"schemas/{schema_name}.v1.json").read_text())
    try:
        jsonschema.validate(cfg, schema)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"{path}: {exc.message}") from exc
    return cfg


def _space(cfg) -> lc.GrassmannParams:
    return lc.make_space(cfg["p"], cfg["q"])


def _common(cfg: dict, args) -> tuple[int, int]:
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    workers = args.workers if args.workers is not None else cfg.get("workers", 1)
    return seed, workers


def _emit(args, payload: dict, header=None, rows=None) -> None:
    if args.format == "csv" and header is not None:
        write_text(rows_to_csv(header, rows), args.out)
    else:
        write_text(dumps_json(payload), args.out)


def cmd_roots(args) -> int:
    space = lc.make_space(args.p, args.q)
    header, rows = root_rows(space)
    payload = {
        "p": space.p,
        "q": space.q,
        "rho": list(lc.rho(space)),
        "roots": [dict(zip(header, row)) for row in rows],
    }
    _emit(args, payload, header, rows)
    return EXIT_OK


def cmd_weights(args) -> int:
    space = lc.make_space(args.p, args.q)
    weights = lc.enumerate_weights(space, args.l, args.m1_max)
    header, rows = weight_rows(space, weights, args.casimir_scale)
    _emit(args, weight_records(space, weights, args.casimir_scale), header, rows)
    return EXIT_OK


def cmd_threshold(args) -> int:
    space = lc.make_space(args.p, args.q)
    c = lc.smoothness_threshold(space, args.nu)
    s = args.nu + ((space.p + space.q) ** 2 - 1) / 2 + args.epsilon
    r = args.r if args.r is not None else c
    payload = {
        "p": space.p,
        "q": space.q,
        "nu": args.nu,
        "threshold": c,
        "s": s,
        "r": r,
        "r_strict_bound": lc.sobolev_r_bound(space, s),
        "sobolev_condition": lc.sobolev_r_condition(space, s, r),
        "absolute_continuity": lc.absolute_continuity_gate(space, r),
    }
    header = list(payload)
    _emit(args, payload, header, [[payload[k] for k in header]])
    return EXIT_OK


def cmd_spherical(args) -> int:
    cfg = load_config(args.config, "spherical")
    space = _space(cfg)
    opts = SphericalEvalOptions(
        cfg.get("confluence_tolerance", 1e-6),
        cfg.get("normalization_mode", "identity_calibrated"),
    )
    grid = [TorusPoint(tuple(t)) for t in cfg["grid"]]
    if any(pt.q != space.q for pt in grid):
        raise ConfigError("grid points must have q angles")
    q = space.q
    header = [f"m_{i}" for i in range(1, q + 1)] + ["l"] + [f"t_{i}" for i in range(1, q + 1)] + ["psi"]
    rows = []
    for wcfg in cfg["weights"]:
        w = lc.make_weight(space, cfg["l"], wcfg["m"])
        vals = spherical_values(space, w, [pt.t for pt in grid], opts)
        for pt, v in zip(grid, vals):
            rows.append([*w.m, w.l, *pt.t, float(v)])
    payload = {"p": space.p, "q": q, "rows": [dict(zip(header, r)) for r in rows]}
    _emit(args, payload, header, rows)
    return EXIT_OK


def _mc_payload(est, reference) -> dict:
    delta = est.value - reference
    sig = abs(delta) / est.stderr if est.stderr > 0 else (0.0 if abs(delta) < 1e-10 else math.inf)
    return {
        "estimate": [est.value.real, est.value.imag],
        "stderr": est.stderr,
        "reference": [reference, 0.0],
        "sigmas": sig,
        "samples": est.samples,
    }


def cmd_convolve_mc(args) -> int:
    cfg = load_config(args.config, "convolve_mc")
    space = _space(cfg)
    seed, workers = _common(cfg, args)
    w = lc.make_weight(space, cfg["l"], cfg["weight"]["m"])
    mode = cfg.get("mode", "pairing")
    n = cfg["samples"]
    if mode == "functional-equation":
        if "u1" not in cfg or "u2" not in cfg:
            raise ConfigError("functional-equation mode needs u1 and u2")
        res = functional_equation_check(space, cfg["l"], w, cfg["u1"], cfg["u2"], n, seed, workers)
        payload = _mc_payload(res.residual, 0.0)
        payload["product"] = res.reference
    else:
        if "points" not in cfg:
            raise ConfigError(f"{mode} mode needs points")
        spec = OrbitalMeasureSpec(cfg["l"], [tuple(t) for t in cfg["points"]])
        if any(pt.q != space.q for pt in spec.points):
            raise ConfigError("points must have q angles")
        if mode == "pairing":
            est = pairing_estimate(spec, space, w, n, seed, workers)
            payload = _mc_payload(est, pairing_reference(spec, space, w))
        else:
            payload = convolution_consistency_check(spec, space, w, n, seed, workers).to_dict()
    payload["mode"] = mode
    write_text(dumps_json(payload), args.out)
    return EXIT_OK


def cmd_sobolev(args) -> int:
    cfg = load_config(args.config, "sobolev")
    space = _space(cfg)
    _, workers = _common(cfg, args)
    if "s" in cfg:
        s = cfg["s"]
    elif "nu" in cfg:
        s = cfg["nu"] + ((space.p + space.q) ** 2 - 1) / 2 + cfg.get("epsilon", args.epsilon)
    else:
        raise ConfigError("sobolev config needs s or nu")
    spec = OrbitalMeasureSpec(cfg["l"], [tuple(t) for t in cfg["points"]])
    rep = sobolev_partial_sums(space, spec, s, cfg["m1_max"], cfg.get("casimir_scale"), workers=workers)
    if args.format == "csv":
        rows = [[c, v, rep.tail_bound if c == rep.cutoff else ""] for c, v in enumerate(rep.partial_sums)]
        write_text(rows_to_csv(["cutoff", "partial_sum", "tail_bound"], rows), args.out)
    else:
        write_text(dumps_json(rep.to_dict()), args.out)
    return EXIT_OK if rep.converged else EXIT_UNCERTIFIED


def cmd_synthesize(args) -> int:
    cfg = load_config(args.config, "synthesize")
    space = _space(cfg)
    spec = OrbitalMeasureSpec(cfg["l"], [tuple(t) for t in cfg["points"]])
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        dens = density_synthesis(space, spec, cfg["grid"], cfg["m1_max"])
    q = space.q
    header = [f"t_{i}" for i in range(1, q + 1)] + ["f"]
    rows = [[*pt.t, v] for pt, v in zip(dens.grid, dens.values)]
    payload = {"cutoff": dens.cutoff, "warnings": dens.warnings, "rows": [dict(zip(header, r)) for r in rows]}
    _emit(args, payload, header, rows)
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_acceptance

    only = set(args.only) if args.only else None

    def progress(res):
        print(f"{res.line()}  ({res.elapsed:.1f}s)", file=sys.stderr, flush=True)

    seed = args.seed if args.seed is not None else 7
    workers = args.workers if args.workers is not None else 1
    report = run_acceptance(seed, workers, only, progress)
    if args.out:
        write_text(report.to_json(), args.out)
    print(report.table())
    return EXIT_OK if report.passed else EXIT_UNCERTIFIED


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment descriptor")
    common.add_argument("--seed", type=int, help="root seed for random streams")
    common.add_argument("--workers", type=int, help="worker threads (results do not depend on this)")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="json")

    parser = argparse.ArgumentParser(prog="grassharm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("roots", parents=[common], help="positive restricted roots and rho")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.set_defaults(func=cmd_roots)

    p = sub.add_parser("weights", parents=[common], help="weight table with dimensions and Casimir values")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--l", type=int, default=0)
    p.add_argument("--m1-max", type=int, required=True)
    p.add_argument("--casimir-scale", type=float)
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("threshold", parents=[common], help="smoothness threshold C(p,q,nu) and the H^s condition")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--nu", type=int, required=True)
    p.add_argument("--r", type=int)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("spherical", parents=[common], help="spherical function table on a torus grid")
    p.set_defaults(func=cmd_spherical)

    p = sub.add_parser("convolve-mc", parents=[common], help="Monte Carlo pairing / functional-equation / consistency run")
    p.set_defaults(func=cmd_convolve_mc)

    p = sub.add_parser("sobolev", parents=[common], help="Sobolev-norm partial sums with tail certificate")
    p.add_argument("--epsilon", type=float, default=0.01)
    p.set_defaults(func=cmd_sobolev)

    p = sub.add_parser("synthesize", parents=[common], help="truncated density series on a torus grid")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("verify", parents=[common], help="run the acceptance checks and print a pass/fail table")
    p.add_argument("--only", type=int, nargs="+", help="criterion numbers to run")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    needs_config = args.command in ("spherical", "convolve-mc", "sobolev", "synthesize")
    if needs_config and not args.config:
        print(f"error: {args.command} requires --config", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except (ConfigError, lc.ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
