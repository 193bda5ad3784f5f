"""Command-line front end.

Subcommands: eval, sweep, constants, dini, counterexample, hierarchy.
Global flags --config/--seed/--budget/--out/--threads apply where they
make sense; LIMITLAB_THREADS is the environment fallback for --threads.
Outputs are deterministic for a fixed config and seed, independent of
the thread count.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import limits
from .config import ConfigError, ExperimentConfig, load_config
from .geometry import sphere_quadrature, sphere_surface_area, unit_ball_volume
from .kernels import (
    dini_integral,
    heat_critical_radius,
    heat_sup_constant,
    poisson_critical_radius,
    poisson_sup_constant,
)
from .operators import SingularPointError, evaluate

FLOAT_FMT = ".17g"


def _fmt(x: float) -> str:
    return format(float(x), FLOAT_FMT)


def resolve_threads(flag: Optional[int], config_value: Optional[int] = None) -> int:
    """Worker count priority: --threads flag, then LIMITLAB_THREADS, then config."""
    value = flag
    if value is None:
        env = os.environ.get("LIMITLAB_THREADS")
        if env:
            value = int(env)
        elif config_value is not None:
            value = config_value
        else:
            value = 1
    if value == 0:
        value = os.cpu_count() or 1
    return max(1, value)


def _load(args) -> ExperimentConfig:
    if not args.config:
        raise ConfigError("this subcommand needs --config PATH")
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.budget is not None:
        cfg.budget = args.budget
    if args.out is not None:
        cfg.output_dir = args.out
    return cfg


def cmd_eval(args) -> int:
    cfg = _load(args)
    spec = cfg.build_spec()
    measure = cfg.build_measure()
    target = limits.limit_target(spec, measure, kind=cfg.target_kind)
    x = np.array([float(v) for v in args.point.split(",")])
    if len(x) != cfg.dimension:
        print(f"error: point has {len(x)} coordinates, config dimension is {cfg.dimension}",
              file=sys.stderr)
        return 2
    try:
        op_val = evaluate(spec, measure, x)
        target_val = float(target(x[None, :])[0])
    except SingularPointError as exc:
        print(json.dumps({"error": "singularity", "detail": str(exc)}), file=sys.stderr)
        return 2
    payload = {
        "x": [float(v) for v in x],
        "operator": op_val,
        "target": target_val,
        "difference": op_val - target_val,
    }
    print(json.dumps(payload))
    return 0


def cmd_sweep(args) -> int:
    cfg = _load(args)
    spec = cfg.build_spec()
    measure = cfg.build_measure()
    threads = resolve_threads(args.threads, cfg.threads)
    report = limits.sweep(
        spec,
        measure,
        cfg.t_values,
        cfg.rho,
        cfg.outer_radius,
        cfg.lambdas,
        cfg.budget,
        cfg.seed,
        target_kind=cfg.target_kind,
        lam_range=cfg.resolved_lambda_range(),
        grid_points=cfg.lambda_points,
        strata=cfg.strata,
        threads=threads,
        guard=cfg.guard,
    )
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    csv_path = outdir / f"{cfg.basename}.csv"
    json_path = outdir / f"{cfg.basename}.json"
    csv_path.write_text(report.to_csv())
    json_path.write_text(report.to_json() + "\n")
    written = [csv_path, json_path]
    if cfg.figures and not args.no_figures:
        from .plotting import render_sweep_figures

        written += render_sweep_figures(report, outdir, cfg.basename)
    for p in written:
        print(p)
    return 0


def cmd_constants(args) -> int:
    dims = [int(d) for d in args.dims.split(",")] if args.dims else [args.n]
    print(
        "n,unit_ball_volume,sphere_surface,poisson_sup,poisson_radius,"
        "heat_sup,heat_radius,counterexample_bound"
    )
    for n in dims:
        omega = unit_ball_volume(n)
        row = [
            str(n),
            _fmt(omega),
            _fmt(sphere_surface_area(n)),
            _fmt(poisson_sup_constant(n)),
            _fmt(poisson_critical_radius(n)),
            _fmt(heat_sup_constant(n)),
            _fmt(heat_critical_radius(n)),
            _fmt(omega * omega * 2.0 ** (1 - n)),
        ]
        print(",".join(row))
    return 0


def cmd_dini(args) -> int:
    cfg = _load(args)
    if cfg.dini is None:
        raise ConfigError("config has no [dini] section")
    from .config import build_homogeneous_kernel

    kernel = build_homogeneous_kernel(cfg.kernel, cfg.dimension)
    rule = sphere_quadrature(cfg.dimension, 64)
    d = cfg.dini
    result = dini_integral(
        kernel, d.q, d.s, t_max=d.t_max, rule=rule, shift_budget=d.shift_budget,
        blocks=d.blocks, seed=cfg.seed,
    )
    print(f"{'t':>14}  {'modulus':>22}  {'block':>22}")
    for t, m, b in zip(result.scales, result.moduli, result.block_contributions):
        print(f"{t:>14.6g}  {m:>22.15g}  {b:>22.15g}")
    print(f"integral_estimate = {_fmt(result.value)}")
    print(f"divergence_suspected = {str(result.divergence_suspected).lower()}")
    if args.out:
        from .plotting import render_dini_figure

        p = render_dini_figure(result, args.out, cfg.basename)
        print(p, file=sys.stderr)
    return 0


def cmd_counterexample(args) -> int:
    cert = limits.fullspace_counterexample(args.n, args.t, budget=args.budget or 100,
                                      seed=args.seed or 0)
    print(json.dumps(cert.to_dict(), indent=2, sort_keys=True))
    return 0 if cert.ok else 1


def cmd_hierarchy(args) -> int:
    t_values = [float(t) for t in args.t_values.split(",")]
    lams = [float(l) for l in args.lambdas.split(",")]
    report = limits.hierarchy_demo(
        args.p,
        args.seed or 0,
        n=args.n,
        t_list=t_values,
        lam_list=lams,
        budget=args.budget or 20000,
        threads=resolve_threads(args.threads),
    )
    print(report.to_json())
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "hierarchy.csv").write_text(report.to_csv())
        (outdir / "hierarchy.json").write_text(report.to_json() + "\n")
        from .plotting import render_hierarchy_figure

        render_hierarchy_figure(report, outdir, "hierarchy")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="limitlab",
        description="Concentration-limit experiments for maximal, singular and "
        "fractional integral operators.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="TOML experiment file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--budget", type=int, default=None)
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (0 = auto; env LIMITLAB_THREADS)")

    p_eval = sub.add_parser("eval", help="evaluate operator and target at a point")
    common(p_eval)
    p_eval.add_argument("--point", required=True, help="comma-separated coordinates")
    p_eval.set_defaults(func=cmd_eval)

    p_sweep = sub.add_parser("sweep", help="run a t-sweep and write CSV/JSON/figures")
    common(p_sweep)
    p_sweep.add_argument("--no-figures", action="store_true")
    p_sweep.set_defaults(func=cmd_sweep)

    p_const = sub.add_parser("constants", help="print the closed-form constant table")
    p_const.add_argument("-n", type=int, default=1)
    p_const.add_argument("--dims", help="comma-separated dimensions")
    p_const.set_defaults(func=cmd_constants)

    p_dini = sub.add_parser("dini", help="continuity modulus samples and Dini integral")
    common(p_dini)
    p_dini.set_defaults(func=cmd_dini)

    p_ce = sub.add_parser("counterexample", help="full-space failure certificate")
    common(p_ce)
    p_ce.add_argument("-n", type=int, default=1)
    p_ce.add_argument("--t", type=float, required=True)
    p_ce.set_defaults(func=cmd_counterexample)

    p_h = sub.add_parser("hierarchy", help="type-2 vs type-1 separation demo")
    common(p_h)
    p_h.add_argument("--p", type=float, default=1.0)
    p_h.add_argument("-n", type=int, default=1)
    p_h.add_argument("--t-values", default="0.1,0.01,0.001")
    p_h.add_argument("--lambdas", default="0.5,1.0")
    p_h.set_defaults(func=cmd_hierarchy)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
