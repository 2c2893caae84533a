"""Command-line driver: solve | grad | fdcheck | ablate | optimize.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

import numpy as np

from .config import parse_config
from .differential import estimate_diff_grid, fd_reference_gradient
from .errors import ConfigError, DiffWosError
from .functional import estimate_functional, functional_gradient
from .gridfield import GridField, write_gridfield
from .harness import default_ablation_scene, rmse_sweep
from .optimizer import optimize, write_iteration_log
from .rng import RngStream
from .solver import estimate_grid


def _grid_spec(run, args):
    nx, ny = args.grid if args.grid else run.output.get("grid", (32, 32))
    bbox = run.output.get("bbox")
    if bbox is None:
        (xmin, ymin), (xmax, ymax) = run.scene.boundary.bounding_box()
        bbox = (xmin, ymin, xmax, ymax)
    return int(nx), int(ny), tuple(float(v) for v in bbox)


def _parse_params(arg, n_params):
    if arg is None:
        return list(range(n_params))
    idx = [int(v) for v in arg.split(",") if v != ""]
    bad = [k for k in idx if not 0 <= k < n_params]
    if bad:
        raise ConfigError(f"parameter indices {bad} out of range [0, {n_params})")
    return idx


def _apply_overrides(run, args):
    if getattr(args, "wpp", None) is not None:
        run.solver = replace(run.solver, walks_per_point=args.wpp)
        run.estimator = replace(run.estimator, walks=max(args.wpp, 2))
    if getattr(args, "estimator", None) is not None:
        run.estimator = replace(run.estimator, kind=args.estimator)
    if getattr(args, "method", None) is not None:
        run.solver = replace(run.solver, nd_method=args.method)
    if getattr(args, "seed", None) is not None:
        run.seed = args.seed
    return run


def cmd_solve(args):
    run = _apply_overrides(parse_config(args.config), args)
    nx, ny, bbox = _grid_spec(run, args)
    grid = GridField(nx, ny, bbox)
    est = estimate_grid(grid.points(), run.scene, run.bvp, run.solver,
                        RngStream(run.seed))
    grid.values[:, :, 0] = est.mean.reshape(ny, nx)
    out = args.out or run.output.get("path", "solution.grid")
    write_gridfield(out, grid)
    inside = est.count > 0
    print(f"solve: {int(inside.sum())}/{nx * ny} interior points, "
          f"wpp={run.solver.walks_per_point}, "
          f"mean stderr={np.sqrt(np.nanmean(est.variance[inside]) / run.solver.walks_per_point):.3e}, "
          f"truncated={est.stats.truncated} -> {out}")
    return 0


def cmd_grad(args):
    run = _apply_overrides(parse_config(args.config), args)
    scene = run.scene
    idx = _parse_params(args.params, scene.n_params)
    nx, ny, bbox = _grid_spec(run, args)
    grid = GridField(nx, ny, bbox, np.zeros((ny, nx, len(idx))))
    cfg = replace(run.solver, walks_per_point=run.solver.walks_per_point)
    est = estimate_diff_grid(grid.points(), scene, run.bvp, cfg, RngStream(run.seed))
    for c, k in enumerate(idx):
        grid.values[:, :, c] = est.du_mean[:, k].reshape(ny, nx)
    out = args.out or run.output.get("path", "gradient.grid")
    write_gridfield(out, grid)
    roles = scene.param_roles()
    print(f"grad: params {[roles[k] for k in idx]} -> {out}")
    return 0


def cmd_fdcheck(args):
    run = _apply_overrides(parse_config(args.config), args)
    scene = run.scene
    idx = _parse_params(args.params, scene.n_params)
    rng = RngStream(run.seed)
    grad = functional_gradient(scene, run.bvp, run.functional, run.solver,
                               run.estimator, rng.derive(0))

    def evaluate(sc, stream):
        return estimate_functional(sc, run.bvp, run.functional, run.solver,
                                   run.estimator, stream)

    fd, failed = fd_reference_gradient(evaluate, scene, args.h,
                                       rng.derive(1), param_indices=idx)
    roles = scene.param_roles()
    worst = 0.0
    print(f"{'param':<20} {'grad':>12} {'fd':>12} {'rel diff':>10}")
    for k in idx:
        if failed[k]:
            print(f"{roles[k]:<20} {grad[k]:>12.5g} {'failed':>12}")
            continue
        scale = max(abs(grad[k]), abs(fd[k]), 1e-12)
        rel = abs(grad[k] - fd[k]) / scale
        worst = max(worst, rel)
        print(f"{roles[k]:<20} {grad[k]:>12.5g} {fd[k]:>12.5g} {rel:>10.3f}")
    print(f"fdcheck: worst relative disagreement {worst:.3f}")
    return 0


def cmd_ablate(args):
    run = _apply_overrides(parse_config(args.config), args)
    scene, weights = default_ablation_scene()
    pts = [(0.35, 0.4), (0.5, 0.55), (0.62, 0.45), (0.5, 0.35)]
    rng = RngStream(run.seed)
    # reference: high-walk-count estimate at tight epsilon
    from .harness import _combined_derivative
    ref_cfg = replace(run.solver, eps=1e-4)
    reference = [
        _combined_derivative(x, scene, run.bvp, ref_cfg, rng.derive(99, i),
                             args.ref_walks, weights)
        for i, x in enumerate(pts)
    ]
    levels = {
        "eps": [1e-4, 1e-3, 1e-2, 1e-1],
        "offset": [1.0, 10.0, 100.0],
        "nd_method": ["backward", "offset_ball"],
        "estimator": ["uncorrelated", "correlated", "ustat"],
    }[args.axis]
    report = rmse_sweep(scene, run.bvp, args.axis, levels, reference,
                        run.solver, rng.derive(1), pts, weights,
                        n_seeds=args.seeds, walks=args.walks)
    out = args.out or run.output.get("log", f"ablation_{args.axis}.csv")
    report.write_csv(out)
    for lv in report.levels:
        print(f"ablate {args.axis}={lv.level}: rmse={lv.rmse:.4g} "
              f"bias={lv.bias:.4g} var={lv.variance:.4g}")
    print(f"ablate: report -> {out}")
    return 0


def cmd_optimize(args):
    run = _apply_overrides(parse_config(args.config), args)
    params, records, notes = optimize(run.scene, run.bvp, run.functional,
                                      run.optimizer, run.solver, run.estimator,
                                      RngStream(run.seed))
    log = args.out or run.output.get("log", "optimize_log.csv")
    write_iteration_log(log, records)
    final = {"params": list(np.asarray(params, dtype=float)),
             "roles": run.scene.param_roles(),
             "final_loss": records[-1].loss if records else None,
             "notes": notes}
    params_out = run.output.get("path", "optimized_params.json")
    with open(params_out, "w") as fh:
        json.dump(final, fh, indent=2)
    print(f"optimize: {len(records)} iterations, "
          f"loss {records[0].loss:.5g} -> {records[-1].loss:.5g}, "
          f"log -> {log}, params -> {params_out}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="diffwos",
        description="Grid-free Monte Carlo solver and shape optimizer for "
                    "screened Poisson Dirichlet problems.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, params=False):
        sp.add_argument("config", help="scene config (JSON path)")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--wpp", type=int, default=None,
                        help="walks per point override")
        sp.add_argument("--out", default=None, help="output path override")
        sp.add_argument("--grid", type=int, nargs=2, metavar=("NX", "NY"),
                        default=None)
        sp.add_argument("--estimator",
                        choices=["uncorrelated", "correlated", "ustat"],
                        default=None)
        sp.add_argument("--method", choices=["backward", "offset_ball"],
                        default=None, help="normal-derivative method")
        if params:
            sp.add_argument("--params", default=None,
                            help="comma-separated parameter indices")

    common(sub.add_parser("solve", help="forward field on a grid"))
    common(sub.add_parser("grad", help="derivative fields per parameter"),
           params=True)
    sp = sub.add_parser("fdcheck", help="gradient vs finite differences")
    common(sp, params=True)
    sp.add_argument("--h", type=float, default=1e-3, help="FD step")
    sp = sub.add_parser("ablate", help="hyperparameter RMSE sweep")
    common(sp)
    sp.add_argument("--axis", default="eps",
                    choices=["eps", "offset", "nd_method", "estimator"])
    sp.add_argument("--seeds", type=int, default=16)
    sp.add_argument("--walks", type=int, default=32)
    sp.add_argument("--ref-walks", type=int, default=2000)
    common(sub.add_parser("optimize", help="run the optimization loop"))
    return p


COMMANDS = {
    "solve": cmd_solve,
    "grad": cmd_grad,
    "fdcheck": cmd_fdcheck,
    "ablate": cmd_ablate,
    "optimize": cmd_optimize,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (DiffWosError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
