"""Command-line front end.

Numeric tables are CSV with headers and floats at 17 significant
digits; configs and manifests are JSON.  Every run writes a manifest
(command, resolved config, seed, version, wall time, outputs) next to
its outputs.  Exit codes: 0 ok, 2 usage, 3 config error, 4 numeric
precondition, 5 I/O.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .chernoff import (ArgminConfig, CalibrationTable, build_calibration,
                       recalibrate_tau)
from .errors import ConfigError, PreconditionError
from .inverse import (DEFAULT_GRID_POINTS, EvaluationGrid, default_grid, iie,
                      iip_draws, posterior_quantile_band)
from .kernels import parse_kernel_spec
from .measures import DPPrior
from .rng import StreamKey, derive_stream
from .simulate import ScenarioConfig, generate_data, run_coverage, run_figure_scenario
from .volterra import (ResolventQuery, ResolventTable, default_grid_size,
                       renewal_series_resolvent, solve_resolvent)


def _fmt(value) -> str:
    return f"{float(value):.17g}"


def _cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return _fmt(value)


def _write_csv(path, header, columns) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*columns):
            fh.write(",".join(_cell(v) for v in row) + "\n")


def _write_json(path, doc) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_data(path) -> np.ndarray:
    """Read one observation per line; a single leading header is allowed."""
    values = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                values.append(float(text))
            except ValueError:
                if not values and lineno == 1:
                    continue
                raise ConfigError(f"{path}:{lineno}: not a number: {text!r}") from None
    if not values:
        raise ConfigError(f"{path} contains no observations")
    return np.asarray(values, dtype=float)


def load_resolvent_csv(path) -> ResolventTable:
    """Re-read a table written by the resolvent subcommand."""
    try:
        raw = np.loadtxt(path, delimiter=",", skiprows=1, dtype=float, ndmin=2)
    except ValueError as exc:
        raise ConfigError(f"malformed resolvent CSV {path}: {exc}") from None
    if raw.shape[1] < 2 or raw.shape[0] < 2:
        raise ConfigError(f"resolvent CSV {path} needs columns (x, p) and >= 2 rows")
    xs = raw[:, 0]
    h = xs[1] - xs[0]
    if xs[0] != 0.0 or h <= 0.0 or np.any(np.abs(np.diff(xs) - h) > 1e-9 * max(h, 1.0)):
        raise ConfigError(f"resolvent CSV {path} must have a uniform grid starting at 0")
    return ResolventTable(step_size=float(h), horizon=float(xs[-1]), values=raw[:, 1])


def load_calibration(path) -> CalibrationTable:
    """Re-read a table written by the calibrate subcommand (CSV + meta)."""
    try:
        raw = np.loadtxt(path, delimiter=",", skiprows=1, dtype=float, ndmin=2)
    except ValueError as exc:
        raise ConfigError(f"malformed calibration CSV {path}: {exc}") from None
    if raw.shape[1] != 2:
        raise ConfigError(f"calibration CSV {path} must have columns (v, Ainv)")
    meta_path = str(path) + ".meta.json"
    if not os.path.exists(meta_path):
        raise ConfigError(f"calibration meta file {meta_path} is missing")
    with open(meta_path, "r", encoding="utf-8") as fh:
        try:
            meta = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{meta_path} is not valid JSON: {exc}") from None
    try:
        samples = int(meta["samples"])
    except (KeyError, TypeError, ValueError):
        raise ConfigError(f"{meta_path} lacks an integer 'samples' field") from None
    return CalibrationTable.from_grid(raw[:, 0], raw[:, 1], samples)


def _resolvent_for(args, data) -> ResolventQuery:
    """Build or load the resolvent table an estimation command needs."""
    if getattr(args, "resolvent", None):
        if args.kernel:
            raise ConfigError("give either --kernel or --resolvent, not both")
        return ResolventQuery(load_resolvent_csv(args.resolvent))
    if not args.kernel:
        raise ConfigError("either --kernel or --resolvent is required")
    kernel = parse_kernel_spec(args.kernel)
    T = args.T if args.T is not None else 1.1 * float(np.max(data))
    if T <= 0.0:
        raise PreconditionError(f"resolvent horizon must be positive, got {T!r}")
    N = args.N if args.N is not None else default_grid_size(T)
    return ResolventQuery(solve_resolvent(kernel, T, N))


def _prior_from(args) -> DPPrior:
    return DPPrior(precision=args.precision, base_shape=args.base_shape,
                   base_rate=args.base_rate)


def _echo(args, skip=("func", "command")) -> dict:
    return {k: v for k, v in vars(args).items() if k not in skip}


def _cmd_resolvent(args):
    kernel = parse_kernel_spec(args.kernel)
    N = args.N if args.N is not None else default_grid_size(args.T)
    table = solve_resolvent(kernel, args.T, N)
    header = ["x", "p"]
    columns = [table.grid, table.values]
    if args.oracle:
        header.append("p_oracle")
        columns.append(renewal_series_resolvent(kernel, table.grid,
                                                args.oracle_paths, args.seed))
    _write_csv(args.out, header, columns)
    return [args.out], args.out + ".manifest.json"


def _cmd_iie(args):
    data = read_data(args.data)
    query = _resolvent_for(args, data)
    grid = default_grid(data, query, args.grid)
    estimate = iie(data, query, grid)
    _write_csv(args.out, ["x", "level"], [estimate.break_xs, estimate.levels])
    return [args.out], args.out + ".manifest.json"


def _cmd_iip(args):
    data = read_data(args.data)
    query = _resolvent_for(args, data)
    grid = default_grid(data, query, args.grid)
    draws = iip_draws(data, _prior_from(args), query, grid, args.draws, args.seed)
    draws_path = args.out + "_draws.csv"
    mean_path = args.out + "_mean.csv"
    meta_path = args.out + "_meta.json"
    header = ["draw"] + [f"x={_fmt(x)}" for x in grid.points]
    columns = [np.arange(draws.n_draws)] + [draws.levels[:, j]
                                            for j in range(grid.points.size)]
    _write_csv(draws_path, header, columns)
    _write_csv(mean_path, ["x", "level"], [grid.points, draws.mean_levels()])
    _write_json(meta_path, dict(draws.meta, grid_points=grid.points.size,
                                horizon=grid.horizon))
    return [draws_path, mean_path, meta_path], args.out + ".manifest.json"


def _cmd_interval(args):
    data = read_data(args.data)
    calib = load_calibration(args.calib)
    query = _resolvent_for(args, data)
    grid = default_grid(data, query, args.grid)
    tau = recalibrate_tau(args.beta, calib)
    draws = iip_draws(data, _prior_from(args), query, grid, args.draws, args.seed)
    idx = grid.nearest_index(args.x)
    x = float(grid.points[idx])
    lower, upper = posterior_quantile_band(draws, x, tau)
    _write_json(args.out, {
        "x_requested": args.x, "x": x, "lower": lower, "upper": upper,
        "beta": args.beta, "tau": tau, "credibility": 1.0 - tau,
        "n": int(data.size), "draws": int(args.draws), "seed": int(args.seed),
    })
    return [args.out], args.out + ".manifest.json"


def _cmd_calibrate(args):
    config = ArgminConfig(t_half_width=args.half_width, t_step=args.step,
                          inner_replicates=args.inner, outer_samples=args.samples)
    table = build_calibration(config, args.seed, threads=args.threads)
    _write_csv(args.out, ["v", "Ainv"], [table.v_grid, table.q_grid])
    meta_path = args.out + ".meta.json"
    _write_json(meta_path, {
        "samples": config.outer_samples, "inner": config.inner_replicates,
        "half_width": config.t_half_width, "step": config.t_step,
        "seed": int(args.seed), "version": __version__,
    })
    return [args.out, meta_path], args.out + ".manifest.json"


def _cmd_coverage(args):
    config = ScenarioConfig.from_json(args.config)
    calib = load_calibration(args.calib)
    report = run_coverage(config, calib, threads=args.threads)
    _write_json(args.out, report.to_dict())
    return [args.out], args.out + ".manifest.json"


def _cmd_figures(args):
    config = ScenarioConfig.from_json(args.config)
    calib = load_calibration(args.calib)
    bundles = run_figure_scenario(config, calib)
    os.makedirs(args.out_dir, exist_ok=True)
    outputs = []
    for label, columns in bundles.items():
        path = os.path.join(args.out_dir, f"figure_{label}.csv")
        _write_csv(path, ["role", "draw", "x", "value"],
                   [columns["role"], columns["draw"], columns["x"], columns["value"]])
        outputs.append(path)
    return outputs, os.path.join(args.out_dir, "manifest.json")


def _cmd_simulate(args):
    config = ScenarioConfig(signal_rate=args.signal_rate, kernels=(args.kernel,),
                            n=args.n, seed=args.seed)
    data = generate_data(config, derive_stream(StreamKey(args.seed)))
    _write_csv(args.out, ["z"], [data])
    return [args.out], args.out + ".manifest.json"


def _add_estimation_flags(p, with_prior: bool) -> None:
    p.add_argument("--data", required=True, help="observations, one per line")
    p.add_argument("--kernel", default=None, help='kernel spec "name:key=value,..."')
    p.add_argument("--resolvent", default=None,
                   help="reuse a resolvent CSV instead of solving from --kernel")
    p.add_argument("--T", type=float, default=None,
                   help="resolvent horizon (default 1.1 * max observation)")
    p.add_argument("--N", type=int, default=None, help="resolvent grid size")
    p.add_argument("--grid", type=int, default=DEFAULT_GRID_POINTS,
                   help="evaluation grid points")
    if with_prior:
        p.add_argument("--draws", type=int, default=1000, help="posterior draws")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--precision", type=float, default=10.0,
                       help="prior precision M")
        p.add_argument("--base-shape", type=float, default=2.0)
        p.add_argument("--base-rate", type=float, default=2.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="isodeconv",
        description="one-sided deconvolution with isotonized Bayesian inversion")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("resolvent", help="tabulate the kernel's resolvent")
    p.add_argument("--kernel", required=True)
    p.add_argument("--T", type=float, required=True, help="table horizon")
    p.add_argument("--N", type=int, default=None, help="grid size (default h <= 1e-3)")
    p.add_argument("--out", required=True)
    p.add_argument("--oracle", action="store_true",
                   help="append a renewal-series Monte Carlo column")
    p.add_argument("--oracle-paths", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_resolvent)

    p = sub.add_parser("iie", help="isotonized inverse point estimate")
    _add_estimation_flags(p, with_prior=False)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_iie)

    p = sub.add_parser("iip", help="isotonized posterior draw matrix")
    _add_estimation_flags(p, with_prior=True)
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=_cmd_iip)

    p = sub.add_parser("interval", help="recalibrated credible interval at a point")
    _add_estimation_flags(p, with_prior=True)
    p.add_argument("--x", type=float, required=True, help="evaluation point")
    p.add_argument("--beta", type=float, default=0.05, help="target miscoverage")
    p.add_argument("--calib", required=True, help="calibration CSV from 'calibrate'")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_interval)

    p = sub.add_parser("calibrate", help="Monte Carlo quantile table for recalibration")
    p.add_argument("--samples", type=int, default=20000, help="outer samples")
    p.add_argument("--inner", type=int, default=1000, help="inner replicates")
    p.add_argument("--half-width", type=float, default=4.0, help="grid half-width")
    p.add_argument("--step", type=float, default=0.01, help="grid step")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=0, help="worker count (0 = auto)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("coverage", help="coverage study of recalibrated bands")
    p.add_argument("--config", required=True, help="scenario config JSON")
    p.add_argument("--calib", required=True)
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--threads", type=int, default=0, help="worker count (0 = auto)")
    p.set_defaults(func=_cmd_coverage)

    p = sub.add_parser("figures", help="deconvolution figure data, one CSV per kernel")
    p.add_argument("--config", required=True, help="scenario config JSON")
    p.add_argument("--calib", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_figures)

    p = sub.add_parser("simulate", help="draw a synthetic dataset Z = X + Y")
    p.add_argument("--kernel", required=True)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--signal-rate", type=float, default=1.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    return parser


def dispatch(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    start = time.perf_counter()
    try:
        outputs, manifest_path = args.func(args)
        _write_json(manifest_path, {
            "command": args.command,
            "config": _echo(args),
            "seed": getattr(args, "seed", None),
            "version": __version__,
            "wall_time_s": time.perf_counter() - start,
            "outputs": [str(p) for p in outputs],
        })
    except ConfigError as exc:
        print(f"isodeconv: config error: {exc}", file=sys.stderr)
        return 3
    except PreconditionError as exc:
        print(f"isodeconv: precondition failed: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"isodeconv: I/O error: {exc}", file=sys.stderr)
        return 5
    return 0


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
