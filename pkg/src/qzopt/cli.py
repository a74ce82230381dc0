"""Command-line front end: run / sweep / circuit-demo / verify.

Exit codes: 0 success, 2 configuration or argument error, 3 budget-cap
abort (a run hit the query budget; rows are still written, flagged).
"""
from __future__ import annotations

import argparse
import sys

import numpy as np
from scipy import stats

from .circuit import RegisterLayout, invalid_probability, pipeline_sample_batch
from .harness import (
    ConfigError,
    apply_overrides,
    config_from_mapping,
    parse_config,
    rows_to_csv,
    run_experiment,
    scaling_sweep,
    write_csv,
)
from .objectives import CATALOG_NAMES, catalog_make
from .rng import substream
from .smoothing import SmoothingParams
from .stationarity import exact_goldstein_distance, goldstein_residual, verify_stationary

__all__ = ["build_parser", "main"]


def _add_shared(p: argparse.ArgumentParser) -> None:
    # Also accepted after the subcommand; SUPPRESS keeps the subparser from
    # overwriting a value given before it.
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                   help="override the seed list / seed the demo")
    p.add_argument("--out", type=str, default=argparse.SUPPRESS, help="output CSV path")
    p.add_argument("--cost-mode", choices=("quantum", "classical"), default=argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qzopt", description=__doc__)
    parser.add_argument("--seed", type=int, default=None, help="override the seed list / seed the demo")
    parser.add_argument("--out", type=str, default=None, help="output CSV path")
    parser.add_argument("--cost-mode", choices=("quantum", "classical"), default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment config, emit CSV rows")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--timings", action="store_true", help="record wall_ms (breaks byte-determinism)")
    _add_shared(p_run)

    p_sweep = sub.add_parser("sweep", help="run an eps grid and fit the query-scaling exponent")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--timings", action="store_true")
    _add_shared(p_sweep)

    p_circ = sub.add_parser("circuit-demo", help="sample the (xi, w) circuit and print diagnostics")
    p_circ.add_argument("--m1", type=int, required=True)
    p_circ.add_argument("--m2", type=int, required=True)
    p_circ.add_argument("--d", type=int, required=True)
    p_circ.add_argument("--n", type=int, required=True)
    _add_shared(p_circ)

    p_ver = sub.add_parser("verify", help="check a point for (delta, eps) stationarity")
    p_ver.add_argument("--problem", required=True, choices=CATALOG_NAMES)
    p_ver.add_argument("--d", type=int, required=True)
    p_ver.add_argument("--point", required=True, help="comma-separated coordinates")
    p_ver.add_argument("--delta", type=float, required=True)
    p_ver.add_argument("--eps", type=float, required=True)
    _add_shared(p_ver)
    return parser


def _load_config(args: argparse.Namespace):
    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    config = config_from_mapping(parse_config(text))
    return apply_overrides(config, seed=args.seed, out=args.out,
                           cost_mode=args.cost_mode, timings=args.timings or None)


def _emit_rows(rows, config) -> int:
    if config.out_path:
        write_csv(rows, config.out_path)
        print(f"wrote {len(rows)} rows to {config.out_path}")
    else:
        sys.stdout.write(rows_to_csv(rows))
    if any(r.verdict == "budget_exceeded" for r in rows):
        print("budget cap hit; flagged rows present", file=sys.stderr)
        return 3
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    config = _load_config(args)
    return _emit_rows(run_experiment(config), config)


def _cmd_sweep(args: argparse.Namespace) -> int:
    config = _load_config(args)
    rows = run_experiment(config)
    fit = scaling_sweep(config, rows=rows)
    code = _emit_rows(rows, config)
    print(f"slope {fit.slope:.4f}  intercept {fit.intercept:.4f}  r2 {fit.r_squared:.6f}")
    for x, y in fit.points:
        print(f"  log(1/eps) {x:.4f} -> log(queries) {y:.4f}")
    return code


def _cmd_circuit_demo(args: argparse.Namespace) -> int:
    layout = RegisterLayout(m1=args.m1, m2=args.m2, d=args.d)
    if args.n < 1:
        raise ConfigError("n must be positive")
    seed = args.seed if args.seed is not None else 0
    rng = substream(seed, "circuit-demo")
    xi, W, valid = pipeline_sample_batch(layout, args.n, rng)
    n_valid = int(valid.sum())
    print(f"layout: m1={layout.m1} m2={layout.m2} d={layout.d} "
          f"({layout.total_qubits} qubits total)")
    print(f"invalid outcome probability: exact {invalid_probability(layout):.6g}, "
          f"empirical {1.0 - n_valid / args.n:.6g} over {args.n} draws")
    if n_valid == 0:
        print("no valid samples drawn")
        return 0
    Wv = W[valid]
    norms = np.linalg.norm(Wv, axis=1)
    print(f"||w|| on valid samples: min {norms.min():.12f} max {norms.max():.12f}")
    last = Wv[:, -1]
    print(f"w_last moments: mean {last.mean():+.4f} var {last.var():.4f}")
    if layout.d == 3:
        ks = stats.kstest(last, stats.uniform(loc=-1.0, scale=2.0).cdf)
        print(f"KS w_3 vs uniform[-1,1]: D {ks.statistic:.4f} p {ks.pvalue:.4f}")
    cells = 1 << layout.m1
    if cells <= 1024:
        counts = np.bincount(np.asarray(xi, dtype=np.int64), minlength=cells)
        chi = stats.chisquare(counts)
        print(f"xi uniformity chi2 over {cells} cells: stat {chi.statistic:.4f} p {chi.pvalue:.4f}")
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    try:
        point = np.array([float(tok) for tok in args.point.split(",")], dtype=float)
    except ValueError:
        raise ConfigError(f"cannot parse point {args.point!r}") from None
    if point.shape != (args.d,):
        raise ConfigError(f"point has {point.size} coordinates, expected d={args.d}")
    spec = catalog_make(args.problem, args.d)
    params = SmoothingParams(args.delta)
    seed = args.seed if args.seed is not None else 0
    report = goldstein_residual(spec, point, params, 20000, 0.95, substream(seed, "residual"))
    verdict = verify_stationary(spec, point, params, args.eps, 0.95, substream(seed, "verify"))
    print(f"residual estimate {report.estimate:.6g} +- {report.half_width:.6g} "
          f"(n={report.n}, confidence {report.confidence})")
    exact = exact_goldstein_distance(spec, point, args.delta)
    if exact is not None:
        print(f"exact Goldstein distance: {exact:.6g}")
    print(f"verdict at eps={args.eps}: {verdict}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "sweep": _cmd_sweep,
        "circuit-demo": _cmd_circuit_demo,
        "verify": _cmd_verify,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
