"""Command line entry point.

    hybridcran run --config sweep.json --out results/snr [--threads K] [--seed S]
    hybridcran validate --config sweep.json
    hybridcran oracle --instance scalar [--seeds N]

Exit status is 0 on success, 1 for an invalid configuration and 2 for a
failure while running.
"""

import argparse
import json
import logging
import sys

import jsonschema

from . import channel, harness, oracle
from .exceptions import InvalidParameterError
from .model import SystemConfig
from .optimizer import joint_optimize

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2
ORACLE_TOL = 1e-2

log = logging.getLogger("hybridcran")


def _load(path, seed=None):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        if seed is not None:
            data = dict(data, seed=seed)
        return harness.ExperimentConfig.from_dict(data)
    except (OSError, json.JSONDecodeError, jsonschema.ValidationError, InvalidParameterError, TypeError) as exc:
        msg = exc.message if isinstance(exc, jsonschema.ValidationError) else str(exc)
        raise _ConfigError(f"{path}: {msg}") from exc


class _ConfigError(Exception):
    pass


def _cmd_run(args):
    cfg = _load(args.config, args.seed)
    try:
        threads = harness.resolve_threads(args.threads)
    except InvalidParameterError as exc:
        raise _ConfigError(str(exc)) from exc
    log.info("running %d trials x %d values x %d schemes on %d worker(s)",
             cfg.trials, len(cfg.values), len(cfg.schemes), threads)
    table = harness.run_experiment(cfg, threads)
    aggs = harness.aggregate(table)
    for path in harness.emit(table, aggs, args.out, cfg):
        print(path)
    for a in aggs:
        print(f"{a.scheme:>14s} {cfg.sweep}={a.sweep_value:g}: {a.mean:.4f} +/- {a.se:.4f} (n={a.n})")
    if table.errors:
        log.warning("%d scheme runs failed; see the meta file", len(table.errors))
    return EXIT_OK


def _cmd_validate(args):
    cfg = _load(args.config)
    print(f"{args.config}: ok ({cfg.trials} trials, {cfg.sweep} in {cfg.values}, schemes {cfg.schemes})")
    return EXIT_OK


def run_scalar_oracle(seeds=20, power=7.3, capacity=1.7):
    """Compare joint_optimize with the grid search on 1x1x1x1 instances.

    Returns a list of (seed, optimized rate, grid rate).
    """
    cfg = SystemConfig(n_rrh=1, n_ue=1, n_ant=1, n_rf=1, power=power, capacity=capacity)
    out = []
    for seed in range(seeds):
        h = channel.draw_channel(1, 1, 1, seed)
        _, _, report = joint_optimize(h, cfg, rng=channel.rf_stream(seed, 0))
        out.append((seed, report.sum_rate, oracle.grid_search_scalar(h, power, capacity).rate))
    return out


def _cmd_oracle(args):
    worst = 0.0
    for seed, rate, grid in run_scalar_oracle(args.seeds):
        worst = max(worst, abs(rate - grid))
        print(f"seed {seed:3d}: optimized {rate:.6f}  grid {grid:.6f}  diff {rate - grid:+.2e}")
    ok = worst < ORACLE_TOL
    print(f"max |diff| = {worst:.2e} ({'pass' if ok else 'FAIL'} at {ORACLE_TOL:g})")
    return EXIT_OK if ok else EXIT_RUNTIME


def build_parser():
    parser = argparse.ArgumentParser(prog="hybridcran", description=__doc__.splitlines()[0] if __doc__ else None)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run a sweep and write CSV/JSON results")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output path prefix")
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker processes (default: ${harness.THREADS_ENV} or 1)")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.set_defaults(func=_cmd_run)
    p = sub.add_parser("validate", help="check a config file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_validate)
    p = sub.add_parser("oracle", help="compare against brute-force grid search")
    p.add_argument("--instance", choices=["scalar"], required=True)
    p.add_argument("--seeds", type=int, default=20)
    p.set_defaults(func=_cmd_oracle)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except _ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # any failure past config validation is a runtime failure
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
