"""Command-line entry point: ``bcsc {train,compare,gradcheck,selftest}``.

Exit codes: 0 success, 1 failed check, 2 configuration error, 3 divergence.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .checks import gradient_check, run_selftest
from .errors import ConfigError, DivergenceError
from .harness import CompareError, compare, emit_comparison_csv, emit_csv, load_config, run_experiment, summarize

log = logging.getLogger("bcsc")

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_DIVERGED = 3


def _overrides(pairs):
    out = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise ConfigError(f"--set expects KEY=VALUE, got {pair!r}")
        k, v = pair.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def cmd_train(args) -> int:
    overrides = _overrides(args.set)
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    cfg = load_config(args.config, overrides)

    def progress(row, _w):
        log.info("epoch %d  train %.4f±%.4f  test %.4f  acc %.4f  lr %g",
                 row.epoch, row.train_loss_mean, row.train_loss_std, row.test_loss, row.test_acc, row.lr)

    rows = run_experiment(cfg, on_epoch=progress)
    if args.out:
        emit_csv(rows, args.out)
    if rows:
        s = summarize(rows)
        print(" ".join(f"{k}={v:.4f}" for k, v in s.items()))
    return EXIT_OK


def cmd_compare(args) -> int:
    overrides = _overrides(args.set)
    configs = [load_config(path, overrides) for path in args.config]
    table = compare(configs, args.repeats, jobs=args.jobs)
    emit_comparison_csv(table, args.out)
    for row in table:
        cells = "  ".join(f"{k}={row.mean[k]:.4f}±{row.std[k]:.4f}" for k in row.mean)
        print(f"[{row.index}] {row.label:<16} {cells}")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    worst, errors = gradient_check(args.model, points=args.points, seed=args.seed)
    print(f"{args.model}: {len(errors)} points, max relative error {worst:.3e}")
    return EXIT_OK if worst <= args.tol else EXIT_CHECK_FAILED


def cmd_selftest(args) -> int:
    return EXIT_OK if run_selftest(seed=args.seed) else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bcsc", description="Block-cyclic stochastic coordinate descent experiments")
    p.add_argument("-v", "--verbose", action="store_true", help="log per-epoch progress")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train one configuration and write per-epoch metrics")
    t.add_argument("--config", required=True)
    t.add_argument("--seed", type=int)
    t.add_argument("--out", help="metrics CSV path")
    t.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config value")
    t.set_defaults(func=cmd_train)

    c = sub.add_parser("compare", help="run configurations over several seeds and tabulate accuracy")
    c.add_argument("--config", required=True, action="append", help="repeatable")
    c.add_argument("--repeats", type=int, default=1)
    c.add_argument("--out", required=True)
    c.add_argument("--jobs", type=int, default=1)
    c.add_argument("--set", action="append", metavar="KEY=VALUE", help="override applied to every config")
    c.set_defaults(func=cmd_compare)

    g = sub.add_parser("gradcheck", help="compare analytic and finite-difference gradients")
    g.add_argument("--model", choices=("logistic", "mlp"), required=True)
    g.add_argument("--points", type=int, default=20)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--tol", type=float, default=1e-5)
    g.set_defaults(func=cmd_gradcheck)

    s = sub.add_parser("selftest", help="run the invariant checks on small instances")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except CompareError as exc:
        print(f"compare failed: {exc}", file=sys.stderr)
        if isinstance(exc.__cause__, DivergenceError):
            return EXIT_DIVERGED
        if isinstance(exc.__cause__, ConfigError):
            return EXIT_CONFIG
        raise


if __name__ == "__main__":
    sys.exit(main())
