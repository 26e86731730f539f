"""Command line entry point: ``qpconv {train,compare,layers-sweep,verify}``."""
from __future__ import annotations

import argparse
import dataclasses
import contextlib
import logging
import sys

from . import config as config_mod
from .config import ConfigError
from .train import compare, layers_sweep, summary_line, train
from .verify import corrupted_rx, format_report, run_suites

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME, EXIT_VERIFY = 0, 1, 2, 3


def _overrides(cfg, args):
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.workers is not None:
        changes["workers"] = args.workers
    if args.out is not None:
        changes["out"] = args.out
    if args.epochs is not None:
        changes["schedule"] = dataclasses.replace(cfg.schedule, epochs=args.epochs)
    cfg = cfg.replace(**changes)
    config_mod.check_scalars(cfg)
    return cfg


def _load(path, args):
    return _overrides(config_mod.load(path), args)


def _out_dir(cfg, args):
    # --out is taken relative to the shell; the config's own "out" relative to its file.
    return args.out if args.out is not None else cfg.resolve(cfg.out)


def cmd_train(args):
    cfg = _load(args.config, args)
    res = train(cfg, _out_dir(cfg, args))
    print(f"wrote {res.out_dir / 'metrics.csv'} and {res.out_dir / 'checkpoint.bin'}")


def cmd_compare(args):
    cfg_q = _load(args.config, args)
    cfg_c = _load(args.classical_config, args) if args.classical_config else None
    summary = compare(cfg_q, cfg_c, _out_dir(cfg_q, args))
    print(summary_line(summary))


def cmd_layers_sweep(args):
    cfg = _load(args.config, args)
    counts = [int(v) for v in args.layer_counts.split(",") if v.strip()]
    rows = layers_sweep(cfg, counts, _out_dir(cfg, args))
    for r in rows:
        print(f"L={r['layers']} qpconv_params={r['qpconv_params']} "
              f"test_acc={r['final_test_acc']:.4f} -> {r['metrics']}")


def cmd_verify(args):
    ctx = corrupted_rx() if args.corrupt_rx else contextlib.nullcontext()
    with ctx:
        results = run_suites(args.seed or 0)
    print(format_report(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qpconv", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--out")
    common.add_argument("--epochs", type=int)
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[common], help="train one model")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("compare", parents=[common], help="train quantum and classical variants")
    p.add_argument("--config", required=True, help="quantum model config")
    p.add_argument("--classical-config",
                   help="classical model config (default: swap each qpconv for a 1x1 conv)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("layers-sweep", parents=[common], help="repeat training over circuit depths")
    p.add_argument("--config", required=True)
    p.add_argument("--layer-counts", default="1,2,3,4")
    p.set_defaults(func=cmd_layers_sweep)

    p = sub.add_parser("verify", parents=[common], help="run the oracle self-checks")
    p.add_argument("--corrupt-rx", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s")
    try:
        code = args.func(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())
