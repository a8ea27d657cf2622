"""Command-line entry point: train, eval, selftest.

    adaptsched train   [--config FILE] [--seed N] [--episodes N] [--out-dir D]
    adaptsched eval    [--config FILE] [--seed N] [--episodes N] [--out-dir D]
                       [--checkpoint F] [--policy NAME ...]
    adaptsched selftest

Set ADAPTSCHED_LOG=debug|info|warning to control verbosity.  Exit codes:
0 success, 1 selftest failure, 2 configuration or I/O error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from . import qnet
from .config import POLICY_NAMES, ConfigError, load_config
from .experiment import eval_campaign, train_campaign
from .selftest import run_selftest

log = logging.getLogger("adaptsched")


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", metavar="PATH", help="INI config file (defaults reproduce the reference setup)")
    sub.add_argument("--seed", type=int, metavar="INT", help="override the base RNG seed")
    sub.add_argument("--episodes", type=int, metavar="INT", help="override the episode count")
    sub.add_argument("--out-dir", metavar="PATH", help="directory for CSVs and checkpoints")
    sub.add_argument("--checkpoint", metavar="PATH", help="checkpoint file to write (train) or read (eval)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adaptsched", description=__doc__.split("\n")[0])
    subs = parser.add_subparsers(dest="command", required=True)

    train = subs.add_parser("train", help="train the selection network")
    _add_common(train)

    ev = subs.add_parser("eval", help="evaluate policies and write the results CSV")
    _add_common(ev)
    ev.add_argument(
        "--policy", action="append", choices=POLICY_NAMES, metavar="NAME",
        help="policy to evaluate (repeatable); default: config's policy list",
    )

    selftest = subs.add_parser("selftest", help="run the fast invariant checks")
    selftest.add_argument("--inject-gradient-bug", action="store_true", help=argparse.SUPPRESS)
    return parser


def _configure(args) -> "ExperimentConfig":
    config = load_config(args.config)
    if args.seed is not None:
        config.sim.seed = args.seed
    if args.out_dir is not None:
        config.out_dir = args.out_dir
    if args.checkpoint is not None:
        config.checkpoint = args.checkpoint
    return config


def cmd_train(args) -> int:
    config = _configure(args)
    if args.episodes is not None:
        config.agent.episodes = args.episodes
    result = train_campaign(config, progress=lambda line: print(line, flush=True))
    print(f"checkpoint: {result.checkpoint_path}")
    print(f"training csv: {result.csv_path}")
    return 0


def cmd_eval(args) -> int:
    config = _configure(args)
    if args.episodes is not None:
        config.eval_episodes = args.episodes
    policies = tuple(dict.fromkeys(args.policy)) if args.policy else config.eval_policies
    params = None
    if "dqn" in policies:
        params = qnet.load_checkpoint(config.checkpoint_path())
    result = eval_campaign(config, params=params, policies=policies)
    summary = result["summary"]
    print(f"eval csv: {result['csv_path']}")
    print(f"summary: {result['summary_path']}")
    print(f"max reward sum (plot normalization): {summary['max_reward_sum']!r}")
    for name, stats in summary["policies"].items():
        print(f"  {name:>4}: mean sum_r = {stats['mean_sum_r']:.3f}")
    return 0


def cmd_selftest(args) -> int:
    results = run_selftest(inject_gradient_bug=args.inject_gradient_bug)
    failed = 0
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        failed += 0 if ok else 1
    return 0 if failed == 0 else 1


def main(argv=None) -> int:
    logging.basicConfig(
        level=getattr(logging, os.environ.get("ADAPTSCHED_LOG", "warning").upper(), logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        if args.command == "train":
            return cmd_train(args)
        if args.command == "eval":
            return cmd_eval(args)
        return cmd_selftest(args)
    except (ConfigError, qnet.CheckpointError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
