"""Command line: ``train``, ``eval``, ``compare`` and ``traj``."""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from hybridwalk.harness.config import ConfigError, ExperimentConfig, load_config

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors (exit code 1)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _add_common(p):
    p.add_argument("--config", help="YAML experiment file")
    p.add_argument("--seed", type=int)
    p.add_argument("--sym-loss", choices=("none", "msl", "psl"))
    p.add_argument("--sym-weight", type=float)
    p.add_argument("--batch", help="steps per worker per update (comma list for compare)")
    p.add_argument("--workers", type=int)
    p.add_argument("--steps", type=int, help="total environment steps")
    p.add_argument("--scenario")
    p.add_argument("--out")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hybridwalk", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a policy")
    _add_common(p)
    p.add_argument("--resume", help="checkpoint to continue from")
    p.add_argument("--verbose", action="store_true")

    p = sub.add_parser("eval", help="evaluate a checkpoint with the deterministic policy")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--episodes", type=int, default=10)

    p = sub.add_parser("compare", help="PPO vs PPO+MSL vs PPO+PSL over seeds and batch sizes")
    _add_common(p)
    p.add_argument("--seeds", help="comma-separated seed list")

    p = sub.add_parser("traj", help="export walk-engine reference trajectories")
    p.add_argument("--out", required=True)
    p.add_argument("--wx", type=float, default=0.2)
    p.add_argument("--wy", type=float, default=0.05)
    p.add_argument("--wz", type=float, default=0.04)
    p.add_argument("--wtheta", type=float, default=0.0)
    p.add_argument("--wt", type=float, default=1.0)
    p.add_argument("--strides", type=int, default=4)
    p.add_argument("--rate", type=float, default=100.0)
    return parser


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    batch = args.batch
    over = {
        "sym_kind": args.sym_loss,
        "sym_weight": args.sym_weight,
        "workers": args.workers,
        "total_steps": args.steps,
        "scenario": args.scenario,
        "out": args.out,
    }
    if batch is not None and "," not in batch:
        over["batch"] = int(batch)
    if args.seed is not None:
        over["seeds"] = (args.seed,)
    if getattr(args, "seeds", None):
        over["seeds"] = tuple(int(s) for s in args.seeds.split(","))
    return cfg.with_overrides(**over)


def _run(args) -> int:
    if args.command == "traj":
        from hybridwalk.engine import StrideLimits, WalkCommand, export_trajectory_csv

        try:
            cmd = WalkCommand(args.wx, args.wy, args.wz, args.wtheta, args.wt)
            StrideLimits(max_t=max(2.0, args.wt)).check(cmd)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        n = export_trajectory_csv(args.out, cmd, args.strides, args.rate)
        print(f"wrote {n} rows to {args.out}")
        return EXIT_OK

    cfg = _config(args)
    if args.command == "train":
        from hybridwalk.harness.train import train

        rec = train(cfg, resume=args.resume, quiet=not args.verbose)
        last = rec.rows[-1] if rec.rows else {}
        print(f"{len(rec.rows)} updates; metrics {rec.metrics_path}; checkpoint {rec.checkpoint}; "
              f"final avg_ep_reward {last.get('avg_ep_reward', float('nan')):.4f}")
    elif args.command == "eval":
        from hybridwalk.harness.train import evaluate

        s = evaluate(args.checkpoint, cfg.scenario_config(), args.episodes, seed=cfg.seed)
        print("episodes,avg_duration_s,avg_reward,reward_per_s,falls")
        print(f"{s.episodes},{s.avg_duration:.4f},{s.avg_reward:.4f},{s.reward_per_second:.4f},{s.falls}")
    elif args.command == "compare":
        from hybridwalk.harness.compare import compare

        batches = [int(b) for b in args.batch.split(",")] if args.batch else None
        out = cfg.out
        os.makedirs(out, exist_ok=True)
        tables = compare(cfg, out, batches)
        for batch, table in tables.items():
            for name, (_, _, mean) in table.items():
                print(f"batch {batch} {name}: final mean reward {mean[-1]:.4f}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - surface any runtime failure as exit code 2
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
