"""Command-line entry point.

    evdqn train     --config run.ini --out runs/a [--seed N]
    evdqn evaluate  --config run.ini --checkpoint runs/a/checkpoint.drqn --out runs/a
    evdqn schedule  --config run.ini --checkpoint runs/a/checkpoint.drqn --out runs/a
    evdqn baseline  --config run.ini --out runs/a
    evdqn gen-fleet --count 30 --mix 0.34,0.33,0.33 --out fleet.csv [--seed N]

Failures print one line ``evdqn: error[<class>]: <message>`` to stderr and
exit non-zero.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import io as fio
from .agent import TrainingHistory, greedy_rollout, train
from .config import RunConfig, load_config
from .errors import ConfigError, EVDQNError
from .evaluation import evaluate
from .scenarios import gen_fleet

log = logging.getLogger("evdqn")

CHECKPOINT = "checkpoint.drqn"
HISTORY = "history.csv"
MANIFEST = "manifest.ini"
REPORT = "report.txt"
CURVES = "curves.csv"
SCHEDULE = "schedule.csv"
BASELINE_SCHEDULE = "baseline_schedule.csv"
BASELINE_CURVES = "baseline_curves.csv"


def write_history(path, history: TrainingHistory) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["episode", "reward", "loss", "epsilon"])
        for i, (r, l, e) in enumerate(
            zip(history.episode_rewards, history.episode_losses, history.epsilons), start=1
        ):
            w.writerow([i, repr(float(r)), "" if math.isnan(l) else repr(float(l)), repr(float(e))])


def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(config_path, seed: Optional[int]) -> RunConfig:
    cfg = load_config(config_path)
    return cfg.with_seed(seed) if seed is not None else cfg


def cmd_train(cfg: RunConfig, out) -> int:
    env, netcfg = cfg.resolve()
    if netcfg is None:
        raise ConfigError("cannot train: fleet is empty")
    out = _out_dir(out)
    qnet, history = train(env, cfg.hyperparams, netcfg)
    fio.save_checkpoint(out / CHECKPOINT, qnet)
    write_history(out / HISTORY, history)
    (out / MANIFEST).write_text(cfg.resolved(env).to_ini())
    log.info("trained %d episodes -> %s", len(history), out)
    return 0


def _policy(cfg: RunConfig, checkpoint):
    env, netcfg = cfg.resolve()
    if netcfg is None:
        return env, None
    if checkpoint is None:
        raise ConfigError("--checkpoint is required")
    qnet = fio.load_checkpoint(checkpoint)
    fio.check_shape(qnet, netcfg)
    return env, qnet


def cmd_evaluate(cfg: RunConfig, checkpoint, out) -> int:
    env, qnet = _policy(cfg, checkpoint)
    if qnet is None:
        raise ConfigError("cannot evaluate: fleet is empty")
    out = _out_dir(out)
    report = evaluate(qnet, env, cfg.eval_episodes, np.random.default_rng(cfg.seed))
    fio.write_records(out / REPORT, report.records())
    fio.write_curves(out / CURVES, report.target, report.achieved, report.baseline)
    return 0


def cmd_schedule(cfg: RunConfig, checkpoint, out) -> int:
    env, qnet = _policy(cfg, checkpoint)
    out = _out_dir(out)
    state = greedy_rollout(qnet, env).state if qnet is not None else env.empty_state()
    fio.write_schedule(out / SCHEDULE, state, env)
    return 0


def cmd_baseline(cfg: RunConfig, out) -> int:
    env = cfg.environment()
    out = _out_dir(out)
    state = env.baseline_schedule()
    fio.write_schedule(out / BASELINE_SCHEDULE, state, env)
    fio.write_curves(out / BASELINE_CURVES, env.program.target, state.per_slot, state.per_slot)
    return 0


def cmd_gen_fleet(count: int, mix: Sequence[float], seed: int, out) -> int:
    out = Path(out)
    if out.is_dir() or out.suffix == "":
        out = _out_dir(out) / "fleet.csv"
    fleet = gen_fleet(count, mix, np.random.default_rng(seed))
    fio.save_fleet(out, fleet)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="evdqn", description="Deep Q-learning EV demand-response scheduler")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, checkpoint=False):
        p.add_argument("--config", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--seed", type=int, default=None, help="overrides [run] seed")
        if checkpoint:
            p.add_argument("--checkpoint", default=None)

    common(sub.add_parser("train", help="train a Q-network and write checkpoint + history"))
    common(sub.add_parser("evaluate", help="report Pearson, deviations and baseline"), checkpoint=True)
    common(sub.add_parser("schedule", help="emit the greedy schedule as CSV"), checkpoint=True)
    common(sub.add_parser("baseline", help="emit the first-come-first-served schedule"))

    g = sub.add_parser("gen-fleet", help="write a synthetic fleet CSV")
    g.add_argument("--config", default=None, help="take count and mix from [fleet]")
    g.add_argument("--count", type=int, default=None)
    g.add_argument("--mix", default=None, help="three fractions: ZOE 22, ZOE 41, LEAF 24")
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int, default=None)
    return parser


def _run(args) -> int:
    if args.command == "gen-fleet":
        count, mix, seed = 30, (1 / 3, 1 / 3, 1 / 3), 0
        if args.config:
            cfg = load_config(args.config)
            count, mix, seed = cfg.fleet_count, cfg.fleet_mix, cfg.seed
        if args.count is not None:
            count = args.count
        if args.mix is not None:
            try:
                mix = tuple(float(v) for v in args.mix.split(","))
            except ValueError:
                raise ConfigError(f"bad --mix {args.mix!r}") from None
        if args.seed is not None:
            seed = args.seed
        return cmd_gen_fleet(count, mix, seed, args.out)

    cfg = _load(args.config, args.seed)
    if args.command == "train":
        return cmd_train(cfg, args.out)
    if args.command == "evaluate":
        return cmd_evaluate(cfg, args.checkpoint, args.out)
    if args.command == "schedule":
        return cmd_schedule(cfg, args.checkpoint, args.out)
    if args.command == "baseline":
        return cmd_baseline(cfg, args.out)
    raise AssertionError(args.command)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return _run(args)
    except EVDQNError as exc:
        print(f"evdqn: error[{exc.kind}]: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"evdqn: error[io]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
