"""Command-line entry point wiring training, evaluation, baselines, the stress
grid, the awareness ablation, and trajectory export."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .config import ConfigError, default_config, format_config, parse_config
from .evalkit import (ABLATION_CONDITIONS, SCENARIO_NAMES, NetworkPolicy,
                      ablation_suite, export_ablation_csv, export_episodes_csv,
                      export_stress_csv, export_trajectory_svg, run_episode,
                      run_episodes, scenario_config, stress_grid, summarize)
from .learner import CheckpointError, load_checkpoint, train
from .schedulers import BASELINE_POLICIES, make_baseline

log = logging.getLogger("ceda")

_LOG_LEVELS = {"quiet": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


def _setup_logging() -> None:
    level_name = os.environ.get("CEDA_LOG", "info").lower()
    level = _LOG_LEVELS.get(level_name, logging.INFO)
    logging.basicConfig(level=level, format="%(message)s", stream=sys.stderr, force=True)


def _load_config(path: str | None):
    return parse_config(path) if path else default_config()


def _echo_config(cfg, out_file: Path | None = None) -> None:
    text = format_config(cfg)
    if out_file is not None:
        out_file.write_text(text, encoding="utf-8")
        log.info("effective config written to %s", out_file)
    if log.isEnabledFor(logging.INFO):
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ceda",
                                     description="Cooperative medical drone delivery: "
                                                 "train, evaluate, and stress the policy.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run the training loop and write checkpoints")
    p.add_argument("--config", help="run-configuration file (defaults when omitted)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("eval", help="evaluate a checkpoint on a scenario")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--scenario", default="baseline", choices=SCENARIO_NAMES)
    p.add_argument("--episodes", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", required=True)
    p.add_argument("--mask", default="full", choices=sorted(ABLATION_CONDITIONS))
    p.add_argument("--config", help="base run-configuration file")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("baseline", help="evaluate a heuristic scheduling baseline")
    p.add_argument("--policy", required=True, choices=sorted(BASELINE_POLICIES))
    p.add_argument("--scenario", default="baseline", choices=SCENARIO_NAMES)
    p.add_argument("--episodes", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", required=True)
    p.add_argument("--config", help="base run-configuration file")

    p = sub.add_parser("stress", help="run the 3x3 cross-layer stress grid")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--episodes", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", required=True)
    p.add_argument("--config", help="base run-configuration file")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("ablate", help="run the awareness ablation sweep")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--episodes", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", required=True)
    p.add_argument("--config", help="base run-configuration file")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("trace", help="render one traced episode to SVG")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--svg", required=True)
    p.add_argument("--scenario", default="baseline", choices=SCENARIO_NAMES)
    p.add_argument("--config", help="base run-configuration file")
    return parser


def _cmd_train(args) -> int:
    cfg = _load_config(args.config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _echo_config(cfg, out_dir / "config.echo")

    def report(row) -> None:
        if row.episode % 100 == 0 or row.episode == cfg.learner.episodes - 1:
            log.info("episode %d: steps=%d reward=%.1f delivered=%d eps=%.3f",
                     row.episode, row.steps, row.reward_total, row.delivered, row.epsilon)

    train(cfg, args.seed, out_dir=out_dir, progress=report)
    log.info("training finished: %s", out_dir / "checkpoint.ckpt")
    return 0


def _load_policy_inputs(args):
    cfg = scenario_config(args.scenario, _load_config(args.config)) \
        if hasattr(args, "scenario") else _load_config(args.config)
    net = load_checkpoint(args.checkpoint)
    return cfg, net


def _cmd_eval(args) -> int:
    cfg, net = _load_policy_inputs(args)
    _echo_config(cfg)
    episodes = args.episodes if args.episodes is not None else cfg.eval.episodes
    policy = NetworkPolicy(net, mask=ABLATION_CONDITIONS[args.mask],
                           epsilon=cfg.eval.epsilon)
    records = run_episodes(policy, cfg, range(args.seed, args.seed + episodes),
                           workers=args.workers)
    export_episodes_csv(records, args.csv)
    cell = summarize(records)
    log.info("eval %s over %d episodes: eta=%.3f both_landed=%.3f w3_expiries=%.2f -> %s",
             args.scenario, episodes, cell.eta, cell.both_landed_rate,
             cell.w3_expiries, args.csv)
    return 0


def _cmd_baseline(args) -> int:
    cfg = scenario_config(args.scenario, _load_config(args.config))
    _echo_config(cfg)
    episodes = args.episodes if args.episodes is not None else cfg.eval.episodes
    policy = make_baseline(args.policy)
    records = run_episodes(policy, cfg, range(args.seed, args.seed + episodes))
    export_episodes_csv(records, args.csv)
    cell = summarize(records)
    log.info("baseline %s on %s over %d episodes: eta=%.3f both_landed=%.3f -> %s",
             args.policy, args.scenario, episodes, cell.eta, cell.both_landed_rate,
             args.csv)
    return 0


def _cmd_stress(args) -> int:
    cfg = _load_config(args.config)
    _echo_config(cfg)
    net = load_checkpoint(args.checkpoint)
    episodes = args.episodes if args.episodes is not None else cfg.eval.episodes
    policy = NetworkPolicy(net, epsilon=cfg.eval.epsilon)
    grid = stress_grid(policy, cfg, episodes, base_seed=args.seed, workers=args.workers)
    export_stress_csv(grid, args.csv)
    log.info("stress grid (%d episodes per cell) -> %s", episodes, args.csv)
    return 0


def _cmd_ablate(args) -> int:
    cfg = _load_config(args.config)
    _echo_config(cfg)
    net = load_checkpoint(args.checkpoint)
    episodes = args.episodes if args.episodes is not None else cfg.eval.episodes
    table = ablation_suite(net, cfg, episodes, base_seed=args.seed, workers=args.workers)
    export_ablation_csv(table, args.csv)
    log.info("ablation sweep (%d episodes per condition) -> %s", episodes, args.csv)
    return 0


def _cmd_trace(args) -> int:
    cfg, net = _load_policy_inputs(args)
    _echo_config(cfg)
    policy = NetworkPolicy(net, epsilon=cfg.eval.epsilon)
    record = run_episode(policy, cfg, args.seed, record_trace=True)
    export_trajectory_svg(record, args.svg)
    log.info("trace seed=%d steps=%d delivered=%d -> %s",
             args.seed, record.steps, record.delivered_count(), args.svg)
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "eval": _cmd_eval,
    "baseline": _cmd_baseline,
    "stress": _cmd_stress,
    "ablate": _cmd_ablate,
    "trace": _cmd_trace,
}


def main(argv=None) -> int:
    """Dispatch a subcommand; returns 0 on success, 2 on usage errors, and 1
    with a one-line diagnostic otherwise."""
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, CheckpointError, ValueError, OSError) as exc:
        log.error("error: %s", exc)
        return 1


def console_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_entry()
