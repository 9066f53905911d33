"""Cooperative two-drone medical supply delivery under triage deadlines:
a deterministic gridworld simulator, a centralized-training /
decentralized-execution deep Q-learner built on numpy, heuristic scheduling
baselines, and an evaluation suite (metrics, stress grid, awareness ablation,
CSV and trajectory-SVG export)."""

from .config import (ConfigError, RunConfig, apply_overrides, default_config,
                     format_config, parse_config)
from .evalkit import (ABLATION_CONDITIONS, SCENARIO_NAMES, EpisodeRecord,
                      NetworkPolicy, ablation_suite, jain_index, per_class_stats,
                      run_episode, run_episodes, scenario_config, stress_grid,
                      triage_efficiency, utilization)
from .learner import (CheckpointError, QNetwork, ReplayBuffer, TrainingLog,
                      load_checkpoint, save_checkpoint, train)
from .schedulers import make_baseline
from .sensing import AblationMask, apply_mask, joint_state, observe
from .triage import Patient, current_weight, survival
from .world import World, astar_path, new_world

__version__ = "0.1.0"

__all__ = [
    "ABLATION_CONDITIONS", "AblationMask", "CheckpointError", "ConfigError",
    "EpisodeRecord", "NetworkPolicy", "Patient", "QNetwork", "ReplayBuffer",
    "RunConfig", "SCENARIO_NAMES", "TrainingLog", "World", "ablation_suite",
    "apply_mask", "apply_overrides", "astar_path", "current_weight",
    "default_config", "format_config", "jain_index", "joint_state",
    "load_checkpoint", "make_baseline", "new_world", "observe", "parse_config",
    "per_class_stats", "run_episode", "run_episodes", "save_checkpoint",
    "scenario_config", "stress_grid", "survival", "train", "triage_efficiency",
    "utilization",
]
