"""Run configuration: typed parameter sections, a strict line-oriented text
format (``section.key = value``), and a canonical echo that re-parses to an
identical config."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

Cell = tuple[int, int]


class ConfigError(Exception):
    """Raised for malformed config files or invalid parameter values."""


@dataclass
class WorldParams:
    width: int = 50
    height: int = 50
    obstacle_count: int = 200
    # None means "use the grid corners": drones start at the top-left and
    # bottom-right, and their landing zones sit at the two opposite corners so
    # a drone cannot end the mission without crossing the map.
    start0: Cell | None = None
    start1: Cell | None = None
    landing_zone0: Cell | None = None
    landing_zone1: Cell | None = None
    battery_capacity: float = 100.0
    drain_base: float = 0.1
    drain_wind: float = 0.3
    battery_low: float = 20.0
    max_steps: int = 800

    def start_cell(self, agent_id: int) -> Cell:
        cell = (self.start0, self.start1)[agent_id]
        if cell is not None:
            return cell
        return (0, 0) if agent_id == 0 else (self.width - 1, self.height - 1)

    def landing_cell(self, agent_id: int) -> Cell:
        cell = (self.landing_zone0, self.landing_zone1)[agent_id]
        if cell is not None:
            return cell
        return (self.width - 1, 0) if agent_id == 0 else (0, self.height - 1)


@dataclass
class TriageParams:
    max_patients: int = 8
    n_init: int = 4
    spawn_interval: int = 75
    t_max: int = 250
    a_stable: tuple[float, float] = (0.02, 0.05)
    b_stable: tuple[float, float] = (3.0, 5.0)
    a_urgent: tuple[float, float] = (0.05, 0.10)
    b_urgent: tuple[float, float] = (2.0, 3.5)
    a_critical: tuple[float, float] = (0.10, 0.20)
    b_critical: tuple[float, float] = (1.0, 2.5)
    theta_serious: tuple[float, float] = (0.40, 0.70)
    theta_critical: tuple[float, float] = (0.10, 0.30)
    theta_margin: float = 0.05
    # Multiplier on sampled decay steepness; the stress experiment sweeps it.
    decay_scale: float = 1.0


@dataclass
class HazardParams:
    wind_zone_count: int = 2
    lowsig_zone_count: int = 2
    zone_length: int = 6
    refresh_interval: int = 30
    wind_fail_prob: float = 0.3
    lowsig_fail_prob: float = 0.3


@dataclass
class RewardParams:
    step_penalty: float = 0.1
    clean_cell_bonus: float = 0.05
    shaping_scale: float = 0.5
    wind_penalty: float = 0.5
    lowsig_penalty: float = 0.5
    low_battery_penalty: float = 0.3
    closeness_penalty: float = 0.5
    closeness_radius: int = 4
    step_clip: float = 2.0
    goal_reward: float = 100.0
    crash_penalty: float = 50.0
    battery_penalty: float = 50.0
    land_reward: float = 50.0
    death_penalty: float = 100.0
    invalid_land_penalty: float = 1.0


@dataclass
class LearnerParams:
    episodes: int = 12000
    hidden: tuple[int, ...] = (256, 256, 128)
    buffer_capacity: int = 50000
    batch_size: int = 128
    gamma: float = 0.99
    learning_rate: float = 0.0001
    target_sync: int = 10
    epsilon_start: float = 1.0
    epsilon_min: float = 0.05
    epsilon_decay_fraction: float = 0.95
    checkpoint_interval: int = 1000


@dataclass
class BaselineParams:
    reserve_factor: float = 1.5
    # Safety margin expressed in steps of baseline drain.
    safety_margin_steps: float = 2.0


@dataclass
class EvalParams:
    episodes: int = 200
    epsilon: float = 0.0


@dataclass
class RunConfig:
    world: WorldParams = field(default_factory=WorldParams)
    triage: TriageParams = field(default_factory=TriageParams)
    hazards: HazardParams = field(default_factory=HazardParams)
    reward: RewardParams = field(default_factory=RewardParams)
    learner: LearnerParams = field(default_factory=LearnerParams)
    baselines: BaselineParams = field(default_factory=BaselineParams)
    eval: EvalParams = field(default_factory=EvalParams)


# ---------------------------------------------------------------------------
# Key schema: config key -> (section attr, field name, value kind)

_KEYS: dict[str, tuple[str, str, str]] = {
    "world.grid": ("world", "grid", "size"),  # sets width and height together
    "world.obstacle_count": ("world", "obstacle_count", "int"),
    "world.start0": ("world", "start0", "cell"),
    "world.start1": ("world", "start1", "cell"),
    "world.landing_zone0": ("world", "landing_zone0", "cell"),
    "world.landing_zone1": ("world", "landing_zone1", "cell"),
    "world.battery_capacity": ("world", "battery_capacity", "float"),
    "world.drain_base": ("world", "drain_base", "float"),
    "world.drain_wind": ("world", "drain_wind", "float"),
    "world.battery_low": ("world", "battery_low", "float"),
    "world.max_steps": ("world", "max_steps", "int"),
    "triage.max_patients": ("triage", "max_patients", "int"),
    "triage.n_init": ("triage", "n_init", "int"),
    "triage.spawn_interval": ("triage", "spawn_interval", "int"),
    "triage.t_max": ("triage", "t_max", "int"),
    "triage.a_stable": ("triage", "a_stable", "range"),
    "triage.b_stable": ("triage", "b_stable", "range"),
    "triage.a_urgent": ("triage", "a_urgent", "range"),
    "triage.b_urgent": ("triage", "b_urgent", "range"),
    "triage.a_critical": ("triage", "a_critical", "range"),
    "triage.b_critical": ("triage", "b_critical", "range"),
    "triage.theta_serious": ("triage", "theta_serious", "range"),
    "triage.theta_critical": ("triage", "theta_critical", "range"),
    "triage.theta_margin": ("triage", "theta_margin", "float"),
    "triage.decay_scale": ("triage", "decay_scale", "float"),
    "hazards.wind_zone_count": ("hazards", "wind_zone_count", "int"),
    "hazards.lowsig_zone_count": ("hazards", "lowsig_zone_count", "int"),
    "hazards.zone_length": ("hazards", "zone_length", "int"),
    "hazards.refresh_interval": ("hazards", "refresh_interval", "int"),
    "hazards.wind_fail_prob": ("hazards", "wind_fail_prob", "float"),
    "hazards.lowsig_fail_prob": ("hazards", "lowsig_fail_prob", "float"),
    "reward.step_penalty": ("reward", "step_penalty", "float"),
    "reward.clean_cell_bonus": ("reward", "clean_cell_bonus", "float"),
    "reward.shaping_scale": ("reward", "shaping_scale", "float"),
    "reward.wind_penalty": ("reward", "wind_penalty", "float"),
    "reward.lowsig_penalty": ("reward", "lowsig_penalty", "float"),
    "reward.low_battery_penalty": ("reward", "low_battery_penalty", "float"),
    "reward.closeness_penalty": ("reward", "closeness_penalty", "float"),
    "reward.closeness_radius": ("reward", "closeness_radius", "int"),
    "reward.step_clip": ("reward", "step_clip", "float"),
    "reward.goal_reward": ("reward", "goal_reward", "float"),
    "reward.crash_penalty": ("reward", "crash_penalty", "float"),
    "reward.battery_penalty": ("reward", "battery_penalty", "float"),
    "reward.land_reward": ("reward", "land_reward", "float"),
    "reward.death_penalty": ("reward", "death_penalty", "float"),
    "reward.invalid_land_penalty": ("reward", "invalid_land_penalty", "float"),
    "learner.episodes": ("learner", "episodes", "int"),
    "learner.hidden": ("learner", "hidden", "ints"),
    "learner.buffer_capacity": ("learner", "buffer_capacity", "int"),
    "learner.batch_size": ("learner", "batch_size", "int"),
    "learner.gamma": ("learner", "gamma", "float"),
    "learner.learning_rate": ("learner", "learning_rate", "float"),
    "learner.target_sync": ("learner", "target_sync", "int"),
    "learner.epsilon_start": ("learner", "epsilon_start", "float"),
    "learner.epsilon_min": ("learner", "epsilon_min", "float"),
    "learner.epsilon_decay_fraction": ("learner", "epsilon_decay_fraction", "float"),
    "learner.checkpoint_interval": ("learner", "checkpoint_interval", "int"),
    "baselines.reserve_factor": ("baselines", "reserve_factor", "float"),
    "baselines.safety_margin_steps": ("baselines", "safety_margin_steps", "float"),
    "eval.episodes": ("eval", "episodes", "int"),
    "eval.epsilon": ("eval", "epsilon", "float"),
}


def _parse_value(kind: str, raw: str):
    raw = raw.strip()
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    if kind == "size":
        w, _, h = raw.lower().partition("x")
        if not h:
            raise ValueError(f"expected WIDTHxHEIGHT, got {raw!r}")
        return (int(w), int(h))
    if kind == "cell":
        parts = raw.split(",")
        if len(parts) != 2:
            raise ValueError(f"expected X,Y, got {raw!r}")
        return (int(parts[0]), int(parts[1]))
    if kind == "range":
        lo, sep, hi = raw.partition(":")
        if not sep:
            raise ValueError(f"expected LO:HI, got {raw!r}")
        return (float(lo), float(hi))
    if kind == "ints":
        parts = [p.strip() for p in raw.split(",") if p.strip()]
        if not parts:
            raise ValueError(f"expected a comma-separated integer list, got {raw!r}")
        return tuple(int(p) for p in parts)
    raise AssertionError(f"unhandled kind {kind}")


def _format_value(kind: str, value) -> str:
    if kind == "int":
        return str(value)
    if kind == "float":
        return repr(float(value))
    if kind == "size":
        return f"{value[0]}x{value[1]}"
    if kind == "cell":
        return f"{value[0]},{value[1]}"
    if kind == "range":
        return f"{repr(float(value[0]))}:{repr(float(value[1]))}"
    if kind == "ints":
        return ",".join(str(v) for v in value)
    raise AssertionError(f"unhandled kind {kind}")


def _set_key(cfg: RunConfig, key: str, raw: str) -> None:
    section_name, field_name, kind = _KEYS[key]
    value = _parse_value(kind, raw)
    section = getattr(cfg, section_name)
    if key == "world.grid":
        section.width, section.height = value
    else:
        setattr(section, field_name, value)


def _get_key(cfg: RunConfig, key: str):
    section_name, field_name, kind = _KEYS[key]
    section = getattr(cfg, section_name)
    if key == "world.grid":
        return (section.width, section.height)
    if kind == "cell":
        # Echo resolved cells so the echoed file stands on its own.
        agent = int(field_name[-1])
        if field_name.startswith("start"):
            return section.start_cell(agent)
        return section.landing_cell(agent)
    return getattr(section, field_name)


def default_config() -> RunConfig:
    cfg = RunConfig()
    validate(cfg)
    return cfg


def clone(cfg: RunConfig) -> RunConfig:
    return copy.deepcopy(cfg)


def apply_overrides(cfg: RunConfig, overrides: dict[str, str]) -> RunConfig:
    """Return a validated copy of ``cfg`` with ``key -> raw value`` overrides applied."""
    out = clone(cfg)
    for key, raw in overrides.items():
        if key not in _KEYS:
            raise ConfigError(f"unknown config key '{key}'")
        try:
            _set_key(out, key, raw)
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}") from exc
    validate(out)
    return out


def parse_config(path: str) -> RunConfig:
    """Parse a ``section.key = value`` file; unspecified keys keep their defaults.

    Blank lines and ``#`` comments are ignored. Unknown keys, malformed values,
    and constraint violations raise ConfigError naming the offending line.
    """
    cfg = RunConfig()
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.readlines()
    for lineno, raw_line in enumerate(lines, start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}: line {lineno}: expected 'section.key = value'")
        key, _, raw = line.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _KEYS:
            raise ConfigError(f"{path}: line {lineno}: unknown key '{key}'")
        try:
            _set_key(cfg, key, raw)
        except ValueError as exc:
            raise ConfigError(f"{path}: line {lineno}: {key}: {exc}") from exc
    try:
        validate(cfg)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return cfg


def format_config(cfg: RunConfig) -> str:
    """Canonical text form of the full effective config; re-parses identically."""
    lines = []
    section_seen = None
    for key in _KEYS:
        section = key.split(".", 1)[0]
        if section != section_seen:
            if section_seen is not None:
                lines.append("")
            section_seen = section
        kind = _KEYS[key][2]
        lines.append(f"{key} = {_format_value(kind, _get_key(cfg, key))}")
    return "\n".join(lines) + "\n"


def _check(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


def _check_range(name: str, value: tuple[float, float], positive: bool = True) -> None:
    lo, hi = value
    _check(lo <= hi, f"{name}: lower bound {lo} exceeds upper bound {hi}")
    if positive:
        _check(lo > 0, f"{name}: bounds must be positive")


def validate(cfg: RunConfig) -> None:
    w, t, h, r, l, b, e = (cfg.world, cfg.triage, cfg.hazards, cfg.reward,
                           cfg.learner, cfg.baselines, cfg.eval)
    _check(w.width >= 2 and w.height >= 2, "world.grid: grid must be at least 2x2")
    _check(w.obstacle_count >= 0, "world.obstacle_count: must be >= 0")
    _check(w.battery_capacity > 0, "world.battery_capacity: must be > 0")
    _check(w.drain_base >= 0 and w.drain_wind >= 0, "world drain rates must be >= 0")
    _check(w.battery_low >= 0, "world.battery_low: must be >= 0")
    _check(w.max_steps >= 1, "world.max_steps: must be >= 1")
    cells = {}
    for name in ("start0", "start1", "landing_zone0", "landing_zone1"):
        agent = int(name[-1])
        cell = w.start_cell(agent) if name.startswith("start") else w.landing_cell(agent)
        _check(0 <= cell[0] < w.width and 0 <= cell[1] < w.height,
               f"world.{name}: cell {cell} is outside the {w.width}x{w.height} grid")
        cells[name] = cell
    _check(cells["start0"] != cells["start1"], "world.start1: drones cannot share a start cell")
    _check(cells["landing_zone0"] != cells["landing_zone1"],
           "world.landing_zone1: drones need distinct landing zones")

    _check(t.max_patients >= 1, "triage.max_patients: must be >= 1")
    _check(t.n_init >= 0, "triage.n_init: must be >= 0")
    _check(t.n_init <= t.max_patients, "triage.n_init: cannot exceed triage.max_patients")
    _check(t.spawn_interval >= 1, "triage.spawn_interval: must be >= 1")
    _check(t.t_max >= 1, "triage.t_max: must be >= 1")
    for name in ("a_stable", "b_stable", "a_urgent", "b_urgent", "a_critical", "b_critical"):
        _check_range(f"triage.{name}", getattr(t, name))
    for name in ("theta_serious", "theta_critical"):
        lo, hi = getattr(t, name)
        _check_range(f"triage.{name}", (lo, hi))
        _check(0 < lo and hi < 1, f"triage.{name}: thresholds must lie in (0,1)")
    _check(t.theta_margin >= 0, "triage.theta_margin: must be >= 0")
    _check(t.theta_critical[0] < t.theta_serious[1] - t.theta_margin,
           "triage.theta_critical: range leaves no admissible threshold pair")
    _check(t.decay_scale > 0, "triage.decay_scale: must be > 0")

    _check(h.wind_zone_count >= 0 and h.lowsig_zone_count >= 0, "hazard zone counts must be >= 0")
    _check(h.zone_length >= 1, "hazards.zone_length: must be >= 1")
    _check(h.refresh_interval >= 1, "hazards.refresh_interval: must be >= 1")
    _check(0.0 <= h.wind_fail_prob <= 1.0, "hazards.wind_fail_prob: must lie in [0,1]")
    _check(0.0 <= h.lowsig_fail_prob <= 1.0, "hazards.lowsig_fail_prob: must lie in [0,1]")

    _check(r.step_clip > 0, "reward.step_clip: must be > 0")
    _check(r.closeness_radius >= 0, "reward.closeness_radius: must be >= 0")
    for name in ("step_penalty", "clean_cell_bonus", "shaping_scale", "wind_penalty",
                 "lowsig_penalty", "low_battery_penalty", "closeness_penalty", "goal_reward",
                 "crash_penalty", "battery_penalty", "land_reward", "death_penalty",
                 "invalid_land_penalty"):
        _check(getattr(r, name) >= 0, f"reward.{name}: magnitudes must be >= 0")

    _check(l.episodes >= 1, "learner.episodes: must be >= 1")
    _check(len(l.hidden) >= 1 and all(d >= 1 for d in l.hidden),
           "learner.hidden: needs at least one positive layer width")
    _check(l.buffer_capacity >= 1, "learner.buffer_capacity: must be >= 1")
    _check(l.batch_size >= 1, "learner.batch_size: must be >= 1")
    _check(0.0 <= l.gamma <= 1.0, "learner.gamma: must lie in [0,1]")
    _check(l.learning_rate > 0, "learner.learning_rate: must be > 0")
    _check(l.target_sync >= 1, "learner.target_sync: must be >= 1")
    _check(0.0 <= l.epsilon_min <= l.epsilon_start <= 1.0,
           "learner epsilon schedule: need 0 <= epsilon_min <= epsilon_start <= 1")
    _check(0.0 < l.epsilon_decay_fraction <= 1.0,
           "learner.epsilon_decay_fraction: must lie in (0,1]")
    _check(l.checkpoint_interval >= 1, "learner.checkpoint_interval: must be >= 1")

    _check(b.reserve_factor >= 1.0, "baselines.reserve_factor: must be >= 1")
    _check(b.safety_margin_steps >= 0.0, "baselines.safety_margin_steps: must be >= 0")

    _check(e.episodes >= 1, "eval.episodes: must be >= 1")
    _check(0.0 <= e.epsilon <= 1.0, "eval.epsilon: must lie in [0,1]")
