"""Evaluation tooling: the episode runner with a uniform policy interface,
delivery/triage/fairness metrics, the named scenario suite, the 3x3 stress
grid, the awareness ablation sweep, and CSV / trajectory-SVG export."""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import ConfigError, RunConfig, apply_overrides, clone
from .learner import QNetwork, select_action
from .sensing import AblationMask, apply_mask_joint, joint_state, observation_length
from .triage import current_weight
from .world import (AgentCollision, Delivered, ObstacleCollision, PatientExpired,
                    PatientSpawned, World)

# --- scenarios ---------------------------------------------------------------

SCENARIO_NAMES = (
    "baseline",
    "high-network-stress",
    "fast-decay",
    "sparse-patients",
    "dense-patients",
    "low-disruption",
)


def scenario_config(name: str, base: RunConfig) -> RunConfig:
    """Resolve a named evaluation scenario against a base config.

    ``sparse-patients`` caps the pool at the initial wave (no refills) rather
    than shrinking the slot count, so a fixed-size checkpoint stays usable;
    ``dense-patients`` widens the slot count to 12 and therefore only runs
    against a matching checkpoint.
    """
    if name == "baseline":
        return clone(base)
    if name == "high-network-stress":
        return apply_overrides(base, {"hazards.lowsig_fail_prob": "0.6"})
    if name == "fast-decay":
        return apply_overrides(base, {
            "triage.decay_scale": repr(base.triage.decay_scale * 2.0),
            "triage.spawn_interval": str(max(1, base.triage.spawn_interval // 2)),
        })
    if name == "sparse-patients":
        return apply_overrides(base, {
            "triage.spawn_interval": str(base.world.max_steps + 1),
        })
    if name == "dense-patients":
        return apply_overrides(base, {"triage.max_patients": "12"})
    if name == "low-disruption":
        return apply_overrides(base, {
            "hazards.wind_zone_count": "0",
            "hazards.lowsig_zone_count": "0",
            "hazards.wind_fail_prob": "0.0",
            "hazards.lowsig_fail_prob": "0.0",
        })
    raise ConfigError(f"unknown scenario {name!r}; choose from {list(SCENARIO_NAMES)}")


# --- policies ----------------------------------------------------------------

class NetworkPolicy:
    """Greedy (or epsilon-soft) wrapper around a checkpointed Q-network; the
    optional ablation mask is applied to both blocks of every query."""

    name = "network"

    def __init__(self, net: QNetwork, mask: AblationMask | None = None,
                 epsilon: float = 0.0, seed: int = 0):
        self.net = net
        self.mask = mask if mask is not None and not mask.is_identity else None
        self.epsilon = epsilon
        self._seed = seed
        self._rng = np.random.default_rng(seed)

    def reset(self, cfg: RunConfig) -> None:
        expected = 2 * observation_length(cfg.triage.max_patients)
        if self.net.input_dim != expected:
            raise ConfigError(
                f"checkpoint expects joint input {self.net.input_dim} but the scenario "
                f"produces {expected} (max_patients={cfg.triage.max_patients})")
        self._rng = np.random.default_rng(self._seed)

    def act(self, world: World, agent_id: int) -> int:
        x = joint_state(world, agent_id)
        if self.mask is not None:
            x = apply_mask_joint(x, self.mask)
        return select_action(self.net, x, self.epsilon, self._rng)


# --- episode records ----------------------------------------------------------

@dataclass
class PatientFate:
    patient_id: int
    spawn_level: int
    terminal_weight: int
    fate: str              # "delivered" | "expired" | "active"
    spawn_clock: int
    end_clock: int


@dataclass
class EpisodeTrace:
    """Optional per-step data for trajectory plots."""

    width: int
    height: int
    obstacles: frozenset
    landing_zones: tuple
    positions: list[list] = field(default_factory=lambda: [[], []])
    deliveries: list = field(default_factory=list)          # (cell, weight)
    patient_marks: list = field(default_factory=list)       # (cell, spawn_level)
    wind_exposure: dict = field(default_factory=dict)       # cell -> steps present
    lowsig_exposure: dict = field(default_factory=dict)


@dataclass
class EpisodeRecord:
    seed: int
    steps: int
    cause: str
    landed: tuple[bool, bool]
    end_battery: tuple[float, float]
    collisions: int
    collisions_per_agent: tuple[int, int]
    rewards: tuple[float, float]
    patients: list[PatientFate]
    trace: EpisodeTrace | None = None
    events: list | None = None     # (clock, event) pairs when kept

    def delivered_count(self) -> int:
        return sum(1 for p in self.patients if p.fate == "delivered")

    def expired_count(self) -> int:
        return sum(1 for p in self.patients if p.fate == "expired")

    def class_counts(self, fate: str) -> list[int]:
        counts = [0, 0, 0]
        for p in self.patients:
            if p.fate == fate:
                counts[p.terminal_weight - 1] += 1
        return counts


def run_episode(policy, cfg: RunConfig, seed: int, *, record_trace: bool = False,
                keep_events: bool = False) -> EpisodeRecord:
    """Simulate one full episode under a network policy or a baseline scheduler."""
    policy.reset(cfg)
    world = World(cfg, seed)
    trace = None
    if record_trace:
        trace = EpisodeTrace(
            width=world.grid.width,
            height=world.grid.height,
            obstacles=world.grid.obstacles,
            landing_zones=tuple(d.landing_zone for d in world.drones),
        )
        for i in (0, 1):
            trace.positions[i].append(world.drones[i].pos)
    event_log = [(0, ev) for ev in world.initial_events] if keep_events else None

    totals = [0.0, 0.0]
    collisions = [0, 0]
    steps = 0
    while not world.terminal:
        actions = (policy.act(world, 0), policy.act(world, 1))
        outcome = world.step(actions)
        steps += 1
        totals[0] += outcome.rewards[0]
        totals[1] += outcome.rewards[1]
        for ev in outcome.events:
            if isinstance(ev, ObstacleCollision):
                collisions[ev.agent] += 1
            elif isinstance(ev, AgentCollision):
                collisions[0] += 1
                collisions[1] += 1
        if event_log is not None:
            event_log.extend((world.clock, ev) for ev in outcome.events)
        if trace is not None:
            for i in (0, 1):
                trace.positions[i].append(world.drones[i].pos)
            for ev in outcome.events:
                if isinstance(ev, Delivered):
                    loc = world.pool.patients[ev.patient_id].loc
                    trace.deliveries.append((loc, ev.weight))
            for cell in world.grid.wind_zones:
                trace.wind_exposure[cell] = trace.wind_exposure.get(cell, 0) + 1
            for cell in world.grid.lowsig_zones:
                trace.lowsig_exposure[cell] = trace.lowsig_exposure.get(cell, 0) + 1

    fates = []
    for p in world.pool.patients:
        if p.delivered:
            fate, weight, end = "delivered", p.terminal_weight, p.end_clock
        elif p.expired:
            fate, weight, end = "expired", p.terminal_weight, p.end_clock
        else:
            fate = "active"
            weight = current_weight(p, world.clock - p.spawn_time)
            end = world.clock
        fates.append(PatientFate(p.id, p.spawn_level, weight, fate, p.spawn_time, end))
        if trace is not None:
            trace.patient_marks.append((p.loc, p.spawn_level))
    if event_log is not None:
        # Close the log with a weight snapshot for patients cut off mid-flight,
        # so a raw-event pass can classify every spawned patient.
        for f in fates:
            if f.fate == "active":
                event_log.append((world.clock, ("still-active", f.patient_id, f.terminal_weight)))

    return EpisodeRecord(
        seed=seed,
        steps=steps,
        cause=world.cause or "",
        landed=(world.drones[0].landed, world.drones[1].landed),
        end_battery=(world.drones[0].battery, world.drones[1].battery),
        collisions=sum(collisions),
        collisions_per_agent=(collisions[0], collisions[1]),
        rewards=(totals[0], totals[1]),
        patients=fates,
        trace=trace,
        events=event_log,
    )


def _run_episode_task(args):
    policy, cfg, seed = args
    return run_episode(policy, cfg, seed)


def run_episodes(policy, cfg: RunConfig, seeds, workers: int = 1) -> list[EpisodeRecord]:
    """Run independent episodes, optionally across processes. Results come back
    in seed order, so the worker count never changes the output."""
    seeds = list(seeds)
    if workers <= 1:
        return [run_episode(policy, cfg, s) for s in seeds]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_episode_task, [(policy, cfg, s) for s in seeds]))


# --- metrics -------------------------------------------------------------------

def utilization(record: EpisodeRecord) -> float | None:
    """Fraction of spawned patients delivered before expiry; None if nothing
    spawned."""
    if not record.patients:
        return None
    return record.delivered_count() / len(record.patients)


def triage_efficiency(record: EpisodeRecord) -> float | None:
    """Weight mass of delivered patients over weight mass of all spawned,
    using each patient's weight at its terminal event."""
    if not record.patients:
        return None
    total = sum(p.terminal_weight for p in record.patients)
    served = sum(p.terminal_weight for p in record.patients if p.fate == "delivered")
    return served / total


@dataclass
class ClassStats:
    mean_delivered: float
    mean_expired: float
    delivery_rate: float | None


def per_class_stats(records: list[EpisodeRecord]) -> dict[int, ClassStats]:
    """Per triage class: mean deliveries and expiries (classified by terminal
    weight) and the delivery rate against spawns of that class. Escalation
    migrates patients between classes, so the rate can exceed 1."""
    if not records:
        raise ValueError("per_class_stats needs at least one record")
    n = len(records)
    out = {}
    for c in (1, 2, 3):
        delivered = sum(r.class_counts("delivered")[c - 1] for r in records)
        expired = sum(r.class_counts("expired")[c - 1] for r in records)
        spawned = sum(1 for r in records for p in r.patients if p.spawn_level == c)
        rate = delivered / spawned if spawned else None
        out[c] = ClassStats(delivered / n, expired / n, rate)
    return out


def jain_index(values) -> float | None:
    """Jain's fairness index (sum x)^2 / (n * sum x^2), in [1/n, 1]; None when
    every value is zero."""
    vals = [float(v) for v in values]
    if not vals:
        raise ValueError("jain_index needs at least one value")
    if any(v < 0 for v in vals):
        raise ValueError("jain_index is defined for non-negative values")
    square_sum = sum(v * v for v in vals)
    if square_sum == 0.0:
        return None
    total = sum(vals)
    return (total * total) / (len(vals) * square_sum)


def _mean(values) -> float:
    vals = list(values)
    return sum(vals) / len(vals)


@dataclass
class CellMetrics:
    eta: float
    both_landed_rate: float
    w3_expiries: float


def summarize(records: list[EpisodeRecord]) -> CellMetrics:
    return CellMetrics(
        eta=_mean(triage_efficiency(r) or 0.0 for r in records),
        both_landed_rate=_mean(float(r.landed[0] and r.landed[1]) for r in records),
        w3_expiries=_mean(r.class_counts("expired")[2] for r in records),
    )


# --- stress grid ---------------------------------------------------------------

STRESS_COLUMNS = (0.0, 0.3, 0.6)
STRESS_ROWS = ("light", "baseline", "heavy")


def _stress_row_config(row: str, base: RunConfig) -> RunConfig:
    if row == "baseline":
        return clone(base)
    if row == "light":
        return apply_overrides(base, {
            "triage.decay_scale": repr(base.triage.decay_scale * 0.5),
            "triage.spawn_interval": str(base.triage.spawn_interval * 2),
        })
    if row == "heavy":
        return apply_overrides(base, {
            "triage.decay_scale": repr(base.triage.decay_scale * 2.0),
            "triage.spawn_interval": str(max(1, base.triage.spawn_interval // 2)),
        })
    raise ValueError(f"unknown stress row {row!r}")


def stress_grid(policy, base_cfg: RunConfig, n_episodes: int, base_seed: int = 0,
                workers: int = 1) -> dict[tuple[str, float], CellMetrics]:
    """Cross application-layer load (rows) with low-signal failure probability
    (columns); each of the 9 cells reports mean eta, both-landed rate, and
    mean critical expiries over the same seed block."""
    if n_episodes < 1:
        raise ValueError("stress_grid needs at least one episode per cell")
    seeds = range(base_seed, base_seed + n_episodes)
    grid = {}
    for row in STRESS_ROWS:
        row_cfg = _stress_row_config(row, base_cfg)
        for p_fail in STRESS_COLUMNS:
            cfg = apply_overrides(row_cfg, {"hazards.lowsig_fail_prob": repr(p_fail)})
            records = run_episodes(policy, cfg, seeds, workers=workers)
            grid[(row, p_fail)] = summarize(records)
    return grid


# --- awareness ablation ----------------------------------------------------------

ABLATION_CONDITIONS: dict[str, AblationMask] = {
    "full": AblationMask(),
    "no-network": AblationMask(zero_lowsig_view=True),
    "no-wind-physical": AblationMask(zero_wind_view=True),
    "no-battery": AblationMask(zero_battery=True),
    "no-triage-weights": AblationMask(zero_weights=True),
    "no-patient-timers": AblationMask(zero_timers=True),
}

ABLATION_METRICS = ("eta", "both_landed_rate", "deliveries", "end_battery", "w3_expiries")


def ablation_suite(net: QNetwork, cfg: RunConfig, n_episodes: int, base_seed: int = 0,
                   workers: int = 1) -> dict[str, dict[str, float]]:
    """Evaluate the unchanged policy under each feature-removal condition."""
    if n_episodes < 1:
        raise ValueError("ablation_suite needs at least one episode per condition")
    seeds = range(base_seed, base_seed + n_episodes)
    table = {}
    for name, mask in ABLATION_CONDITIONS.items():
        policy = NetworkPolicy(net, mask=mask, epsilon=cfg.eval.epsilon)
        records = run_episodes(policy, cfg, seeds, workers=workers)
        cell = summarize(records)
        table[name] = {
            "eta": cell.eta,
            "both_landed_rate": cell.both_landed_rate,
            "deliveries": _mean(r.delivered_count() for r in records),
            "end_battery": _mean((r.end_battery[0] + r.end_battery[1]) / 2.0
                                 for r in records),
            "w3_expiries": cell.w3_expiries,
        }
    return table


# --- CSV export ------------------------------------------------------------------

EPISODE_CSV_FIELDS = (
    "seed", "steps", "reward0", "reward1", "delivered", "expired",
    "landed0", "landed1", "bothLanded", "battery0", "battery1", "collisions",
    "U", "eta", "d_w1", "d_w2", "d_w3", "u_w1", "u_w2", "u_w3",
)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def episode_csv_row(record: EpisodeRecord) -> list[str]:
    d = record.class_counts("delivered")
    u = record.class_counts("expired")
    values = [
        record.seed, record.steps, record.rewards[0], record.rewards[1],
        record.delivered_count(), record.expired_count(),
        int(record.landed[0]), int(record.landed[1]),
        int(record.landed[0] and record.landed[1]),
        record.end_battery[0], record.end_battery[1], record.collisions,
        utilization(record), triage_efficiency(record),
        d[0], d[1], d[2], u[0], u[1], u[2],
    ]
    return [_fmt(v) for v in values]


def export_episodes_csv(records: list[EpisodeRecord], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(EPISODE_CSV_FIELDS)
        for record in records:
            writer.writerow(episode_csv_row(record))


_EPISODE_CSV_TYPES = {
    "seed": int, "steps": int, "delivered": int, "expired": int,
    "landed0": int, "landed1": int, "bothLanded": int, "collisions": int,
    "d_w1": int, "d_w2": int, "d_w3": int, "u_w1": int, "u_w2": int, "u_w3": int,
    "reward0": float, "reward1": float, "battery0": float, "battery1": float,
    "U": float, "eta": float,
}


def load_episodes_csv(path) -> list[dict]:
    """Typed round-trip loader for the episode CSV; empty fields become None."""
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for rec in csv.DictReader(fh):
            row = {}
            for name in EPISODE_CSV_FIELDS:
                raw = rec[name]
                row[name] = None if raw == "" else _EPISODE_CSV_TYPES[name](raw)
            rows.append(row)
    return rows


def export_stress_csv(grid: dict[tuple[str, float], CellMetrics], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "lowsig_fail_prob", "eta", "both_landed_rate", "w3_expiries"])
        for row in STRESS_ROWS:
            for p_fail in STRESS_COLUMNS:
                cell = grid[(row, p_fail)]
                writer.writerow([row, _fmt(p_fail), _fmt(cell.eta),
                                 _fmt(cell.both_landed_rate), _fmt(cell.w3_expiries)])


def export_ablation_csv(table: dict[str, dict[str, float]], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["condition", *ABLATION_METRICS])
        for name, metrics in table.items():
            writer.writerow([name, *(_fmt(metrics[m]) for m in ABLATION_METRICS)])


# --- trajectory SVG ------------------------------------------------------------

_AGENT_COLORS = ("#d62728", "#1f77b4")
_CLASS_COLORS = {1: "#1f77b4", 2: "#ff7f0e", 3: "#d62728"}


def _star_points(cx: float, cy: float, outer: float, inner: float) -> str:
    import math as _math
    pts = []
    for k in range(10):
        r = outer if k % 2 == 0 else inner
        ang = -_math.pi / 2 + k * _math.pi / 5
        pts.append(f"{cx + r * _math.cos(ang):.2f},{cy + r * _math.sin(ang):.2f}")
    return " ".join(pts)


def export_trajectory_svg(record: EpisodeRecord, path, cell_px: int = 14) -> None:
    """Self-contained SVG of one traced episode: both agent paths with opacity
    increasing over time, accumulated hazard shading, delivery stars, and
    triage-colored patient markers."""
    trace = record.trace
    if trace is None:
        raise ValueError("record has no trace; run the episode with record_trace=True")

    def px(cell) -> tuple[float, float]:
        return (cell[0] + 0.5) * cell_px, (cell[1] + 0.5) * cell_px

    width_px = trace.width * cell_px
    height_px = trace.height * cell_px
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width_px}" height="{height_px}" '
        f'viewBox="0 0 {width_px} {height_px}">',
        f'<rect width="{width_px}" height="{height_px}" fill="#fcfcfc"/>',
    ]
    for exposure, color in ((trace.wind_exposure, "#ff9900"),
                            (trace.lowsig_exposure, "#7733cc")):
        if not exposure:
            continue
        peak = max(exposure.values())
        for cell, count in sorted(exposure.items()):
            alpha = 0.12 + 0.5 * (count / peak)
            parts.append(
                f'<rect x="{cell[0] * cell_px}" y="{cell[1] * cell_px}" width="{cell_px}" '
                f'height="{cell_px}" fill="{color}" fill-opacity="{alpha:.3f}"/>')
    for cell in sorted(trace.obstacles):
        parts.append(
            f'<rect x="{cell[0] * cell_px}" y="{cell[1] * cell_px}" width="{cell_px}" '
            f'height="{cell_px}" fill="#444444"/>')
    for i, zone in enumerate(trace.landing_zones):
        x, y = zone[0] * cell_px, zone[1] * cell_px
        parts.append(
            f'<rect x="{x}" y="{y}" width="{cell_px}" height="{cell_px}" fill="none" '
            f'stroke="{_AGENT_COLORS[i]}" stroke-width="2"/>')
    for cell, level in trace.patient_marks:
        x, y = px(cell)
        parts.append(
            f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{cell_px * 0.32:.2f}" '
            f'fill="{_CLASS_COLORS[level]}" stroke="white" stroke-width="1"/>')
    for i in (0, 1):
        pts = [px(c) for c in trace.positions[i]]
        color = _AGENT_COLORS[i]
        # One full-path polyline per agent; time progression layered on top.
        poly = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
        parts.append(f'<polyline points="{poly}" fill="none" stroke="{color}" '
                     f'stroke-width="1.2" stroke-opacity="0.35"/>')
        n = max(1, len(pts) - 1)
        for k in range(len(pts) - 1):
            (x0, y0), (x1, y1) = pts[k], pts[k + 1]
            if (x0, y0) == (x1, y1):
                continue
            alpha = 0.15 + 0.8 * ((k + 1) / n)
            parts.append(f'<line x1="{x0:.2f}" y1="{y0:.2f}" x2="{x1:.2f}" y2="{y1:.2f}" '
                         f'stroke="{color}" stroke-width="2" stroke-opacity="{alpha:.3f}"/>')
        if pts:
            sx, sy = pts[0]
            ex, ey = pts[-1]
            half = cell_px * 0.3
            parts.append(f'<rect x="{sx - half:.2f}" y="{sy - half:.2f}" '
                         f'width="{2 * half:.2f}" height="{2 * half:.2f}" fill="{color}"/>')
            parts.append(
                f'<polygon points="{ex:.2f},{ey - half:.2f} {ex + half:.2f},{ey:.2f} '
                f'{ex:.2f},{ey + half:.2f} {ex - half:.2f},{ey:.2f}" fill="{color}" '
                f'stroke="white" stroke-width="1"/>')
    for cell, _weight in trace.deliveries:
        x, y = px(cell)
        parts.append(f'<polygon points="{_star_points(x, y, cell_px * 0.45, cell_px * 0.18)}" '
                     f'fill="gold" stroke="#886600" stroke-width="0.8"/>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
