"""Per-agent observation vectors, the joint state used by the centralized
learner, and evaluation-time feature ablation masks.

The feature index map below is frozen; checkpoints depend on it. Per-agent
layout with M patient slots:

    [0]  x / (width-1)
    [1]  y / (height-1)
    [2]  battery / capacity
    [3]  landed flag
    [4]  (other.x - x) / (width-1)
    [5]  (other.y - y) / (height-1)
    [6]  sign(landing_zone.x - x)
    [7]  sign(landing_zone.y - y)
    [8]  clock / max_steps
    [9 + 7*slot + 0..6]  per patient: x, y, sign(dx), sign(dy),
                         timer / t_max, delivered flag, weight / 3
    [9 + 7*M + 0..24]    5x5 obstacle view, row-major
    [9 + 7*M + 25..49]   5x5 wind view
    [9 + 7*M + 50..74]   5x5 low-signal view

Inactive (not yet spawned) and expired patient slots are all zeros. Local
views are centered on the agent; out-of-bounds cells read as obstacle=1,
hazard=0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .triage import WEIGHT_MAX, current_weight

AGENT_FEATURES = 9
PATIENT_FEATURES = 7
VIEW_SPAN = 2          # two-cell radius -> 5x5 window
VIEW_CELLS = 25
LOCAL_FEATURES = 3 * VIEW_CELLS

BATTERY_INDEX = 2
CLOCK_INDEX = 8


def observation_length(max_patients: int) -> int:
    return AGENT_FEATURES + PATIENT_FEATURES * max_patients + LOCAL_FEATURES


def patient_slot_offset(slot: int) -> int:
    return AGENT_FEATURES + PATIENT_FEATURES * slot


def view_offset(max_patients: int, view: int) -> int:
    """Start index of a local view: 0=obstacles, 1=wind, 2=low-signal."""
    return AGENT_FEATURES + PATIENT_FEATURES * max_patients + VIEW_CELLS * view


def _max_patients_for(obs: np.ndarray) -> int:
    rem = obs.shape[-1] - AGENT_FEATURES - LOCAL_FEATURES
    if rem < 0 or rem % PATIENT_FEATURES != 0:
        raise ValueError(f"observation length {obs.shape[-1]} does not match the layout")
    return rem // PATIENT_FEATURES


def observe(world, agent_id: int) -> np.ndarray:
    """Deterministic fixed-length observation for one agent."""
    cfg = world.cfg
    m = cfg.triage.max_patients
    obs = np.zeros(observation_length(m), dtype=np.float64)
    me = world.drones[agent_id]
    other = world.drones[1 - agent_id]
    x, y = me.pos
    wn = max(1, world.grid.width - 1)
    hn = max(1, world.grid.height - 1)

    obs[0] = x / wn
    obs[1] = y / hn
    obs[2] = me.battery / cfg.world.battery_capacity
    obs[3] = 1.0 if me.landed else 0.0
    obs[4] = (other.pos[0] - x) / wn
    obs[5] = (other.pos[1] - y) / hn
    obs[6] = float(np.sign(me.landing_zone[0] - x))
    obs[7] = float(np.sign(me.landing_zone[1] - y))
    obs[8] = world.clock / cfg.world.max_steps

    for slot, p in enumerate(world.pool.patients):
        if p.expired:
            continue  # slot stays zero, like a not-yet-spawned patient
        base = patient_slot_offset(slot)
        obs[base + 0] = p.loc[0] / wn
        obs[base + 1] = p.loc[1] / hn
        obs[base + 2] = float(np.sign(p.loc[0] - x))
        obs[base + 3] = float(np.sign(p.loc[1] - y))
        obs[base + 4] = p.timer_remaining / cfg.triage.t_max
        obs[base + 5] = 1.0 if p.delivered else 0.0
        if p.delivered:
            weight = p.terminal_weight
        else:
            weight = current_weight(p, world.clock - p.spawn_time)
        obs[base + 6] = weight / WEIGHT_MAX

    layers = (world.grid.obstacles, world.grid.wind_zones, world.grid.lowsig_zones)
    for view, cells in enumerate(layers):
        base = view_offset(m, view)
        k = 0
        for dy in range(-VIEW_SPAN, VIEW_SPAN + 1):
            for dx in range(-VIEW_SPAN, VIEW_SPAN + 1):
                cell = (x + dx, y + dy)
                if not world.grid.in_bounds(cell):
                    obs[base + k] = 1.0 if view == 0 else 0.0
                else:
                    obs[base + k] = 1.0 if cell in cells else 0.0
                k += 1
    return obs


def joint_state(world, agent_id: int) -> np.ndarray:
    """Concatenation [own observation, partner observation]; the two agents'
    queries are block swaps of each other."""
    return np.concatenate([observe(world, agent_id), observe(world, 1 - agent_id)])


@dataclass(frozen=True)
class AblationMask:
    """Feature groups to zero at evaluation time; never reorders or resizes."""

    zero_lowsig_view: bool = False
    zero_wind_view: bool = False
    zero_battery: bool = False
    zero_weights: bool = False
    zero_timers: bool = False

    @property
    def is_identity(self) -> bool:
        return not (self.zero_lowsig_view or self.zero_wind_view or self.zero_battery
                    or self.zero_weights or self.zero_timers)


def apply_mask(obs: np.ndarray, mask: AblationMask) -> np.ndarray:
    """Zero the flagged feature groups of one per-agent observation."""
    out = np.array(obs, dtype=np.float64, copy=True)
    m = _max_patients_for(out)
    if mask.zero_battery:
        out[BATTERY_INDEX] = 0.0
    if mask.zero_timers:
        for slot in range(m):
            out[patient_slot_offset(slot) + 4] = 0.0
    if mask.zero_weights:
        for slot in range(m):
            out[patient_slot_offset(slot) + 6] = 0.0
    if mask.zero_wind_view:
        base = view_offset(m, 1)
        out[base:base + VIEW_CELLS] = 0.0
    if mask.zero_lowsig_view:
        base = view_offset(m, 2)
        out[base:base + VIEW_CELLS] = 0.0
    return out


def apply_mask_joint(x: np.ndarray, mask: AblationMask) -> np.ndarray:
    """Apply the mask to both halves of a joint state vector."""
    half = x.shape[-1] // 2
    return np.concatenate([apply_mask(x[:half], mask), apply_mask(x[half:], mask)])
