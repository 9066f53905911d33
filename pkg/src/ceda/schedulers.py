"""Heuristic baseline policies sharing the learned policy's action interface:
Naive NNPW (reactive, uncoordinated), Smart EDF, and Smart NNPW (claim-based
coordination plus a dynamic landing rule)."""

from __future__ import annotations

from dataclasses import dataclass, field

from .config import Cell
from .incentives import manhattan
from .triage import Patient, current_weight
from .world import DOWN, LAND, LEFT, MOVE_DELTAS, RIGHT, UP, World, astar_path

SCORE_EPS = 1e-6


@dataclass(frozen=True)
class LandingRule:
    reserve_factor: float = 1.5
    safety_margin_steps: float = 2.0


@dataclass
class CoordinationState:
    """Per-episode claim map; a patient is claimed by at most one agent."""

    claims: dict[int, int] = field(default_factory=dict)  # patient id -> agent id

    def release_resolved(self, pool) -> None:
        for pid in list(self.claims):
            if not pool.patients[pid].active:
                del self.claims[pid]

    def release_agent(self, agent_id: int) -> None:
        for pid in list(self.claims):
            if self.claims[pid] == agent_id:
                del self.claims[pid]

    def claim(self, agent_id: int, patient_id: int) -> None:
        self.release_agent(agent_id)
        self.claims[patient_id] = agent_id

    def candidates(self, pool, agent_id: int) -> list[Patient]:
        """Active patients that are unclaimed or already claimed by this agent."""
        return [p for p in pool.patients
                if p.active and self.claims.get(p.id, agent_id) == agent_id]


def landing_rule_fires(world: World, agent_id: int, rule: LandingRule) -> bool:
    """True when every spawned patient is resolved, or when battery covers
    little more than the reserve-scaled cost of flying home."""
    if not any(p.active for p in world.pool.patients):
        return True
    drone = world.drones[agent_id]
    drain = world.cfg.world.drain_base
    dist = manhattan(drone.pos, drone.landing_zone)
    return drone.battery <= rule.reserve_factor * drain * dist + rule.safety_margin_steps * drain


def _greedy_step(pos: Cell, target: Cell) -> int:
    # Prefer the axis with the larger gap; ties go horizontal.
    dx = target[0] - pos[0]
    dy = target[1] - pos[1]
    if dx != 0 and abs(dx) >= abs(dy):
        return RIGHT if dx > 0 else LEFT
    if dy != 0:
        return DOWN if dy > 0 else UP
    return RIGHT if dx > 0 else LEFT


def _path_step(world: World, pos: Cell, target: Cell) -> int:
    path = astar_path(world.grid, pos, target)
    if path is None or len(path) < 2:
        return _greedy_step(pos, target)
    nxt = path[1]
    for action, (dx, dy) in MOVE_DELTAS.items():
        if (pos[0] + dx, pos[1] + dy) == nxt:
            return action
    return _greedy_step(pos, target)


def _head_home(world: World, agent_id: int, greedy: bool) -> int:
    drone = world.drones[agent_id]
    if drone.pos == drone.landing_zone:
        return LAND
    if greedy:
        return _greedy_step(drone.pos, drone.landing_zone)
    return _path_step(world, drone.pos, drone.landing_zone)


def naive_nnpw_action(world: World, agent_id: int) -> int:
    """Score every active patient by weight over remaining timer and walk a
    greedy Manhattan step toward the best one; heads home only once no active
    patients remain. No claims, no pathfinding, no battery logic."""
    drone = world.drones[agent_id]
    best = None
    best_key = None
    for p in world.pool.patients:
        if not p.active:
            continue
        w = current_weight(p, world.clock - p.spawn_time)
        score = w / (p.timer_remaining + SCORE_EPS)
        key = (-score, p.id)
        if best_key is None or key < best_key:
            best, best_key = p, key
    if best is None:
        return _head_home(world, agent_id, greedy=True)
    return _greedy_step(drone.pos, best.loc)


def _smart_action(world: World, agent_id: int, coord: CoordinationState,
                  rule: LandingRule, use_nnpw: bool) -> int:
    drone = world.drones[agent_id]
    coord.release_resolved(world.pool)
    if landing_rule_fires(world, agent_id, rule):
        coord.release_agent(agent_id)
        return _head_home(world, agent_id, greedy=False)
    cands = coord.candidates(world.pool, agent_id)
    if not cands:
        # Everything live is claimed by the partner; drift home without landing
        # committed until the rule fires.
        return _head_home(world, agent_id, greedy=False)
    if use_nnpw:
        def key(p: Patient):
            w = current_weight(p, world.clock - p.spawn_time)
            score = (w / (p.timer_remaining + SCORE_EPS)) / (1 + manhattan(drone.pos, p.loc))
            return (-score, manhattan(drone.pos, p.loc), p.id)
    else:
        def key(p: Patient):
            return (p.timer_remaining, manhattan(drone.pos, p.loc), p.id)
    best = min(cands, key=key)
    coord.claim(agent_id, best.id)
    return _path_step(world, drone.pos, best.loc)


def smart_edf_action(world: World, agent_id: int, coord: CoordinationState,
                     rule: LandingRule = LandingRule()) -> int:
    """Claim the unserviced patient with the least remaining time (ties: nearer,
    then lower id) and follow the planned path toward it; the landing rule
    overrides everything."""
    return _smart_action(world, agent_id, coord, rule, use_nnpw=False)


def smart_nnpw_action(world: World, agent_id: int, coord: CoordinationState,
                      rule: LandingRule = LandingRule()) -> int:
    """Like Smart EDF but claims by proximity-weighted score: weight over
    remaining timer, discounted by 1 + Manhattan distance."""
    return _smart_action(world, agent_id, coord, rule, use_nnpw=True)


# --- policy wrappers for the episode runner ---------------------------------

class NaiveNNPWPolicy:
    name = "naive-nnpw"

    def reset(self, cfg) -> None:
        pass

    def act(self, world: World, agent_id: int) -> int:
        return naive_nnpw_action(world, agent_id)


class _SmartPolicy:
    _use_nnpw = False

    def __init__(self):
        self.coord = CoordinationState()
        self.rule = LandingRule()

    def reset(self, cfg) -> None:
        self.coord = CoordinationState()
        self.rule = LandingRule(cfg.baselines.reserve_factor,
                                cfg.baselines.safety_margin_steps)

    def act(self, world: World, agent_id: int) -> int:
        return _smart_action(world, agent_id, self.coord, self.rule, self._use_nnpw)


class SmartEDFPolicy(_SmartPolicy):
    name = "smart-edf"
    _use_nnpw = False


class SmartNNPWPolicy(_SmartPolicy):
    name = "smart-nnpw"
    _use_nnpw = True


BASELINE_POLICIES = {
    "naive-nnpw": NaiveNNPWPolicy,
    "smart-edf": SmartEDFPolicy,
    "smart-nnpw": SmartNNPWPolicy,
}


def make_baseline(name: str):
    if name not in BASELINE_POLICIES:
        raise ValueError(f"unknown baseline policy {name!r}; "
                         f"choose from {sorted(BASELINE_POLICIES)}")
    return BASELINE_POLICIES[name]()
