"""Grid world: static obstacles, dynamic wind/low-signal zones, drone
kinematics with battery accounting, stochastic command failures, collision
rules, delivery detection, spawn scheduling, and the episode lifecycle."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from . import incentives
from .config import Cell, ConfigError, RunConfig
from .triage import PatientPool, current_weight

UP, DOWN, LEFT, RIGHT, LAND = range(5)
N_ACTIONS = 5
ACTION_NAMES = ("up", "down", "left", "right", "land")
MOVE_DELTAS = {UP: (0, -1), DOWN: (0, 1), LEFT: (-1, 0), RIGHT: (1, 0)}
# Fixed neighbor expansion order keeps path search deterministic.
NEIGHBOR_ORDER = (UP, DOWN, LEFT, RIGHT)


@dataclass
class GridMap:
    width: int
    height: int
    obstacles: frozenset[Cell]
    wind_zones: set[Cell] = field(default_factory=set)
    lowsig_zones: set[Cell] = field(default_factory=set)

    def in_bounds(self, cell: Cell) -> bool:
        return 0 <= cell[0] < self.width and 0 <= cell[1] < self.height

    def passable(self, cell: Cell) -> bool:
        return self.in_bounds(cell) and cell not in self.obstacles


@dataclass
class Drone:
    id: int
    pos: Cell
    battery: float
    landing_zone: Cell
    landed: bool = False
    # Drain step counters; battery is recomputed from these so that k clean
    # steps leave exactly capacity - k*drain_base (no float accumulation).
    drain_steps_base: int = 0
    drain_steps_wind: int = 0


# --- step events -----------------------------------------------------------

@dataclass(frozen=True)
class Delivered:
    patient_id: int
    agent: int
    timer_remaining: int
    weight: int


@dataclass(frozen=True)
class ObstacleCollision:
    agent: int


@dataclass(frozen=True)
class AgentCollision:
    """Two active drones attempted to occupy one cell; both are penalized."""


@dataclass(frozen=True)
class BatteryDepleted:
    agent: int


@dataclass(frozen=True)
class Landed:
    agent: int


@dataclass(frozen=True)
class PatientExpired:
    patient_id: int
    weight: int


@dataclass(frozen=True)
class InvalidLand:
    agent: int


@dataclass(frozen=True)
class ActionFailed:
    agent: int


@dataclass(frozen=True)
class PatientSpawned:
    patient_id: int
    level: int
    loc: Cell


@dataclass
class StepOutcome:
    events: list
    terminal: bool
    cause: str | None
    truncated: bool
    rewards: tuple[float, float]
    step_components: tuple[float, float]       # pre-clip shaped components
    milestone_components: tuple[float, float]


def astar_path(grid: GridMap, start: Cell, goal: Cell) -> list[Cell] | None:
    """Shortest 4-connected obstacle-avoiding path, endpoints inclusive.

    Returns None when ``goal`` is unreachable. Ties are broken by the fixed
    up/down/left/right expansion order, so results are deterministic.
    """
    for cell, label in ((start, "start"), (goal, "goal")):
        if not grid.in_bounds(cell):
            raise ValueError(f"{label} cell {cell} is out of bounds")
        if cell in grid.obstacles:
            raise ValueError(f"{label} cell {cell} is an obstacle")
    if start == goal:
        return [start]

    def h(c: Cell) -> int:
        return abs(c[0] - goal[0]) + abs(c[1] - goal[1])

    heap: list[tuple[int, int, Cell]] = [(h(start), 0, start)]
    counter = 1
    g_cost = {start: 0}
    came_from: dict[Cell, Cell | None] = {start: None}
    while heap:
        f, _, cur = heapq.heappop(heap)
        if cur == goal:
            path = [cur]
            while came_from[path[-1]] is not None:
                path.append(came_from[path[-1]])
            path.reverse()
            return path
        if f > g_cost[cur] + h(cur):
            continue  # stale heap entry
        for action in NEIGHBOR_ORDER:
            dx, dy = MOVE_DELTAS[action]
            nxt = (cur[0] + dx, cur[1] + dy)
            if not grid.passable(nxt):
                continue
            ng = g_cost[cur] + 1
            if ng < g_cost.get(nxt, 1 << 30):
                g_cost[nxt] = ng
                came_from[nxt] = cur
                heapq.heappush(heap, (ng + h(nxt), counter, nxt))
                counter += 1
    return None


class World:
    """Full mutable simulation state; deterministic given (config, seed)."""

    def __init__(self, cfg: RunConfig, seed: int):
        self.cfg = cfg
        self.seed = seed
        self.rng = np.random.default_rng(np.random.SeedSequence(seed))
        w = cfg.world

        starts = (w.start_cell(0), w.start_cell(1))
        zones = (w.landing_cell(0), w.landing_cell(1))
        reserved = set(starts) | set(zones)
        candidates = [(x, y) for y in range(w.height) for x in range(w.width)
                      if (x, y) not in reserved]
        if w.obstacle_count >= len(candidates):
            raise ConfigError(
                f"world.obstacle_count: {w.obstacle_count} obstacles do not fit the "
                f"{w.width}x{w.height} grid ({len(candidates)} placeable cells)")
        idx = self.rng.choice(len(candidates), size=w.obstacle_count, replace=False)
        obstacles = frozenset(candidates[i] for i in idx)
        self.grid = GridMap(w.width, w.height, obstacles)

        self.drones = [
            Drone(id=i, pos=starts[i], battery=w.battery_capacity, landing_zone=zones[i])
            for i in (0, 1)
        ]
        self.pool = PatientPool(cfg.triage)
        self.clock = 0
        self.terminal = False
        self.cause: str | None = None
        self.truncated = False

        self.initial_events: list[PatientSpawned] = []
        for _ in range(cfg.triage.n_init):
            p = self.pool.spawn(self.rng, self.free_spawn_cells(), self.clock)
            if p is not None:
                self.initial_events.append(PatientSpawned(p.id, p.spawn_level, p.loc))
        self.refresh_hazards()

    # -- placement helpers --------------------------------------------------

    def free_spawn_cells(self) -> list[Cell]:
        """Cells eligible for a patient: not obstacle, not another active
        patient, not a landing zone. Ordered row-major for determinism."""
        blocked = set(self.grid.obstacles)
        blocked.update(p.loc for p in self.pool.active_patients())
        blocked.update(d.landing_zone for d in self.drones)
        return [(x, y) for y in range(self.grid.height) for x in range(self.grid.width)
                if (x, y) not in blocked]

    def _zone_cells(self, skip: set[Cell]) -> set[Cell]:
        """One hazard zone: a contiguous run of cells along a path between two
        random active patients, or from a drone to a random free cell when
        fewer than two patients are active. Occupied cells are skipped."""
        length = self.cfg.hazards.zone_length
        active = self.pool.active_patients()
        if len(active) >= 2:
            pick = self.rng.choice(len(active), size=2, replace=False)
            a_cell, b_cell = active[pick[0]].loc, active[pick[1]].loc
        else:
            drone = self.drones[int(self.rng.integers(2))]
            a_cell = drone.pos
            frees = [(x, y) for y in range(self.grid.height) for x in range(self.grid.width)
                     if (x, y) not in self.grid.obstacles and (x, y) != a_cell]
            if not frees:
                return set()
            b_cell = frees[int(self.rng.integers(len(frees)))]
        if a_cell == b_cell:
            return set()
        path = astar_path(self.grid, a_cell, b_cell)
        if path is None:
            return set()
        span = len(path) - length
        start = int(self.rng.integers(0, span + 1)) if span > 0 else 0
        return {c for c in path[start:start + length] if c not in skip}

    def refresh_hazards(self) -> None:
        """Resample all wind and low-signal zones along inter-patient paths."""
        skip = {d.pos for d in self.drones}
        skip.update(d.landing_zone for d in self.drones)
        skip.update(p.loc for p in self.pool.active_patients())
        self.grid.wind_zones.clear()
        for _ in range(self.cfg.hazards.wind_zone_count):
            self.grid.wind_zones |= self._zone_cells(skip)
        self.grid.lowsig_zones.clear()
        for _ in range(self.cfg.hazards.lowsig_zone_count):
            self.grid.lowsig_zones |= self._zone_cells(skip)

    # -- step engine ---------------------------------------------------------

    def _resolve_move(self, agent_id: int, action: int, events: list) -> None:
        drone = self.drones[agent_id]
        other = self.drones[1 - agent_id]
        cell = drone.pos
        in_wind = cell in self.grid.wind_zones
        in_lowsig = cell in self.grid.lowsig_zones
        failed = False
        if in_wind and self.rng.random() < self.cfg.hazards.wind_fail_prob:
            failed = True
        if not failed and in_lowsig and self.rng.random() < self.cfg.hazards.lowsig_fail_prob:
            failed = True
        if failed:
            events.append(ActionFailed(agent_id))
            return
        dx, dy = MOVE_DELTAS[action]
        target = (cell[0] + dx, cell[1] + dy)
        if not self.grid.passable(target):
            events.append(ObstacleCollision(agent_id))
        elif target == other.pos:
            # A landed drone blocks like terrain; two active drones collide.
            if other.landed:
                events.append(ObstacleCollision(agent_id))
            else:
                events.append(AgentCollision())
        else:
            drone.pos = target

    def step(self, joint_action: tuple[int, int]) -> StepOutcome:
        """Advance the world by one step.

        Agents resolve in index order (agent 0 first): landed agents ignore
        their action; LAND succeeds only on the agent's own landing zone;
        movement commands may be dropped stochastically in wind/low-signal
        cells; blocked moves leave the agent in place; battery drains from the
        pre-move cell whether or not the move succeeded. Afterwards patient
        timers tick, the spawn schedule and hazard refresh fire on their
        intervals, and rewards plus the terminal state are computed.
        """
        if self.terminal:
            raise RuntimeError("step() called on a terminal world")
        for a in joint_action:
            if not 0 <= a < N_ACTIONS:
                raise ValueError(f"unknown action {a!r}")

        events: list = []
        active_at_start = [not d.landed for d in self.drones]
        d_before = [incentives.nearest_target_distance(self, i) for i in (0, 1)]

        for i in (0, 1):
            drone = self.drones[i]
            if not active_at_start[i]:
                continue
            pre_cell = drone.pos
            action = joint_action[i]
            if action == LAND:
                if drone.pos == drone.landing_zone:
                    drone.landed = True
                    events.append(Landed(i))
                else:
                    events.append(InvalidLand(i))
            else:
                self._resolve_move(i, action, events)
            # The landing step still pays its energy cost; freezing starts
            # the following step.
            if pre_cell in self.grid.wind_zones:
                drone.drain_steps_wind += 1
            else:
                drone.drain_steps_base += 1
            drone.battery = max(0.0, self.cfg.world.battery_capacity
                                - (drone.drain_steps_base * self.cfg.world.drain_base
                                   + drone.drain_steps_wind * self.cfg.world.drain_wind))
            if drone.battery <= 0.0:
                events.append(BatteryDepleted(i))
            if not drone.landed:
                patient = self.pool.active_patient_at(drone.pos)
                if patient is not None:
                    elapsed = self.clock - patient.spawn_time
                    weight = current_weight(patient, elapsed)
                    events.append(Delivered(patient.id, i, patient.timer_remaining, weight))
                    self.pool.deliver(patient, self.clock, self.clock + 1)

        for p in self.pool.tick_all(self.clock + 1):
            events.append(PatientExpired(p.id, p.terminal_weight))

        self.clock += 1
        if self.pool.can_spawn() and self.clock % self.cfg.triage.spawn_interval == 0:
            p = self.pool.spawn(self.rng, self.free_spawn_cells(), self.clock)
            if p is not None:
                events.append(PatientSpawned(p.id, p.spawn_level, p.loc))
        if self.clock % self.cfg.hazards.refresh_interval == 0:
            self.refresh_hazards()

        if any(d.battery <= 0.0 for d in self.drones):
            self.terminal, self.cause = True, "battery"
        elif all(d.landed for d in self.drones):
            self.terminal, self.cause = True, "landed"
        elif self.clock >= self.cfg.world.max_steps:
            self.terminal, self.cause, self.truncated = True, "truncated", True

        d_after = [incentives.nearest_target_distance(self, i) for i in (0, 1)]
        step_components = [0.0, 0.0]
        milestone_components = [0.0, 0.0]
        totals = [0.0, 0.0]
        for i in (0, 1):
            if active_at_start[i]:
                phi = self.cfg.reward.shaping_scale * (d_before[i] - d_after[i])
                step_components[i] = incentives.step_reward(self, i, events, phi)
            milestone_components[i] = incentives.milestone_reward(
                events, i, self.cfg.reward, self.cfg.triage.t_max)
            totals[i] = incentives.total_reward(
                step_components[i], milestone_components[i], self.cfg.reward.step_clip)

        return StepOutcome(
            events=events,
            terminal=self.terminal,
            cause=self.cause,
            truncated=self.truncated,
            rewards=(totals[0], totals[1]),
            step_components=(step_components[0], step_components[1]),
            milestone_components=(milestone_components[0], milestone_components[1]),
        )


def new_world(cfg: RunConfig, seed: int) -> World:
    return World(cfg, seed)
