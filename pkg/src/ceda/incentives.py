"""Reward computation: potential-based shaping, the per-step shaped component,
discrete milestone rewards, and the clipped total."""

from __future__ import annotations

from .config import Cell


def manhattan(a: Cell, b: Cell) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def nearest_target_distance(world, agent_id: int) -> int:
    """Manhattan distance to the nearest active undelivered patient, with ties
    broken by lowest patient id, or to the agent's landing zone when none
    remain."""
    drone = world.drones[agent_id]
    best = None
    for p in world.pool.patients:
        if not p.active:
            continue
        d = manhattan(drone.pos, p.loc)
        if best is None or d < best:
            best = d
    if best is None:
        best = manhattan(drone.pos, drone.landing_zone)
    return best


def shaping(world_before, world_after, agent_id: int, shaping_scale: float) -> float:
    """Potential-based term: scale * (distance before - distance after)."""
    return shaping_scale * (nearest_target_distance(world_before, agent_id)
                            - nearest_target_distance(world_after, agent_id))


def step_reward(world, agent_id: int, events, shaping_term: float) -> float:
    """Pre-clip shaped reward for an agent that acted this step.

    Evaluated on the post-step world: hazard membership of the cell the agent
    ended the step on, post-drain battery, and final inter-agent distance.
    """
    from .world import InvalidLand  # local import to avoid a cycle

    cfg = world.cfg.reward
    drone = world.drones[agent_id]
    other = world.drones[1 - agent_id]
    in_wind = drone.pos in world.grid.wind_zones
    in_lowsig = drone.pos in world.grid.lowsig_zones
    r = -cfg.step_penalty + shaping_term
    if not in_wind and not in_lowsig:
        r += cfg.clean_cell_bonus
    if in_wind:
        r -= cfg.wind_penalty
    if in_lowsig:
        r -= cfg.lowsig_penalty
    if drone.battery < world.cfg.world.battery_low:
        r -= cfg.low_battery_penalty
    if manhattan(drone.pos, other.pos) < cfg.closeness_radius:
        r -= cfg.closeness_penalty
    if any(isinstance(ev, InvalidLand) and ev.agent == agent_id for ev in events):
        r -= cfg.invalid_land_penalty
    return r


def milestone_reward(events, agent_id: int, reward_cfg, t_max: int) -> float:
    """Discrete-event reward: timer- and weight-scaled deliveries, collision and
    depletion penalties, the landing bonus, and the expiry penalty shared
    symmetrically by both agents."""
    from .world import (AgentCollision, BatteryDepleted, Delivered, Landed,
                        ObstacleCollision, PatientExpired)

    r = 0.0
    collided = False
    depleted = False
    landed = False
    expiries = 0
    for ev in events:
        if isinstance(ev, Delivered):
            if ev.agent == agent_id:
                r += reward_cfg.goal_reward * (ev.timer_remaining / t_max) * ev.weight
        elif isinstance(ev, ObstacleCollision):
            collided = collided or ev.agent == agent_id
        elif isinstance(ev, AgentCollision):
            collided = True
        elif isinstance(ev, BatteryDepleted):
            depleted = depleted or ev.agent == agent_id
        elif isinstance(ev, Landed):
            landed = landed or ev.agent == agent_id
        elif isinstance(ev, PatientExpired):
            expiries += 1
    if collided:
        r -= reward_cfg.crash_penalty
    if depleted:
        r -= reward_cfg.battery_penalty
    if landed:
        r += reward_cfg.land_reward
    r -= expiries * reward_cfg.death_penalty / 2.0
    return r


def total_reward(step_component: float, milestone_component: float,
                 step_clip: float) -> float:
    """Clip the shaped step component symmetrically; milestones pass unclipped."""
    clipped = min(max(step_component, -step_clip), step_clip)
    return clipped + milestone_component
