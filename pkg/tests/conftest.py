"""Shared helpers for building small, fast test configurations."""

from __future__ import annotations

import numpy as np

from ceda.config import RunConfig, apply_overrides, default_config


def _pin_zones_to_starts(merged: dict) -> None:
    """Default the landing zones onto the corner starts (simple test geometry)."""
    w, _, h = merged["world.grid"].partition("x")
    merged.setdefault("world.start0", "0,0")
    merged.setdefault("world.start1", f"{int(w) - 1},{int(h) - 1}")
    merged.setdefault("world.landing_zone0", merged["world.start0"])
    merged.setdefault("world.landing_zone1", merged["world.start1"])


def small_cfg(**overrides: str) -> RunConfig:
    """A 12x12 world with light hazards and a tiny learner, tweakable via
    config-key overrides (raw string values). Landing zones coincide with the
    starts to keep test geometry simple."""
    base = {
        "world.grid": "12x12",
        "world.obstacle_count": "10",
        "world.max_steps": "120",
        "triage.max_patients": "4",
        "triage.n_init": "3",
        "triage.spawn_interval": "40",
        "triage.t_max": "60",
        "hazards.wind_zone_count": "1",
        "hazards.lowsig_zone_count": "1",
        "hazards.zone_length": "4",
        "hazards.refresh_interval": "20",
        "learner.episodes": "3",
        "learner.hidden": "16,16",
        "learner.buffer_capacity": "500",
        "learner.batch_size": "16",
        "learner.checkpoint_interval": "1000",
        "eval.episodes": "4",
    }
    base.update(overrides)
    _pin_zones_to_starts(base)
    return apply_overrides(default_config(), base)


def open_cfg(**overrides: str) -> RunConfig:
    """An obstacle- and hazard-free grid for deterministic kinematics tests."""
    base = {
        "world.grid": "9x9",
        "world.obstacle_count": "0",
        "world.max_steps": "200",
        "triage.max_patients": "2",
        "triage.n_init": "0",
        "triage.spawn_interval": "1000",
        "triage.t_max": "100",
        "hazards.wind_zone_count": "0",
        "hazards.lowsig_zone_count": "0",
    }
    base.update(overrides)
    _pin_zones_to_starts(base)
    return apply_overrides(default_config(), base)


def random_small_world(rng: np.random.Generator):
    """A randomized small world plus its config, for property-style sweeps."""
    from ceda.world import World

    cfg = small_cfg(**{
        "world.grid": f"{rng.integers(8, 14)}x{rng.integers(8, 14)}",
        "world.obstacle_count": str(int(rng.integers(0, 12))),
        "triage.n_init": str(int(rng.integers(0, 4))),
    })
    return World(cfg, int(rng.integers(0, 2 ** 31))), cfg
