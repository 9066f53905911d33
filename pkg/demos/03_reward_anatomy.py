"""Anatomy of the reward signal.

Runs a short scripted episode and prints, per step, the pre-clip shaped
component, the milestone component, and the clipped total for agent 0 —
making the clip boundary and the unclipped milestones visible.
"""

from ceda.config import apply_overrides, default_config
from ceda.triage import Patient
from ceda.world import DOWN, LAND, LEFT, RIGHT, UP, new_world

cfg = apply_overrides(default_config(), {
    "world.grid": "8x8",
    "world.obstacle_count": "0",
    "world.start0": "0,0", "world.landing_zone0": "0,7",
    "world.start1": "7,7", "world.landing_zone1": "7,0",
    "hazards.wind_zone_count": "0", "hazards.lowsig_zone_count": "0",
    "triage.max_patients": "1", "triage.n_init": "0",
})
world = new_world(cfg, seed=0)
world.pool.patients.append(Patient(
    id=0, loc=(3, 0), spawn_level=3, a=0.15, b=1.5, theta_serious=0.55,
    theta_critical=0.25, spawn_time=0, timer_remaining=cfg.triage.t_max))

script = [
    (RIGHT, "move toward the patient (shaping +0.5)"),
    (UP, "bump the boundary (collision milestone -50)"),
    (RIGHT, "approach again"),
    (RIGHT, "arrive: delivery milestone, timer- and weight-scaled"),
    (LAND, "land attempt off-zone (invalid penalty)"),
    (DOWN, "head for the landing zone"),
]

print(f"{'step':>4} {'action':<44} {'shaped':>8} {'milestone':>10} {'total':>9}")
for i, (action, note) in enumerate(script):
    out = world.step((action, LEFT))
    print(f"{i:>4} {note:<44} {out.step_components[0]:>8.2f} "
          f"{out.milestone_components[0]:>10.2f} {out.rewards[0]:>9.2f}")

print("\nThe shaped component is clipped to +/-", cfg.reward.step_clip,
      "while milestones (delivery, crash, landing, expiry) pass through whole.")
print("Delivery paid goal_reward * timer_fraction * weight =",
      f"{cfg.reward.goal_reward} * {(cfg.triage.t_max - 3) / cfg.triage.t_max:.3f} * 3")
