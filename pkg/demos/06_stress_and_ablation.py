"""Cross-layer stress grid and awareness ablation on a trained checkpoint.

Point this at a checkpoint produced by demo 05 (or any `ceda train` run with
the matching config); it prints the 3x3 stress matrix and the six-condition
feature-ablation table.

    python3 demos/06_stress_and_ablation.py RUN_DIR/checkpoint.ckpt
"""

import sys

from ceda.config import apply_overrides, default_config
from ceda.evalkit import (ABLATION_CONDITIONS, NetworkPolicy, STRESS_COLUMNS,
                          STRESS_ROWS, ablation_suite, stress_grid)
from ceda.learner import load_checkpoint
from ceda.sensing import observation_length

if len(sys.argv) != 2:
    sys.exit("usage: python3 demos/06_stress_and_ablation.py CHECKPOINT")

net = load_checkpoint(sys.argv[1])

# the demo-05 world; adjust if your checkpoint was trained differently
cfg = apply_overrides(default_config(), {
    "world.grid": "14x14",
    "world.obstacle_count": "16",
    "world.max_steps": "160",
    "world.battery_capacity": "16",
    "world.battery_low": "6",
    "triage.max_patients": "3",
    "triage.n_init": "3",
    "triage.t_max": "100",
    "hazards.wind_zone_count": "1",
    "hazards.lowsig_zone_count": "1",
    "hazards.zone_length": "3",
})
expected = 2 * observation_length(cfg.triage.max_patients)
if net.input_dim != expected:
    sys.exit(f"checkpoint input {net.input_dim} != expected {expected}; "
             "edit the config block to match its training world")

print("=== 3x3 cross-layer stress grid (20 episodes per cell) ===")
grid = stress_grid(NetworkPolicy(net), cfg, n_episodes=20, base_seed=7000)
print(f"{'row':<10}" + "".join(f"  p={c:<16}" for c in STRESS_COLUMNS))
for row in STRESS_ROWS:
    cells = [grid[(row, c)] for c in STRESS_COLUMNS]
    line = "".join(f"  eta={c.eta:.2f} land={c.both_landed_rate:.2f}" for c in cells)
    print(f"{row:<10}{line}")
print("rows scale patient decay and spawn tempo; columns scale command loss.")

print("\n=== awareness ablation (20 episodes per condition) ===")
table = ablation_suite(net, cfg, n_episodes=20, base_seed=8000)
print(f"{'condition':<20} {'eta':>6} {'landed':>7} {'deliv':>6} {'battery':>8} {'w3exp':>6}")
for name in ABLATION_CONDITIONS:
    m = table[name]
    print(f"{name:<20} {m['eta']:>6.2f} {m['both_landed_rate']:>7.2f} "
          f"{m['deliveries']:>6.2f} {m['end_battery']:>8.2f} {m['w3_expiries']:>6.2f}")
print("Each row zeroes one feature group at evaluation time; the network is unchanged.")
