"""Per-patient survival curves and triage escalation.

Samples one patient per spawn level and prints how the logistic survival
probability decays and when the discrete weight escalates through its two
sampled thresholds. Critical patients fall fast and early; stable patients
drift down slowly.
"""

import numpy as np

from ceda.config import default_config
from ceda.triage import LEVEL_NAMES, current_weight, spawn_patient, survival

params = default_config().triage
rng = np.random.default_rng(3)
free = [(x, y) for x in range(20) for y in range(20)]

by_level = {}
i = 0
while len(by_level) < 3:
    p = spawn_patient(rng, free, 0, params, i)
    by_level.setdefault(p.spawn_level, p)
    i += 1

for level in (1, 2, 3):
    p = by_level[level]
    print(f"\n=== spawn level {level} ({LEVEL_NAMES[level]}) ===")
    print(f"decay a={p.a:.4f} b={p.b:.3f} | thresholds: "
          f"serious {p.theta_serious:.3f}, critical {p.theta_critical:.3f}")
    print(f"{'t':>5} {'survival':>10} {'weight':>7}")
    last_w = None
    for t in range(0, params.t_max + 1, 25):
        s = survival(p, t)
        w = current_weight(p, t)
        marker = "  <- escalated" if last_w is not None and w > last_w else ""
        print(f"{t:>5} {s:>10.4f} {w:>7}{marker}")
        last_w = w

print("\nWeights never decrease: the floor at the spawn level plus a strictly")
print("decreasing survival curve makes escalation one-way.")
