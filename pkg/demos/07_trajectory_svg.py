"""Render a full episode to a self-contained SVG.

Uses the Smart EDF baseline so no checkpoint is needed: both agent paths with
time-graded opacity, accumulated hazard shading, triage-colored patients, and
gold delivery stars. Writes trajectory.svg next to this script (or to the
path given as an argument).
"""

import sys
from pathlib import Path

from ceda.config import apply_overrides, default_config
from ceda.evalkit import export_trajectory_svg, run_episode
from ceda.schedulers import make_baseline

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent / "trajectory.svg"

cfg = apply_overrides(default_config(), {
    "world.grid": "30x30",
    "world.obstacle_count": "80",
    "world.max_steps": "400",
    "triage.max_patients": "6",
    "triage.n_init": "4",
    "triage.spawn_interval": "50",
    "triage.t_max": "180",
    "hazards.zone_length": "5",
})

record = run_episode(make_baseline("smart-edf"), cfg, seed=42, record_trace=True)
export_trajectory_svg(record, out)

print(f"episode: {record.steps} steps, {record.delivered_count()} delivered, "
      f"{record.expired_count()} expired, landed={record.landed}")
print(f"wrote {out}")
