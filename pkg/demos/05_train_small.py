"""Train a small policy end to end (a few minutes on one core).

Runs a compact training configuration, prints the learning curve in coarse
strokes, saves a checkpoint, reloads it, and compares the greedy policy
against the naive baseline on held-out seeds.

Pass a directory argument to keep the checkpoint and training log.
"""

import sys
import tempfile
from pathlib import Path

from ceda.config import apply_overrides, default_config
from ceda.evalkit import NetworkPolicy, run_episodes, summarize
from ceda.learner import load_checkpoint, train
from ceda.schedulers import make_baseline

out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="ceda_"))

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
    "learner.episodes": "700",
    "learner.hidden": "96,96,48",
    "learner.buffer_capacity": "12000",
    "learner.batch_size": "48",
    "learner.learning_rate": "0.00025",
    "learner.epsilon_decay_fraction": "0.6",
    "learner.checkpoint_interval": "350",
})


def progress(row):
    if row.episode % 70 == 0:
        print(f"episode {row.episode:4d}: steps={row.steps:3d} "
              f"reward={row.reward_total:8.1f} delivered={row.delivered} "
              f"landed={row.landed0}{row.landed1} eps={row.epsilon:.2f}")


print(f"training 700 episodes into {out_dir} ...")
net, log = train(cfg, seed=11, out_dir=out_dir, progress=progress)

first = sum(r.reward_total for r in log.rows[:70]) / 70
last = sum(r.reward_total for r in log.rows[-70:]) / 70
print(f"\nmean total reward: first 70 episodes {first:.1f} -> last 70 episodes {last:.1f}")

policy = NetworkPolicy(load_checkpoint(out_dir / "checkpoint.ckpt"))
seeds = range(5000, 5060)
trained = summarize(run_episodes(policy, cfg, seeds))
naive = summarize(run_episodes(make_baseline("naive-nnpw"), cfg, seeds))
print(f"greedy policy : eta={trained.eta:.3f} both_landed={trained.both_landed_rate:.2f}")
print(f"naive baseline: eta={naive.eta:.3f} both_landed={naive.both_landed_rate:.2f}")
print(f"\ncheckpoint: {out_dir / 'checkpoint.ckpt'}")
print(f"log:        {out_dir / 'training_log.csv'}")
