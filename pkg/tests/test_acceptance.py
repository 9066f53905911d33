"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Criteria 1-4, 6, and 8 run in seconds; criterion 5 retrains twice at a small
scale (about a minute); criterion 7 is the desk-scale learning run (tens of
minutes, single core). Criterion 9 is the full-scale training reproduction
(hours) and only runs when CEDA_FULL_RUN=1 is set.

Run with ``pytest tests/test_acceptance.py -v -s``.
"""

from __future__ import annotations

import copy
import math
import os

import numpy as np
import pytest

from conftest import random_small_world, small_cfg
from ceda.config import apply_overrides, default_config
from ceda.evalkit import (NetworkPolicy, ablation_suite, export_episodes_csv,
                          load_episodes_csv, run_episode, run_episodes,
                          stress_grid, summarize, triage_efficiency, utilization)
from ceda.learner import (Adam, QNetwork, clip_gradients, compute_loss_and_grads,
                          epsilon_schedule, load_checkpoint, save_checkpoint, train)
from ceda.schedulers import make_baseline
from ceda.sensing import joint_state, observation_length, observe
from ceda.triage import current_weight, spawn_patient, survival
from ceda.world import Delivered, PatientExpired, PatientSpawned, new_world


def report(criterion: str, ok: bool, detail: str) -> None:
    print(f"\n[acceptance] {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"{criterion}: {detail}"


# --- criterion 1: shape / identity ------------------------------------------------


def test_c1_shapes_checkpoint_and_csv_identity(tmp_path):
    world = new_world(default_config(), 3)
    obs_ok = observe(world, 0).shape == (140,) and observe(world, 1).shape == (140,)
    joint_ok = joint_state(world, 0).shape == (280,) and joint_state(world, 1).shape == (280,)

    rng = np.random.default_rng(0)
    net = QNetwork([280, 32, 5], rng)
    save_checkpoint(net, tmp_path / "c1.ckpt")
    loaded = load_checkpoint(tmp_path / "c1.ckpt")
    xs = rng.normal(size=(100, 280))
    ckpt_ok = (np.array_equal(net.forward(xs), loaded.forward(xs))
               and all(np.array_equal(a, b)
                       for a, b in zip(net.parameters(), loaded.parameters())))

    records = [run_episode(make_baseline("smart-edf"), small_cfg(), s) for s in range(3)]
    export_episodes_csv(records, tmp_path / "c1.csv")
    rows = load_episodes_csv(tmp_path / "c1.csv")
    csv_ok = all(
        row["seed"] == rec.seed and row["steps"] == rec.steps
        and row["reward0"] == rec.rewards[0] and row["reward1"] == rec.rewards[1]
        and row["battery0"] == rec.end_battery[0]
        and row["U"] == utilization(rec) and row["eta"] == triage_efficiency(rec)
        for row, rec in zip(rows, records))

    report("criterion 1 (shape/identity)", obs_ok and joint_ok and ckpt_ok and csv_ok,
           "obs=140, joint=280, checkpoint bitwise, CSV lossless")


# --- criterion 2: survival / escalation ---------------------------------------------


def test_c2_survival_and_escalation():
    params = default_config().triage
    rng = np.random.default_rng(10)
    free = [(x, y) for x in range(30) for y in range(30)]

    midpoint_ok = True
    decreasing_ok = True
    for i in range(200):
        p = spawn_patient(rng, free, 0, params, i)
        if abs(survival(p, p.b / p.a) - 0.5) > 1e-12:
            midpoint_ok = False
        vals = [survival(p, t) for t in range(0, 300, 7)]
        if not all(a > b for a, b in zip(vals, vals[1:])):
            decreasing_ok = False

    weights_ok = True
    for i in range(1000):
        p = spawn_patient(rng, free, 0, params, i)
        ws = [current_weight(p, t) for t in range(0, params.t_max + 1)]
        if not all(a <= b for a, b in zip(ws, ws[1:])):
            weights_ok = False
            break

    separation_ok = all(
        (q := spawn_patient(rng, free, 0, params, i)).theta_critical
        < q.theta_serious - params.theta_margin
        for i in range(10_000))

    report("criterion 2 (survival/escalation)",
           midpoint_ok and decreasing_ok and weights_ok and separation_ok,
           "midpoint 0.5 to 1e-12, strictly decreasing, weights non-decreasing over "
           "1000 lifetimes, threshold separation over 10000 samples")


# --- criterion 3: reward suite ---------------------------------------------------


def test_c3_reward_properties():
    from ceda.incentives import milestone_reward, total_reward
    rcfg = default_config().reward
    t_max = default_config().triage.t_max

    rng = np.random.default_rng(30)
    clip_ok = True
    checked = 0
    while checked < 10_000:
        world, cfg = random_small_world(rng)
        while not world.terminal:
            out = world.step((int(rng.integers(5)), int(rng.integers(5))))
            for i in (0, 1):
                clipped = out.rewards[i] - out.milestone_components[i]
                if abs(clipped) > cfg.reward.step_clip + 1e-12:
                    clip_ok = False
                checked += 1

    def delivery_value(timer, weight):
        return milestone_reward([Delivered(0, 0, timer, weight)], 0, rcfg, t_max)

    monotone_ok = all(
        delivery_value(t1, w) < delivery_value(t2, w)
        for w in (1, 2, 3) for t1, t2 in zip(range(0, 250, 25), range(25, 251, 25))
    ) and all(delivery_value(t, 1) < delivery_value(t, 2) < delivery_value(t, 3)
              for t in (10, 125, 250))

    symmetry_ok = True
    for _ in range(2000):
        events = [PatientExpired(int(rng.integers(8)), int(rng.integers(1, 4)))
                  for _ in range(int(rng.integers(1, 4)))]
        m0 = milestone_reward(events, 0, rcfg, t_max)
        m1 = milestone_reward(events, 1, rcfg, t_max)
        if m0 != m1:
            symmetry_ok = False

    decomposition_ok = True
    for _ in range(5):
        world, cfg = random_small_world(rng)
        totals = [0.0, 0.0]
        recomposed = [0.0, 0.0]
        while not world.terminal:
            out = world.step((int(rng.integers(5)), int(rng.integers(5))))
            for i in (0, 1):
                totals[i] += out.rewards[i]
                recomposed[i] += total_reward(out.step_components[i],
                                              out.milestone_components[i],
                                              cfg.reward.step_clip)
        if totals != recomposed:
            decomposition_ok = False

    report("criterion 3 (reward suite)",
           clip_ok and monotone_ok and symmetry_ok and decomposition_ok,
           f"clip bound over {checked} random steps, delivery monotone, expiry "
           "symmetric, decomposition exact")


# --- criterion 4: learner numerics ---------------------------------------------------


def test_c4_learner_numerics():
    rng = np.random.default_rng(40)
    h = 1e-5
    grad_ok = True
    for _ in range(2):
        dims = [8, int(rng.integers(4, 8)), 5]
        policy = QNetwork(dims, rng)
        target = QNetwork(dims, rng)
        for b in policy.biases:
            b += rng.normal(scale=0.3, size=b.shape)
        batch = {
            "o0": rng.normal(size=(6, 4)), "o1": rng.normal(size=(6, 4)),
            "n0": rng.normal(size=(6, 4)), "n1": rng.normal(size=(6, 4)),
            "a0": rng.integers(0, 5, size=6), "a1": rng.integers(0, 5, size=6),
            "r0": rng.normal(size=6), "r1": rng.normal(size=6),
            "terminal": np.zeros(6, dtype=bool),
        }
        _, grads = compute_loss_and_grads(policy, target, batch, 0.9)
        params = policy.parameters()
        for p_idx, param in enumerate(params):
            for pos in rng.choice(param.size, size=min(4, param.size), replace=False):
                idx = np.unravel_index(pos, param.shape)
                orig = param[idx]
                param[idx] = orig + h
                up, _ = compute_loss_and_grads(policy, target, batch, 0.9)
                param[idx] = orig - h
                down, _ = compute_loss_and_grads(policy, target, batch, 0.9)
                param[idx] = orig
                numeric = (up - down) / (2 * h)
                analytic = grads[p_idx][idx]
                if abs(numeric - analytic) / max(abs(numeric), abs(analytic), 1e-8) >= 1e-4:
                    grad_ok = False

    params = [rng.normal(size=(4, 4)), rng.normal(size=4)]
    before = [p.copy() for p in params]
    Adam(params, 0.1).step(params, [np.zeros_like(p) for p in params])
    adam_ok = all(np.array_equal(a, b) for a, b in zip(before, params))

    grads = [rng.normal(scale=20.0, size=(8, 8)) for _ in range(3)]
    clip_gradients(grads, 1.0)
    norm = math.sqrt(sum(float(np.sum(g * g)) for g in grads))
    clip_ok = norm <= 1.0 + 1e-12

    total = 2000
    values = [epsilon_schedule(ep, total, 1.0, 0.05, 0.95) for ep in range(total)]
    eps_ok = (values[0] == 1.0
              and all(a >= b for a, b in zip(values, values[1:]))
              and values[round(0.95 * total)] <= 0.05 + 1e-9)

    report("criterion 4 (learner numerics)",
           grad_ok and adam_ok and clip_ok and eps_ok,
           "finite-difference gradients < 1e-4, Adam zero-grad fixed point, "
           "clip norm <= 1, epsilon endpoints")


# --- criterion 5: training determinism ------------------------------------------------


def determinism_cfg():
    return apply_overrides(default_config(), {
        "world.grid": "20x20",
        "world.obstacle_count": "30",
        "world.max_steps": "120",
        "triage.max_patients": "4",
        "triage.n_init": "3",
        "triage.spawn_interval": "40",
        "triage.t_max": "80",
        "hazards.zone_length": "4",
        "learner.episodes": "200",
        "learner.hidden": "32,32",
        "learner.buffer_capacity": "4000",
        "learner.batch_size": "32",
        "learner.learning_rate": "0.0003",
    })


def test_c5_training_determinism(tmp_path):
    cfg = determinism_cfg()
    dir_a = tmp_path / "a"
    dir_b = tmp_path / "b"
    _, log_a = train(cfg, seed=2024, out_dir=dir_a)
    _, log_b = train(cfg, seed=2024, out_dir=dir_b)
    logs_equal = log_a == log_b and len(log_a) == 200
    bytes_equal = ((dir_a / "training_log.csv").read_bytes()
                   == (dir_b / "training_log.csv").read_bytes())
    report("criterion 5 (determinism)", logs_equal and bytes_equal,
           "two 200-episode runs on a 20x20 grid produce bitwise-identical logs")


# --- criterion 6: metric oracle --------------------------------------------------------


def brute_force_metrics(events):
    """Independent pass over the raw event log."""
    spawned, terminal, delivered = {}, {}, set()
    for _, ev in events:
        if isinstance(ev, PatientSpawned):
            spawned[ev.patient_id] = ev.level
        elif isinstance(ev, Delivered):
            terminal[ev.patient_id] = ev.weight
            delivered.add(ev.patient_id)
        elif isinstance(ev, PatientExpired):
            terminal[ev.patient_id] = ev.weight
        elif isinstance(ev, tuple) and ev[0] == "still-active":
            terminal[ev[1]] = ev[2]
    if not spawned:
        return None, None
    u = len(delivered) / len(spawned)
    eta = (sum(terminal[p] for p in delivered)
           / sum(terminal[p] for p in spawned))
    return u, eta


def test_c6_metric_oracle():
    rng = np.random.default_rng(60)
    policies = [make_baseline(n) for n in ("naive-nnpw", "smart-edf", "smart-nnpw")]
    ok = True
    for i in range(100):
        cfg = small_cfg(**{
            "world.grid": f"{rng.integers(8, 13)}x{rng.integers(8, 13)}",
            "world.obstacle_count": str(int(rng.integers(0, 10))),
            "world.max_steps": str(int(rng.integers(30, 90))),
            "triage.max_patients": str(int(rng.integers(1, 7))),
            "triage.n_init": "1",
            "triage.spawn_interval": str(int(rng.integers(5, 25))),
            "triage.t_max": str(int(rng.integers(20, 60))),
        })
        rec = run_episode(policies[i % 3], cfg, int(rng.integers(10_000)),
                          keep_events=True)
        assert len(rec.patients) <= 6
        u_oracle, eta_oracle = brute_force_metrics(rec.events)
        if utilization(rec) != u_oracle or triage_efficiency(rec) != eta_oracle:
            ok = False
    report("criterion 6 (metric oracle)", ok,
           "U and eta equal the raw-event-log recomputation on 100 episodes, exact")


# --- criteria 7 and 8: desk-scale learning, stress/ablation plumbing -------------------

DESK_OVERRIDES = {
    "world.grid": "20x20",
    "world.obstacle_count": "40",
    "world.max_steps": "250",
    "world.battery_capacity": "24",
    "world.battery_low": "10",
    "triage.max_patients": "4",
    "triage.n_init": "4",
    "triage.t_max": "150",
    "hazards.wind_zone_count": "2",
    "hazards.lowsig_zone_count": "2",
    "hazards.zone_length": "4",
    "learner.episodes": "2000",
    "learner.hidden": "128,128,64",
    "learner.buffer_capacity": "20000",
    "learner.batch_size": "64",
    "learner.learning_rate": "0.0002",
    # reach the epsilon floor by episode 1200: the 2000-episode desk budget
    # needs a longer greedy phase than the full-scale schedule provides
    "learner.epsilon_decay_fraction": "0.6",
}


@pytest.fixture(scope="module")
def desk_run():
    cfg = apply_overrides(default_config(), DESK_OVERRIDES)
    net, log = train(cfg, seed=7)
    return cfg, net, log


def test_c7_desk_scale_learning(desk_run):
    cfg, net, log = desk_run

    first = [r.reward_total for r in log.rows[:100]]
    last = [r.reward_total for r in log.rows[-100:]]
    trend_ok = sum(last) / 100 > sum(first) / 100

    seeds = range(50_000, 50_200)
    eta_of = {}
    for name, policy in (("network", NetworkPolicy(net)),
                         ("naive-nnpw", make_baseline("naive-nnpw")),
                         ("smart-edf", make_baseline("smart-edf")),
                         ("smart-nnpw", make_baseline("smart-nnpw"))):
        records = run_episodes(policy, cfg, seeds)
        eta_of[name] = sum(triage_efficiency(r) or 0.0 for r in records) / len(records)

    naive = eta_of["naive-nnpw"]
    improvement = (eta_of["network"] - naive) / naive if naive > 0 else float("inf")
    policy_ok = eta_of["network"] > naive and improvement >= 0.30
    hierarchy_ok = eta_of["smart-edf"] > naive and eta_of["smart-nnpw"] > naive

    report("criterion 7 (desk-scale learning)",
           trend_ok and policy_ok and hierarchy_ok,
           f"reward trend up (first100={sum(first)/100:.0f}, last100={sum(last)/100:.0f}); "
           f"eta: network={eta_of['network']:.3f} naive={naive:.3f} "
           f"(+{improvement:.0%}), smart-edf={eta_of['smart-edf']:.3f}, "
           f"smart-nnpw={eta_of['smart-nnpw']:.3f}")


def test_c8_stress_and_ablation_plumbing(desk_run):
    cfg, net, _ = desk_run
    policy = NetworkPolicy(net)

    grid = stress_grid(policy, cfg, n_episodes=30, base_seed=90_000)
    grid_ok = (len(grid) == 9
               and {c for _, c in grid} == {0.0, 0.3, 0.6}
               and {r for r, _ in grid} == {"light", "baseline", "heavy"})

    table = ablation_suite(net, cfg, n_episodes=30, base_seed=91_000)
    shape_ok = (len(table) == 6
                and all(len(m) == 5 for m in table.values()))
    landing = {name: m["both_landed_rate"] for name, m in table.items()}
    battery_ok = landing["no-battery"] == min(landing.values())

    report("criterion 8 (stress/ablation plumbing)",
           grid_ok and shape_ok and battery_ok,
           f"9 stress cells with columns 0.0/0.3/0.6; 6x5 ablation table; "
           f"no-battery landing rate {landing['no-battery']:.2f} is the row minimum "
           f"(full={landing['full']:.2f})")


# --- criterion 9: optional full-scale reproduction --------------------------------------


@pytest.mark.skipif(os.environ.get("CEDA_FULL_RUN") != "1",
                    reason="full-scale training run (hours); set CEDA_FULL_RUN=1")
def test_c9_full_scale_run(tmp_path):
    cfg = default_config()  # the full 12000-episode configuration
    net, log = train(cfg, seed=0, out_dir=tmp_path)
    tail = log.rows[-1000:]

    def eta_row(row):
        spawned_weight = (3 * (row.d_w3 + row.u_w3 + row.a_w3)
                          + 2 * (row.d_w2 + row.u_w2 + row.a_w2)
                          + (row.d_w1 + row.u_w1 + row.a_w1))
        delivered_weight = 3 * row.d_w3 + 2 * row.d_w2 + row.d_w1
        return delivered_weight / spawned_weight if spawned_weight else 0.0

    eta = sum(eta_row(r) for r in tail) / len(tail)
    deliveries = sum(r.delivered for r in tail) / len(tail)
    landed = sum(r.both_landed for r in tail) / len(tail)
    ok = 0.70 <= eta <= 0.90 and deliveries >= 5.5 and landed >= 0.80
    report("criterion 9 (full-scale, optional)", ok,
           f"final-1000 eta={eta:.3f} (band 0.70-0.90), deliveries={deliveries:.2f} "
           f"(>=5.5), both-landed={landed:.2f} (>=0.80)")
