"""Episode runner, metrics (with an independent event-log oracle), scenario
resolution, stress/ablation plumbing, and CSV/SVG export."""

from __future__ import annotations

import numpy as np
import pytest

from conftest import open_cfg, small_cfg
from ceda.config import ConfigError
from ceda.evalkit import (ABLATION_CONDITIONS, SCENARIO_NAMES, STRESS_COLUMNS,
                          STRESS_ROWS, EpisodeRecord, NetworkPolicy, PatientFate,
                          ablation_suite, export_ablation_csv, export_episodes_csv,
                          export_stress_csv, export_trajectory_svg, jain_index,
                          load_episodes_csv, per_class_stats, run_episode,
                          run_episodes, scenario_config, stress_grid, summarize,
                          triage_efficiency, utilization)
from ceda.learner import QNetwork
from ceda.sensing import observation_length
from ceda.schedulers import make_baseline
from ceda.world import Delivered, PatientExpired, PatientSpawned


def fate(pid, spawn_level, terminal_weight, kind) -> PatientFate:
    return PatientFate(pid, spawn_level, terminal_weight, kind, 0, 10)


def record_with(patients, landed=(True, True), seed=0) -> EpisodeRecord:
    return EpisodeRecord(seed=seed, steps=10, cause="landed", landed=landed,
                         end_battery=(50.0, 60.0), collisions=0,
                         collisions_per_agent=(0, 0), rewards=(1.0, 2.0),
                         patients=patients)


# --- metrics -------------------------------------------------------------------

def test_utilization_examples():
    deliveries = [fate(i, 1, 1, "delivered") for i in range(6)]
    misses = [fate(6 + i, 1, 1, "expired") for i in range(2)]
    assert utilization(record_with(deliveries + misses)) == pytest.approx(0.75)
    assert utilization(record_with(deliveries)) == 1.0
    assert utilization(record_with(misses)) == 0.0
    assert utilization(record_with([])) is None


def test_triage_efficiency_weighted_example():
    # delivered weights {3,3,1}, spawned total weight 10 -> 0.7
    patients = [fate(0, 3, 3, "delivered"), fate(1, 3, 3, "delivered"),
                fate(2, 1, 1, "delivered"), fate(3, 2, 2, "expired"),
                fate(4, 1, 1, "active")]
    assert triage_efficiency(record_with(patients)) == pytest.approx(0.7)


def test_triage_efficiency_bounds_and_equal_weight_case():
    all_delivered = [fate(i, 2, 2, "delivered") for i in range(4)]
    assert triage_efficiency(record_with(all_delivered)) == 1.0
    none = [fate(i, 2, 2, "expired") for i in range(4)]
    assert triage_efficiency(record_with(none)) == 0.0
    # equal weights: eta collapses to utilization
    mixed = [fate(0, 2, 2, "delivered"), fate(1, 2, 2, "expired"),
             fate(2, 2, 2, "delivered"), fate(3, 2, 2, "active")]
    rec = record_with(mixed)
    assert triage_efficiency(rec) == pytest.approx(utilization(rec))


def test_per_class_rate_can_exceed_one_via_escalation():
    # three delivered at terminal weight 3, but only two spawned critical
    patients = [fate(0, 2, 3, "delivered"), fate(1, 3, 3, "delivered"),
                fate(2, 3, 3, "delivered")]
    stats = per_class_stats([record_with(patients)])
    assert stats[3].delivery_rate == pytest.approx(1.5)
    assert stats[3].mean_delivered == 3.0
    assert stats[2].mean_expired == 0.0


def test_per_class_conservation_per_episode():
    policy = make_baseline("smart-edf")
    for seed in range(5):
        rec = run_episode(policy, small_cfg(), seed)
        d = rec.class_counts("delivered")
        u = rec.class_counts("expired")
        act = rec.class_counts("active")
        assert sum(d) + sum(u) + sum(act) == len(rec.patients)


def test_jain_examples():
    assert jain_index([5, 5, 5]) == pytest.approx(1.0)
    assert jain_index([1, 0, 0]) == pytest.approx(1 / 3)
    assert jain_index([1, 2, 3]) == pytest.approx(0.8571428571428571)
    assert jain_index([0, 0]) is None
    with pytest.raises(ValueError):
        jain_index([])
    with pytest.raises(ValueError):
        jain_index([-1, 2])


# --- episode runner -------------------------------------------------------------

def easy_cfg():
    return open_cfg(**{"world.grid": "8x8", "triage.max_patients": "2",
                       "triage.n_init": "2", "triage.t_max": "100",
                       "world.max_steps": "150"})


def test_successful_episode_bookkeeping():
    rec = run_episode(make_baseline("smart-edf"), easy_cfg(), seed=3)
    assert rec.expired_count() == 0
    assert rec.delivered_count() == 2
    assert rec.landed == (True, True)
    assert rec.cause == "landed"
    assert utilization(rec) == 1.0


def test_run_episode_deterministic():
    policy = make_baseline("smart-nnpw")
    a = run_episode(policy, small_cfg(), seed=11)
    b = run_episode(policy, small_cfg(), seed=11)
    assert a == b


def test_baselines_and_networks_share_the_interface():
    cfg = small_cfg()
    net = QNetwork([2 * observation_length(cfg.triage.max_patients), 8, 5],
                   np.random.default_rng(0))
    for policy in (make_baseline("naive-nnpw"), NetworkPolicy(net)):
        rec = run_episode(policy, cfg, seed=2)
        assert rec.steps > 0


def test_network_policy_rejects_mismatched_checkpoint():
    cfg = small_cfg()  # max_patients=4 -> joint input 224
    net = QNetwork([280, 8, 5], np.random.default_rng(0))
    with pytest.raises(ConfigError, match="checkpoint"):
        run_episode(NetworkPolicy(net), cfg, seed=0)


def test_run_episodes_worker_count_does_not_change_results():
    cfg = small_cfg()
    policy = make_baseline("smart-edf")
    serial = run_episodes(policy, cfg, range(4), workers=1)
    parallel = run_episodes(policy, cfg, range(4), workers=2)
    assert serial == parallel


# --- metric oracle over the raw event log -----------------------------------------

def oracle_metrics_from_events(events):
    """Independent brute-force recomputation of U and eta from the raw log."""
    spawned = {}
    terminal = {}
    delivered = set()
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
    eta = sum(terminal[p] for p in delivered) / sum(terminal[p] for p in spawned)
    return u, eta


def test_metrics_match_event_log_oracle():
    cfg = small_cfg(**{"world.max_steps": "80"})
    policy = make_baseline("smart-nnpw")
    for seed in range(20):
        rec = run_episode(policy, cfg, seed, keep_events=True)
        u_oracle, eta_oracle = oracle_metrics_from_events(rec.events)
        assert utilization(rec) == u_oracle
        assert triage_efficiency(rec) == eta_oracle


# --- scenarios ---------------------------------------------------------------------

def test_scenario_names_and_overrides():
    base = small_cfg()
    assert set(SCENARIO_NAMES) == {"baseline", "high-network-stress", "fast-decay",
                                   "sparse-patients", "dense-patients", "low-disruption"}
    assert scenario_config("baseline", base) == base
    assert scenario_config("high-network-stress", base).hazards.lowsig_fail_prob == 0.6
    fast = scenario_config("fast-decay", base)
    assert fast.triage.decay_scale == 2.0
    assert fast.triage.spawn_interval == base.triage.spawn_interval // 2
    sparse = scenario_config("sparse-patients", base)
    assert sparse.triage.max_patients == base.triage.max_patients  # slots unchanged
    assert sparse.triage.spawn_interval > base.world.max_steps
    dense = scenario_config("dense-patients", base)
    assert dense.triage.max_patients == 12
    low = scenario_config("low-disruption", base)
    assert low.hazards.wind_zone_count == 0 and low.hazards.lowsig_fail_prob == 0.0
    with pytest.raises(ConfigError):
        scenario_config("no-such-scenario", base)


def test_sparse_scenario_keeps_checkpoint_compatible():
    cfg = scenario_config("sparse-patients", small_cfg())
    net = QNetwork([2 * observation_length(cfg.triage.max_patients), 8, 5],
                   np.random.default_rng(1))
    rec = run_episode(NetworkPolicy(net), cfg, seed=0)
    assert len(rec.patients) <= cfg.triage.n_init


def test_dense_scenario_requires_matching_checkpoint():
    cfg = scenario_config("dense-patients", small_cfg())
    wrong = QNetwork([2 * observation_length(4), 8, 5], np.random.default_rng(1))
    with pytest.raises(ConfigError):
        run_episode(NetworkPolicy(wrong), cfg, seed=0)
    right = QNetwork([2 * observation_length(12), 8, 5], np.random.default_rng(1))
    assert run_episode(NetworkPolicy(right), cfg, seed=0).steps > 0


# --- stress grid and ablation -------------------------------------------------------

def tiny_net(cfg):
    return QNetwork([2 * observation_length(cfg.triage.max_patients), 8, 5],
                    np.random.default_rng(7))


def test_stress_grid_shape_and_columns():
    cfg = small_cfg(**{"world.max_steps": "40"})
    grid = stress_grid(NetworkPolicy(tiny_net(cfg)), cfg, n_episodes=2)
    assert len(grid) == 9
    assert {col for _, col in grid} == set(STRESS_COLUMNS) == {0.0, 0.3, 0.6}
    assert {row for row, _ in grid} == set(STRESS_ROWS)
    for cell in grid.values():
        assert 0.0 <= cell.eta <= 1.0
        assert 0.0 <= cell.both_landed_rate <= 1.0


def test_stress_grid_rejects_zero_episodes():
    cfg = small_cfg()
    with pytest.raises(ValueError):
        stress_grid(NetworkPolicy(tiny_net(cfg)), cfg, n_episodes=0)


def test_ablation_six_rows_five_metrics():
    cfg = small_cfg(**{"world.max_steps": "40"})
    table = ablation_suite(tiny_net(cfg), cfg, n_episodes=2)
    assert list(table) == ["full", "no-network", "no-wind-physical", "no-battery",
                           "no-triage-weights", "no-patient-timers"]
    for metrics in table.values():
        assert list(metrics) == ["eta", "both_landed_rate", "deliveries",
                                 "end_battery", "w3_expiries"]
    assert ABLATION_CONDITIONS["full"].is_identity


# --- exports ----------------------------------------------------------------------

def test_episode_csv_round_trip_lossless(tmp_path):
    cfg = small_cfg()
    records = [run_episode(make_baseline("smart-edf"), cfg, s) for s in range(3)]
    path = tmp_path / "episodes.csv"
    export_episodes_csv(records, path)
    rows = load_episodes_csv(path)
    assert len(rows) == 3
    for rec, row in zip(records, rows):
        assert row["seed"] == rec.seed
        assert row["steps"] == rec.steps
        assert row["reward0"] == rec.rewards[0]   # exact float round-trip
        assert row["reward1"] == rec.rewards[1]
        assert row["battery0"] == rec.end_battery[0]
        assert row["U"] == utilization(rec)
        assert row["eta"] == triage_efficiency(rec)
        assert row["d_w3"] == rec.class_counts("delivered")[2]


def test_empty_record_list_exports_header_only(tmp_path):
    path = tmp_path / "empty.csv"
    export_episodes_csv([], path)
    lines = path.read_text().strip().splitlines()
    assert len(lines) == 1
    assert lines[0].startswith("seed,steps,reward0")
    assert load_episodes_csv(path) == []


def test_stress_and_ablation_csv_labels(tmp_path):
    cfg = small_cfg(**{"world.max_steps": "30"})
    grid = stress_grid(NetworkPolicy(tiny_net(cfg)), cfg, n_episodes=1)
    export_stress_csv(grid, tmp_path / "grid.csv")
    lines = (tmp_path / "grid.csv").read_text().strip().splitlines()
    assert len(lines) == 10
    assert lines[1].startswith("light,0.0,")

    table = ablation_suite(tiny_net(cfg), cfg, n_episodes=1)
    export_ablation_csv(table, tmp_path / "ablation.csv")
    lines = (tmp_path / "ablation.csv").read_text().strip().splitlines()
    assert len(lines) == 7
    assert lines[1].startswith("full,")


def test_trajectory_svg_structure(tmp_path):
    cfg = small_cfg()
    rec = run_episode(make_baseline("smart-edf"), cfg, seed=3, record_trace=True)
    path = tmp_path / "tour.svg"
    export_trajectory_svg(rec, path)
    text = path.read_text()
    assert text.startswith("<svg")
    assert text.rstrip().endswith("</svg>")
    assert text.count("<polyline") == 2   # one per agent
    if rec.delivered_count():
        assert "gold" in text
    assert "http://" not in text.replace("http://www.w3.org/2000/svg", "")


def test_trace_required_for_svg(tmp_path):
    rec = run_episode(make_baseline("smart-edf"), small_cfg(), seed=1)
    with pytest.raises(ValueError):
        export_trajectory_svg(rec, tmp_path / "x.svg")
