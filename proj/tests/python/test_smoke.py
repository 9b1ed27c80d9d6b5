"""End-to-end smoke tests for the pyvfedsim module."""

import json

import pytest

import pyvfedsim as pv


def test_emd_uniform_and_skewed():
    assert pv.compute_emd([5, 5, 5, 5]) == 0.0
    # all mass on one of four classes sits at the bound 2(1 - 1/4)
    assert pv.compute_emd([12, 0, 0, 0]) == pytest.approx(1.5, abs=1e-12)
    assert pv.compute_emd_ref([3, 1], [0.75, 0.25]) == 0.0
    with pytest.raises(ValueError):
        pv.compute_emd([0, 0, 0])


def test_kappa_policy_sums_to_one():
    assert pv.compute_kappa([0.0, 0.0]) == (1.0, 0.0)
    k1, k2 = pv.compute_kappa([1.0])
    assert k1 + k2 == 1.0
    assert k2 == pytest.approx(0.25, rel=1e-12)  # (emd/2)^2


def test_aggregate_mixes_local_and_augmented():
    out = pv.aggregate(
        locals=[[1.0, 2.0], [3.0, 4.0]],
        augmented=[10.0, 10.0],
        kappa1=0.75,
        kappa2=0.25,
        rho=[0.5, 0.5],
    )
    assert out == pytest.approx([0.75 * 2.0 + 2.5, 0.75 * 3.0 + 2.5], rel=1e-12)


def test_bound_known_value_and_premise():
    got = pv.evaluate_bound(
        4.0, 2.0, 1.0, 0.25, 5, 50, [0.3, 0.5], [0.2, 0.4], 0.2, 0.75, 0.25,
        [0.5, 0.5], 1.0,
    )
    assert got == pytest.approx(6.8255722178374113, rel=1e-12)
    with pytest.raises(ValueError):  # eta >= 1/varrho breaks the premise
        pv.evaluate_bound(
            4.0, 2.0, 1.0, 0.5, 5, 50, [0.3], [0.2], 0.2, 0.75, 0.25, [1.0], 1.0
        )


def test_generation_budget_floor_rule():
    assert pv.generation_budget(3.0, 1.0, 0.04) == 50
    assert pv.generation_budget(2.5, 0.5, 0.25) == 8
    assert pv.generation_budget(1.0, 2.0, 0.1) == 0


def test_stationary_share_closed_form():
    # sqrt((l1*B + l2*D) / l3) = sqrt((0.5*2 + 0) / 4) = 0.5
    assert pv.stationary_share(0.5, 2.0, 0.0, 1.0, 4.0) == pytest.approx(0.5)


def test_dirichlet_partition_conserves_samples():
    labels = [i % 4 for i in range(400)]
    counts = pv.dirichlet_partition(labels, classes=4, shards=8, alpha=0.5, seed=42)
    assert len(counts) == 8
    assert sum(sum(row) for row in counts) == 400
    assert [sum(row[c] for row in counts) for c in range(4)] == [100] * 4
    # same seed, same partition
    assert counts == pv.dirichlet_partition(labels, 4, 8, 0.5, 42)


def test_mobility_helpers():
    v = pv.mean_speed_kmh(120.0, 60.0, max_vehicles=20, count=10)
    assert 60.0 <= v <= 120.0
    # congestion slows the fleet down
    assert pv.mean_speed_kmh(120.0, 60.0, 20, 20) <= v
    # halving the speed doubles the remaining dwell time
    slow = pv.holding_time_s(500.0, 300.0, position_m=-100.0, speed_mps=10.0)
    fast = pv.holding_time_s(500.0, 300.0, position_m=-100.0, speed_mps=20.0)
    assert slow == pytest.approx(2.0 * fast, rel=1e-12)


def test_allocate_instance_roundtrip():
    inst = {
        "schema_version": 1,
        "subcarriers": 2,
        "energy_cap_j": 20.0,
        "vehicles": [
            {"id": 1, "compute_time_s": 0.3, "compute_energy_j": 0.4,
             "gain_over_noise_per_w": 200.0},
            {"id": 2, "compute_time_s": 0.2, "compute_energy_j": 0.3,
             "gain_over_noise_per_w": 120.0},
            {"id": 3, "compute_time_s": 0.4, "compute_energy_j": 0.5,
             "gain_over_noise_per_w": 80.0},
        ],
    }
    d = json.loads(pv.allocate(json.dumps(inst)))
    assert d["feasible"] and d["converged"]
    assert d["vehicle_ids"] == [1, 2, 3]
    assert sum(d["share"]) <= 2.0 + 1e-9
    assert all(0.05 - 1e-12 <= s <= 1.0 + 1e-12 for s in d["share"])
    assert d["t_bar_s"] == pytest.approx(max(d["latency_s"]), rel=1e-9)
    assert d["images"] >= 0
    # makespan trace never rises between sweeps
    t = [tr["t_bar_s"] for tr in d["trace"]]
    assert all(b <= a + 1e-9 for a, b in zip(t, t[1:]))


def test_allocate_reports_and_raises_infeasibility():
    # a cap below the compute energy is reported, not thrown: the solver
    # returns the diagnosis so a caller can skip the round
    inst = {
        "schema_version": 1,
        "energy_cap_j": 0.1,
        "vehicles": [{"id": 1, "compute_time_s": 0.3, "compute_energy_j": 0.4,
                      "gain_over_noise_per_w": 200.0}],
    }
    d = json.loads(pv.allocate(json.dumps(inst)))
    assert not d["feasible"]
    assert "cap" in d["infeasible_reason"]

    # share floors that cannot fit the subcarrier budget fail up front
    inst2 = {
        "schema_version": 1,
        "subcarriers": 2,
        "l_min": 0.8,
        "vehicles": [
            {"id": i, "compute_time_s": 0.3, "compute_energy_j": 0.4,
             "gain_over_noise_per_w": 200.0} for i in (1, 2, 3)
        ],
    }
    with pytest.raises(pv.InfeasibleError):
        pv.allocate(json.dumps(inst2))


def test_config_errors_name_the_field():
    with pytest.raises(pv.ConfigError):
        pv.simulate("{}")  # schema_version missing


SIM_CONFIG = {
    "schema_version": 1,
    "seed": 5,
    "mode": "augmented",
    "rounds": 3,
    "road": {"t_max_s": 3.0, "initial_vehicles": 6, "arrival_rate": 1.0},
    "selection": {"emd_threshold": 2.0},
    "task": {"classes": 6, "feature_dim": 8, "train_samples": 600,
             "test_samples": 200, "alpha": 0.5, "partitions": 12},
    "bound": {"enabled": False},
}


def test_simulate_runs_and_is_thread_invariant():
    summary1, csv1 = pv.simulate(json.dumps(SIM_CONFIG), threads=1)
    summary2, csv2 = pv.simulate(json.dumps(SIM_CONFIG), threads=3)
    assert csv1 == csv2
    assert summary1 == summary2
    s = json.loads(summary1)
    assert s["rounds"] == 3
    assert s["mode"] == "augmented"
    assert s["mean_t_bar_s"] > 0.0
    assert csv1.count("\n") == 4  # header + one row per round
