import numpy as np
import pytest

from sskm.core import ClusterInstance, save_instance
from sskm.errors import InvalidArgumentError
from sskm.harness import (COLUMNS, estimate_sample_mean, generate, read_csv, reference_cost,
                          rows_to_csv, run_experiment, write_csv)
from sskm.instances import brute_force_optimum, gen_gaussian

BLOBS = {"family": "gaussian", "params": {"k": 4, "n": 2000, "r": 2, "separation": 20.0}}


def test_baseline_with_k_equal_n_has_unit_ratio(tmp_path):
    pts = np.random.default_rng(0).normal(size=(7, 2))
    path = tmp_path / "inst.json"
    save_instance(path, ClusterInstance.euclidean(pts, 7))
    rows = run_experiment({"instance": str(path), "algo": "baseline", "seeds": [0, 1]})
    assert [r["cost_ratio"] for r in rows] == [1.0, 1.0]
    assert all(r["status"] == "ok" and r["accuracy"] == "" for r in rows)


def test_ring_on_four_blobs():
    rows = run_experiment({"generator": BLOBS, "algo": "ring", "epsilon": 0.2, "delta": 0.2,
                           "seeds": list(range(20)), "settings": {"sample_cap": 100}})
    assert len(rows) == 20
    assert sum(r["accuracy"] >= 0.8 for r in rows) >= 18


def test_csv_is_byte_identical_across_runs(tmp_path):
    cfg = {"generator": {"family": "gaussian", "params": {"k": 3, "n": 300, "seed": 4}},
           "algo": ["ring", "fast", "baseline"], "epsilon": 0.2, "delta": 0.2,
           "seeds": [0, 1, 2], "settings": {"sample_cap": 200}}
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_csv(run_experiment(cfg), a)
    write_csv(run_experiment(cfg), b)
    assert a.read_bytes() == b.read_bytes()
    text = a.read_text().splitlines()
    assert text[0].startswith("#") and text[1] == ",".join(COLUMNS)
    rows = read_csv(a)
    assert [(r["seed"], r["algo"]) for r in rows[:3]] == [("0", "ring"), ("0", "fast"), ("0", "baseline")]


def test_parallel_rows_match_sequential():
    cfg = {"generator": {"family": "gaussian", "params": {"k": 3, "n": 200}},
           "algo": ["ring", "baseline"], "seeds": [0, 1, 2], "settings": {"sample_cap": 50}}
    seq = rows_to_csv(run_experiment(cfg))
    cfg["settings"] = {"sample_cap": 50, "workers": 2}
    assert rows_to_csv(run_experiment(cfg)) == seq


@pytest.mark.parametrize("family,params", [
    ("hypercube", {"r": 3}), ("fms-subsets", {"r": 2}),
    ("gaussian", {"k": 3, "n": 12, "separation": 2.0, "seed": 5}),
    ("random-metric", {"n": 10, "m": 6, "k": 3, "seed": 1}),
])
def test_ratio_against_true_optimum_is_at_least_one(family, params):
    rows = run_experiment({"generator": {"family": family, "params": params},
                           "algo": ["ring", "baseline"], "seeds": list(range(5)),
                           "settings": {"sample_cap": 20}})
    ok = [r for r in rows if r["status"] == "ok"]
    assert ok and all(r["cost_ratio"] >= 1 - 1e-9 for r in ok)


def test_reference_cost_is_exact_for_small_instances():
    inst, truth = gen_gaussian(3, 10, 2, 3.0, seed=1)
    assert reference_cost(inst, truth) == brute_force_optimum(inst)


def test_algorithm_errors_become_row_status():
    rows = run_experiment({"generator": {"family": "gaussian", "params": {"k": 2, "n": 5000}},
                           "algo": ["fast", "baseline"], "epsilon": 0.3, "delta": 0.3,
                           "settings": {"q1_cap": 20}})
    assert rows[0]["status"].startswith("InvalidArgumentError") and rows[0]["cost"] == ""
    assert rows[1]["status"] == "ok"


@pytest.mark.parametrize("cfg", [
    {"generator": BLOBS, "algo": "kmeans"},
    {"generator": BLOBS, "settings": {"bogus": 1}},
    {"generator": BLOBS, "settings": {"sample_cap": -3}},
    {"generator": BLOBS, "settings": {"timing": 1}},
    {"generator": BLOBS, "epsilon": 1.5},
    {"generator": {"family": "nope"}},
    {"algo": "ring"},
])
def test_invalid_configs(cfg):
    with pytest.raises(InvalidArgumentError):
        run_experiment(cfg)


def test_timing_fills_runtime_column():
    rows = run_experiment({"generator": {"family": "hypercube", "params": {"r": 2}},
                           "settings": {"timing": True}})
    assert rows[0]["runtime_ms"] >= 0


def test_generate_wraps_bad_parameters():
    with pytest.raises(InvalidArgumentError):
        generate("gaussian", {"k": "four"})


# -- sample-mean check -----------------------------------------------------------


def test_sample_mean_examples():
    assert estimate_sample_mean(0.2, 0.2, 200, np.full(50, 3.0))["rate"] == 0.0
    line = estimate_sample_mean(0.2, 0.2, 1000, np.linspace(0, 1, 1000))
    assert line["m"] == 25 and line["passed"] and line["rate"] <= 0.2 + 3 * np.sqrt(0.2 / 1000)
    small = estimate_sample_mean(0.05, 0.05, 1000, np.linspace(0, 1, 1000), m=2)
    assert small["rate"] > 0.5 and not small["passed"]


def test_sample_mean_multidimensional_and_validation():
    pts = np.random.default_rng(0).normal(size=(300, 3))
    assert estimate_sample_mean(0.3, 0.3, 300, pts)["passed"]
    with pytest.raises(InvalidArgumentError):
        estimate_sample_mean(0.2, 0.2, 99, pts)
    with pytest.raises(InvalidArgumentError):
        estimate_sample_mean(0.0, 0.2, 100, pts)
