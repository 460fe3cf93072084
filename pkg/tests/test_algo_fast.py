import numpy as np
import pytest

from sskm.algo_fast import (FastConfig, detect_large_clusters, fast_budget, q1,
                            run_fast_algorithm)
from sskm.core import ClusterInstance, GroundTruth, accuracy, planted_cost, solve_1center
from sskm.errors import InvalidArgumentError
from sskm.instances import gen_gaussian, gen_random_metric
from sskm.oracle import OracleSession
from sskm.solvers import SolverConfig

CAPPED = FastConfig(q1_cap=2000, step4_cap=500)


def test_q1_examples():
    assert q1(1, 0.2, 0.1) == 64_000
    assert q1(2, 0.2, 0.1) == 8 * q1(1, 0.2, 0.1)
    assert q1(1, 0.1, 0.1) == 4 * q1(1, 0.2, 0.1)
    assert q1(3, 0.2, 0.1, cap=500) == 500


@pytest.mark.parametrize("args", [(1, 0.25, 0.1), (1, 0.0, 0.1), (1, 0.1, 1.0), (0, 0.1, 0.1)])
def test_q1_rejects_out_of_range(args):
    with pytest.raises(InvalidArgumentError):
        q1(*args)


def test_detect_large_clusters_strict_threshold():
    pts = np.arange(20, dtype=float)[:, None]
    # k=2, eps=0.2, q1=100: the threshold is 5 samples
    labels = np.r_[np.ones(6, int), np.full(4, 2)]
    large, cents = detect_large_clusters(np.arange(10), labels, pts, 2, 0.2, 100)
    assert large == [1] and cents[1][0] == pytest.approx(2.5)
    large, _ = detect_large_clusters(np.arange(5), np.ones(5, int), pts, 2, 0.2, 100)
    assert large == []
    large, cents = detect_large_clusters([3, 3, 4, 4, 4, 4], np.ones(6, int), pts, 2, 0.2, 100)
    assert large == [1] and cents[1][0] == pytest.approx((6 + 16) / 6)


def test_k1_uses_only_the_uniform_sample():
    inst, truth = gen_gaussian(1, 5000, 2, 5.0, seed=0)
    s = OracleSession(truth)
    res, rep = run_fast_algorithm(inst, s, 0.3, 0.3, CAPPED)
    assert rep.same_cluster == 0 and rep.label_queries == 2000
    assert res.cost == pytest.approx(solve_1center(inst, np.arange(inst.n))[1])


def test_fast_run_invariants():
    inst, truth = gen_gaussian(4, 5000, 2, 12.0, seed=3)
    res, rep = run_fast_algorithm(inst, OracleSession(truth), 0.6, 0.3, CAPPED, seed=3)
    st = rep.state
    labels_k = sorted(st.centers)
    c = np.vstack([st.centers[a] for a in labels_k])
    sq = ((inst.points[:, None] - c[None]) ** 2).sum(axis=2)
    col = {a: i for i, a in enumerate(labels_k)}
    own = sq[np.arange(inst.n), [col[a] for a in res.labels]]
    best = sq.min(axis=1)
    fallback = ~st.gated
    assert np.all(own[fallback] <= best[fallback])
    assert np.all(own[st.gated] <= st.threshold)
    assert np.all(own - best <= st.threshold)
    assert st.threshold == pytest.approx(4 * st.opt_star / (inst.n * 0.1 ** 3))
    assert set(st.large_labels) <= set(st.centers)
    large, cents = detect_large_clusters(st.sample_ids, st.sample_labels, inst.points, 4, 0.1, 2000)
    assert large == st.large_labels
    for a in large:
        assert np.array_equal(cents[a], st.centers[a])
    assert rep.extra["k_prime"] == len(large) >= 1
    assert accuracy(res, truth.reveal(), 4) >= 0.9


def tiny_third_cluster():
    inst, truth = gen_gaussian(3, 3000, 2, 20.0, seed=1)
    lab = truth.reveal()
    ids = np.sort(np.r_[np.flatnonzero(lab != 3), np.flatnonzero(lab == 3)[:5]])
    return ClusterInstance.euclidean(inst.points[ids], 3), GroundTruth(lab[ids], k=3)


def test_fast_completes_missing_clusters_with_a_cost():
    sub, t = tiny_third_cluster()
    small = sub.points[t.reveal() == 3]
    solver = SolverConfig(dsq_batch=200, boost_rounds=3)
    cfg = FastConfig(q1_cap=600, step4_cap=300, solver=solver)
    for seed in range(5):
        res, rep = run_fast_algorithm(sub, OracleSession(t), 0.9, 0.3, cfg, seed=seed)
        assert rep.extra["k_prime"] == 2 and len(rep.state.centers) == 3
        extra = [c for a, c in rep.state.centers.items() if a not in rep.state.large_labels][0]
        assert np.linalg.norm(extra - small.mean(axis=0)) <= np.linalg.norm(small - small.mean(axis=0), axis=1).max()
        assert accuracy(res, t.reveal(), 3) >= 1 - 0.9
    # an uncapped classifier sample covers the whole instance: exact labels
    res, _ = run_fast_algorithm(sub, OracleSession(t), 0.9, 0.3,
                                FastConfig(q1_cap=600, solver=solver), seed=0)
    assert res.cost == pytest.approx(planted_cost(sub, t))


def test_budget_does_not_depend_on_n():
    reports = []
    for n in (3000, 6000):
        inst, truth = gen_gaussian(4, n, 2, 20.0, seed=5)
        _, rep = run_fast_algorithm(inst, OracleSession(truth), 0.3, 0.3, CAPPED, seed=5)
        reports.append(rep.extra["budget"])
    assert reports[0] == reports[1] == fast_budget(4, 2, 0.3, 0.3, CAPPED)


def test_budget_at_least_n_labels_everything():
    inst, truth = gen_gaussian(3, 300, 2, 10.0, seed=2)
    s = OracleSession(truth)
    res, rep = run_fast_algorithm(inst, s, 0.3, 0.3, FastConfig(q1_cap=400))
    assert rep.label_queries == 300 and accuracy(res, truth.reveal(), 3) == 1.0


def test_fast_rejects_unsupported_inputs():
    fm, truth = gen_random_metric(30, 5, 2, seed=0)
    with pytest.raises(InvalidArgumentError):
        run_fast_algorithm(fm, OracleSession(truth), 0.3, 0.3)
    med, truth = gen_gaussian(2, 50, 2, 10.0, seed=0, power=1)
    with pytest.raises(InvalidArgumentError):
        run_fast_algorithm(med, OracleSession(truth), 0.3, 0.3)
    inst, truth = gen_gaussian(2, 5000, 2, 10.0, seed=0)
    with pytest.raises(InvalidArgumentError, match="below"):
        run_fast_algorithm(inst, OracleSession(truth), 0.3, 0.3, FastConfig(q1_cap=20))
