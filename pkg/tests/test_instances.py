import itertools

import numpy as np
import pytest

from sskm.core import ClusterInstance, assign_nearest
from sskm.errors import InvalidArgumentError, ResourceLimitError
from sskm.instances import (brute_force_optimum, count_subset_centroids, gen_fms_from_subsets,
                            gen_gaussian, gen_hypercube_lb, gen_large_small, gen_random_metric,
                            hypercube_cost_formula, hypercube_direct_cost,
                            hypercube_points, subset_centroids, verify_hypercube_optima)


def all_subset_centroids(r):
    """Brute-force oracle: centroid of every non-empty subset, deduplicated."""
    pts = hypercube_points(r)
    out = [pts[list(s)].mean(axis=0)
           for size in range(1, 2 * r + 1) for s in itertools.combinations(range(2 * r), size)]
    return np.unique(np.round(np.vstack(out), 12), axis=0)


# -- Gaussian blobs -------------------------------------------------------------


def test_gaussian_k1_and_determinism():
    inst, truth = gen_gaussian(1, 50, 3, 5.0, seed=2)
    assert set(truth.reveal().tolist()) == {1}
    a, ta = gen_gaussian(4, 200, 2, 20.0, seed=11)
    b, tb = gen_gaussian(4, 200, 2, 20.0, seed=11)
    assert a.points.tobytes() == b.points.tobytes()
    assert ta.reveal().tobytes() == tb.reveal().tobytes()


def test_gaussian_sizes_balanced_and_boundary_free():
    inst, truth = gen_gaussian(3, 100, 2, 4.0, seed=0)
    assert sorted(np.bincount(truth.reveal())[1:].tolist()) == [33, 33, 34]
    assert truth.validate_no_boundary(inst)


def test_planted_labels_equal_nearest_planted_center():
    agree = 0
    for seed in range(20):
        inst, truth = gen_gaussian(4, 400, 2, 20.0, seed=seed)
        lab = truth.reveal()
        centers = np.vstack([inst.points[lab == a].mean(axis=0) for a in range(1, 5)])
        agree += np.array_equal(assign_nearest(inst, centers).labels, lab)
    assert agree >= 19


def test_gaussian_rejects_bad_arguments():
    with pytest.raises(InvalidArgumentError):
        gen_gaussian(5, 4, 2, 1.0)
    with pytest.raises(InvalidArgumentError):
        gen_gaussian(2, 4, 2, 0.0)


def test_other_generators_are_boundary_free():
    for seed in range(3):
        inst, truth = gen_random_metric(50, 10, 3, seed=seed)
        assert truth.validate_no_boundary(inst) and inst.n_candidates == 10
        inst, truth = gen_large_small(seed=seed)
        assert truth.validate_no_boundary(inst) and np.bincount(truth.reveal())[2] == 10


# -- hypercube family -----------------------------------------------------------


def test_hypercube_instance():
    inst, truth = gen_hypercube_lb(1)
    assert inst.points[:, 0].tolist() == [-1.0, 1.0]
    assert truth.reveal().tolist() == [2, 1]
    inst, truth = gen_hypercube_lb(3)
    lab = truth.reveal()
    assert np.all(inst.points[lab == 1].sum(axis=1) == 1)
    assert np.all(inst.points[lab == 2].sum(axis=1) == -1)


@pytest.mark.parametrize("r,cost,unordered", [(1, 0.0, 1), (2, 2.0, 2), (3, 4.0, 4), (4, 6.0, 8)])
def test_hypercube_optima(r, cost, unordered):
    rep = verify_hypercube_optima(r)
    assert rep["min_cost"] == pytest.approx(cost, abs=1e-9)
    assert rep["all_split"] and rep["passed"]
    assert rep["optimal_unordered"] == unordered and rep["optimal_labeled"] == 2 * unordered
    assert rep["bipartitions"] == 2 ** (2 * r - 1)


def test_hypercube_optimum_matches_generic_brute_force():
    for r in (1, 2, 3):
        inst, _ = gen_hypercube_lb(r)
        assert brute_force_optimum(inst) == pytest.approx(verify_hypercube_optima(r)["min_cost"], abs=1e-9)


def test_verify_rejects_large_r():
    with pytest.raises(InvalidArgumentError):
        verify_hypercube_optima(9)


def test_cost_formula_matches_direct_evaluation():
    for r in range(1, 7):
        for r0 in range(r + 1):
            for r1 in range(r + 1 - r0):
                r2 = r - r0 - r1
                assert hypercube_cost_formula(r0, r1, r2) == pytest.approx(
                    hypercube_direct_cost(r0, r1, r2), abs=1e-9)


# -- subset-centroid finite metric ----------------------------------------------------


@pytest.mark.parametrize("r", [1, 2, 3, 4, 5])
def test_subset_centroids_match_brute_force(r):
    fast = np.unique(np.round(subset_centroids(r), 12), axis=0)
    assert len(subset_centroids(r)) == len(fast) == count_subset_centroids(r)
    assert np.array_equal(fast, all_subset_centroids(r))


def test_fms_from_subsets():
    inst, truth = gen_fms_from_subsets(1)
    assert inst.n == 2 and inst.n_candidates == 3
    q = inst.dist[:2, 2:]
    assert sorted(q[0].tolist()) == [0.0, 1.0, 2.0]
    inst, _ = gen_fms_from_subsets(3)
    assert np.array_equal(inst.dist, inst.dist.T) and np.all(np.diag(inst.dist) == 0)
    # the origin (centroid of all points) is a candidate: all points at distance 1
    assert np.any(np.all(np.isclose(inst.point_candidate_dist, 1.0), axis=0))
    assert truth.k == 2


def test_fms_optimum_equals_euclidean_optimum():
    for r in (1, 2, 3):
        inst, _ = gen_fms_from_subsets(r)
        assert brute_force_optimum(inst) == pytest.approx(verify_hypercube_optima(r)["min_cost"], abs=1e-9)


def test_fms_resource_limit():
    with pytest.raises(ResourceLimitError):
        gen_fms_from_subsets(7)
    with pytest.raises(ResourceLimitError):
        gen_fms_from_subsets(13, max_entries=10 ** 30)


# -- brute force -------------------------------------------------------------------


def test_brute_force_small_cases():
    inst = ClusterInstance.euclidean([[0.0], [1.0], [10.0], [11.0]], 2)
    assert brute_force_optimum(inst) == pytest.approx(1.0)
    with pytest.raises(InvalidArgumentError):
        brute_force_optimum(ClusterInstance.euclidean([[0.0], [1.0]], 1, power=1))
    with pytest.raises(ResourceLimitError):
        brute_force_optimum(ClusterInstance.euclidean(np.zeros((30, 1)), 3))
