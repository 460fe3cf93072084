"""Instance generators and brute-force verifiers for small instances."""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .core import (ClusterInstance, GroundTruth, boundary_violations, centers_for_labels,
                   clustering_from_labels)
from .errors import GenerationError, InvalidArgumentError, ResourceLimitError

MAX_RETRIES = 100
MAX_MATRIX_ENTRIES = 25_000_000


def _blob_centers(k: int, r: int, separation: float, rng: np.random.Generator) -> np.ndarray:
    side = separation * max(2.0, 2.0 * k ** (1.0 / r))
    for _ in range(50):
        centers = []
        for _ in range(10_000):
            c = rng.uniform(0.0, side, size=r)
            if all(np.linalg.norm(c - o) >= separation for o in centers):
                centers.append(c)
                if len(centers) == k:
                    return np.vstack(centers)
        side *= 1.5
    raise GenerationError("could not place blob centers at the requested separation")


def gen_gaussian(k: int, n: int, r: int, separation: float, seed: int = 0,
                 power: int = 2) -> tuple[ClusterInstance, GroundTruth]:
    """k unit-variance spherical blobs with centers at least ``separation`` apart.

    Points whose nearest derived center is not their own (or is tied) are
    redrawn from their blob, at most ``MAX_RETRIES`` times.
    """
    if not 1 <= k <= n:
        raise InvalidArgumentError("need 1 <= k <= n")
    if separation <= 0 or r < 1:
        raise InvalidArgumentError("need separation > 0 and r >= 1")
    rng = np.random.default_rng(seed)
    centers = _blob_centers(k, r, separation, rng)
    sizes = [n // k + (i < n % k) for i in range(k)]
    labels = np.repeat(np.arange(1, k + 1), sizes)
    labels = labels[rng.permutation(n)]
    points = centers[labels - 1] + rng.normal(size=(n, r))
    for _ in range(MAX_RETRIES):
        inst = ClusterInstance.euclidean(points, k, power)
        bad = boundary_violations(inst, labels, k)
        if bad.size == 0:
            return inst, GroundTruth(labels, k=k)
        points = points.copy()
        points[bad] = centers[labels[bad] - 1] + rng.normal(size=(bad.size, r))
    raise GenerationError(f"boundary points remain after {MAX_RETRIES} resampling rounds")


def gen_large_small(n_large: int = 1000, n_small: int = 10, distance: float = 30.0,
                    r: int = 2, seed: int = 0, small_scale: float = 0.5
                    ) -> tuple[ClusterInstance, GroundTruth]:
    """One unit-variance blob at the origin (label 1) and a small tight blob
    ``distance`` away in a random direction (label 2)."""
    if n_large < 1 or n_small < 1 or distance <= 0:
        raise InvalidArgumentError("need positive cluster sizes and distance")
    rng = np.random.default_rng(seed)
    direction = rng.normal(size=r)
    direction /= np.linalg.norm(direction)
    centers = np.vstack([np.zeros(r), distance * direction])
    scales = np.array([1.0, small_scale])
    labels = np.concatenate([np.ones(n_large, dtype=np.int64), np.full(n_small, 2)])
    labels = labels[rng.permutation(labels.size)]
    points = centers[labels - 1] + scales[labels - 1, None] * rng.normal(size=(labels.size, r))
    for _ in range(MAX_RETRIES):
        inst = ClusterInstance.euclidean(points, 2)
        bad = boundary_violations(inst, labels, 2)
        if bad.size == 0:
            return inst, GroundTruth(labels, k=2)
        points = points.copy()
        points[bad] = centers[labels[bad] - 1] + scales[labels[bad] - 1, None] * rng.normal(
            size=(bad.size, r))
    raise GenerationError(f"boundary points remain after {MAX_RETRIES} resampling rounds")


def gen_random_metric(n: int, m: int, k: int, seed: int = 0, r: int = 2,
                      power: int = 2) -> tuple[ClusterInstance, GroundTruth]:
    """Finite metric from random planar points; truth = nearest of k candidates.

    Points that are tied or not strictly nearest to their derived center are
    moved, at most ``MAX_RETRIES`` times.
    """
    if not (1 <= k <= n and k <= m):
        raise InvalidArgumentError("need 1 <= k <= n and k <= m")
    rng = np.random.default_rng(seed)
    cand = rng.uniform(0.0, 10.0, size=(m, r))
    chosen = rng.choice(m, size=k, replace=False)
    pts = rng.uniform(0.0, 10.0, size=(n, r))
    for _ in range(MAX_RETRIES):
        d = np.linalg.norm(pts[:, None, :] - cand[None, chosen, :], axis=2)
        labels = np.argmin(d, axis=1) + 1
        # every label needs at least one point; plant one next to its center
        for i in range(k):
            if not np.any(labels == i + 1):
                j = int(rng.integers(n))
                pts[j] = cand[chosen[i]] + rng.normal(scale=1e-3, size=r)
        d = np.linalg.norm(pts[:, None, :] - cand[None, chosen, :], axis=2)
        labels = np.argmin(d, axis=1) + 1
        if len(np.unique(labels)) < k:
            continue
        dist = squareform(pdist(np.vstack([pts, cand])))
        inst = ClusterInstance.finite_metric(dist, n, k, power)
        # derived centers may differ from the chosen ones; a few Lloyd
        # steps over the candidates usually settle the labels
        for _ in range(10):
            bad = boundary_violations(inst, labels, k)
            if bad.size == 0:
                return inst, GroundTruth(labels, k=k)
            step = np.argmin(inst.distances(centers_for_labels(inst, labels, k)), axis=1) + 1
            if len(np.unique(step)) < k or np.array_equal(step, labels):
                break
            labels = step
        pts = pts.copy()
        pts[bad] = cand[chosen[labels[bad] - 1]] + rng.normal(scale=0.5, size=(bad.size, r))
    raise GenerationError("could not build a boundary-free random metric instance")


def hypercube_points(r: int) -> np.ndarray:
    """Rows -e_1, e_1, -e_2, e_2, ..., -e_r, e_r."""
    eye = np.eye(r)
    return np.stack([-eye, eye], axis=1).reshape(2 * r, r)


def gen_hypercube_lb(r: int) -> tuple[ClusterInstance, GroundTruth]:
    """2-means instance on the 2r signed unit vectors; truth {+e_i} vs {-e_i}."""
    if r < 1:
        raise InvalidArgumentError("r must be >= 1")
    pts = hypercube_points(r)
    labels = np.tile([2, 1], r)
    return ClusterInstance.euclidean(pts, 2), GroundTruth(labels, k=2)


def subset_centroids(r: int) -> np.ndarray:
    """Distinct centroids of the non-empty subsets of the hypercube points.

    A subset picking sign pattern s (one of +e_i / -e_i on the nonzero axes)
    plus b axes taken whole has centroid s / (nnz(s) + 2b); distinct
    (s, size) pairs give distinct vectors except s = 0, which is the origin.
    """
    out = [np.zeros(r)]
    for signs in itertools.product((-1, 0, 1), repeat=r):
        s = np.asarray(signs, dtype=float)
        t = int(np.count_nonzero(s))
        if t == 0:
            continue
        for b in range(r - t + 1):
            out.append(s / (t + 2 * b))
    return np.vstack(out)


def count_subset_centroids(r: int) -> int:
    return 1 + sum(math.comb(r, t) * 2 ** t * (r - t + 1) for t in range(1, r + 1))


def gen_fms_from_subsets(r: int, max_entries: int = MAX_MATRIX_ENTRIES
                         ) -> tuple[ClusterInstance, GroundTruth]:
    """Finite-metric version of the hypercube instance with Q = all subset centroids."""
    if r < 1:
        raise InvalidArgumentError("r must be >= 1")
    size = 2 * r + count_subset_centroids(r)
    if r > 12 or size * size > max_entries:
        raise ResourceLimitError(
            f"r={r} needs a {size}x{size} distance matrix (limit {max_entries} entries)")
    pts = hypercube_points(r)
    q = subset_centroids(r)
    dist = squareform(pdist(np.vstack([pts, q])))
    _, truth = gen_hypercube_lb(r)
    return ClusterInstance.finite_metric(dist, 2 * r, 2), truth


def verify_hypercube_optima(r: int) -> dict:
    """Enumerate every bipartition of the hypercube points (centroid centers).

    Point 0 is pinned to the first side, so each unordered bipartition is
    seen once. Reports the minimum cost and whether every minimizer puts
    e_i and -e_i on opposite sides for all i.
    """
    if not 1 <= r <= 8:
        raise InvalidArgumentError("r must lie in 1..8")
    pts = hypercube_points(r)
    npts = 2 * r
    codes = np.arange(2 ** (npts - 1), dtype=np.int64)
    bits = ((codes[:, None] >> np.arange(npts - 1)) & 1).astype(bool)
    side_a = np.hstack([np.ones((codes.size, 1), dtype=bool), bits])
    costs = _bipartition_costs(pts, side_a)
    best = float(costs.min())
    optimal = side_a[np.isclose(costs, best, rtol=0, atol=1e-9)]
    split = optimal[:, 0::2] != optimal[:, 1::2]
    expected = 0.0 if r == 1 else 2.0 * r - 2.0
    all_split = bool(split.all())
    return {
        "r": r,
        "bipartitions": int(codes.size),
        "min_cost": best,
        "expected_min_cost": expected,
        "optimal_unordered": int(len(optimal)),
        "optimal_labeled": int(2 * len(optimal)),
        "all_split": all_split,
        "passed": all_split and abs(best - expected) <= 1e-9,
    }


def _bipartition_costs(pts: np.ndarray, side_a: np.ndarray) -> np.ndarray:
    """k-means cost of each bipartition; rows of ``side_a`` mark side A."""
    sq = (pts ** 2).sum(axis=1)
    total = np.zeros(len(side_a))
    for mask in (side_a, ~side_a):
        m = mask.astype(float)
        size = m.sum(axis=1)
        sums = m @ pts
        with np.errstate(invalid="ignore", divide="ignore"):
            part = m @ sq - np.where(size > 0, (sums ** 2).sum(axis=1) / size, 0.0)
        total += part
    return total


def hypercube_cost_formula(r0: int, r1: int, r2: int) -> float:
    """Closed-form cost of the (r0, r1, r2) bipartition family, 0/0 read as 0."""
    r = r0 + r1 + r2
    a = r1 / (r1 + 2 * r2) if r1 + 2 * r2 else 0.0
    b = r1 / (r1 + 2 * r0) if r1 + 2 * r0 else 0.0
    return 2 * r - (a + b)


def hypercube_partition_labels(r0: int, r1: int, r2: int) -> np.ndarray:
    """Side A (label 1) takes +e on axes r0..r0+r1-1 and both points on the
    last r2 axes; side B (label 2) holds the rest."""
    labels = []
    for axis in range(r0 + r1 + r2):
        if axis < r0:
            labels += [2, 2]
        elif axis < r0 + r1:
            labels += [2, 1]
        else:
            labels += [1, 1]
    return np.asarray(labels, dtype=np.int64)


def hypercube_direct_cost(r0: int, r1: int, r2: int) -> float:
    r = r0 + r1 + r2
    inst = ClusterInstance.euclidean(hypercube_points(r), 2)
    return clustering_from_labels(inst, hypercube_partition_labels(r0, r1, r2), 2).cost


def brute_force_optimum(instance: ClusterInstance, k: int | None = None,
                        max_labelings: int = 2_000_000) -> float:
    """Exact optimal cost by enumerating all labelings (point 0 pinned to label 1).

    Supports Euclidean power 2 and finite metrics; intended for n <= 12.
    """
    k = instance.k if k is None else k
    n = instance.n
    if instance.is_euclidean and instance.power != 2:
        raise InvalidArgumentError("brute force supports Euclidean k-means or finite metrics only")
    total = k ** (n - 1)
    if total > max_labelings:
        raise ResourceLimitError(f"{total} labelings exceed the brute-force limit")
    if instance.is_euclidean:
        x = instance.points
        sq = (x ** 2).sum(axis=1)
    else:
        dp = instance.point_candidate_dist.astype(float) ** instance.power
    best = math.inf
    chunk = 100_000
    for start in range(0, total, chunk):
        codes = np.arange(start, min(total, start + chunk), dtype=np.int64)
        digits = (codes[:, None] // (k ** np.arange(n - 1, dtype=np.int64))) % k
        labels = np.hstack([np.zeros((codes.size, 1), dtype=np.int64), digits])
        cost = np.zeros(codes.size)
        for i in range(k):
            m = (labels == i).astype(float)
            if instance.is_euclidean:
                size = m.sum(axis=1)
                sums = m @ x
                with np.errstate(invalid="ignore", divide="ignore"):
                    cost += m @ sq - np.where(size > 0, (sums ** 2).sum(axis=1) / size, 0.0)
            else:
                cost += (m @ dp).min(axis=1)
        best = min(best, float(cost.min()))
    return best
