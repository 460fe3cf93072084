"""Unsupervised baseline and query-assisted center completion.

``a_alpha`` is D^l-seeding followed by Lloyd alternation. ``a_cost`` extends
a partial set of labeled centers to k centers by repeated D^2-sampling
phases, each labeled through the oracle, and keeps the cheapest of several
independent rounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ClusterInstance, Clustering, assign_nearest, solve_1center
from .errors import InvalidArgumentError, PhaseExhaustedError
from .oracle import OracleSession


@dataclass
class SolverConfig:
    alpha_restarts: int = 5
    lloyd_max_iters: int = 100
    dsq_batch: int | None = None
    boost_rounds: int | None = None

    def __post_init__(self):
        for name in ("alpha_restarts", "lloyd_max_iters", "dsq_batch", "boost_rounds"):
            value = getattr(self, name)
            if value is not None and (int(value) != value or value < 1):
                raise InvalidArgumentError(f"{name} must be an integer >= 1")

    def batch_size(self, k: int, eps: float) -> int:
        if self.dsq_batch is not None:
            return int(self.dsq_batch)
        return math.ceil(64 * k ** 3 / eps ** 2)

    def rounds(self, delta: float) -> int:
        if self.boost_rounds is not None:
            return int(self.boost_rounds)
        return max(1, math.ceil(4 * math.log(1 / delta)))


def _center_at(instance: ClusterInstance, p: int):
    if instance.is_euclidean:
        return instance.points[p].copy()
    return int(np.argmin(instance.point_candidate_dist[p]))


def _stack(instance: ClusterInstance, centers):
    if instance.is_euclidean:
        return np.vstack(centers)
    return np.asarray(centers, dtype=np.int64)


def seed_centers(instance: ClusterInstance, k: int, rng: np.random.Generator):
    """k-means++ style seeding with weights d(p, nearest center)^power."""
    n = instance.n
    centers = [_center_at(instance, int(rng.integers(n)))]
    nearest = instance.powered_distances(_stack(instance, centers))[:, 0]
    while len(centers) < k:
        total = nearest.sum()
        if total > 0:
            p = int(rng.choice(n, p=nearest / total))
        else:
            p = int(rng.integers(n))
        centers.append(_center_at(instance, p))
        nearest = np.minimum(nearest, instance.powered_distances(_stack(instance, centers[-1:]))[:, 0])
    return _stack(instance, centers)


def lloyd(instance: ClusterInstance, centers, max_iters: int = 100) -> tuple[Clustering, list[float]]:
    """Alternate nearest assignment and per-cluster 1-center updates.

    Returns the final clustering and the cost after every assignment step;
    that sequence is nonincreasing.
    """
    centers = instance.check_centers(centers).copy()
    k = len(centers)
    current = assign_nearest(instance, centers)
    history = [current.cost]
    for _ in range(max_iters):
        new_centers = centers.copy()
        pd = instance.powered_distances(centers)
        for i in range(k):
            ids = np.flatnonzero(current.labels == i + 1)
            if ids.size == 0:
                continue
            c, c_cost = solve_1center(instance, ids)
            # Weiszfeld is approximate; never accept a worse center
            if c_cost <= pd[ids, i].sum():
                new_centers[i] = c
        nearest = instance.powered_distances(new_centers).min(axis=1)
        for i in range(k):
            if not np.any(current.labels == i + 1):
                far = int(np.argmax(nearest))
                new_centers[i] = _center_at(instance, far)
                nearest = np.minimum(
                    nearest, instance.powered_distances(new_centers[i: i + 1])[:, 0])
        nxt = assign_nearest(instance, new_centers)
        if nxt.cost > current.cost:
            break
        history.append(nxt.cost)
        done = np.array_equal(nxt.labels, current.labels) and np.array_equal(new_centers, centers)
        centers, current = new_centers, nxt
        if done:
            break
    return current, history


def a_alpha(instance: ClusterInstance, k: int | None = None, seed: int = 0,
            config: SolverConfig | None = None) -> Clustering:
    """Constant-factor baseline: best of several seeded Lloyd runs."""
    config = config or SolverConfig()
    k = instance.k if k is None else int(k)
    if not 1 <= k <= instance.n:
        raise InvalidArgumentError("need 1 <= k <= n")
    best = None
    for child in np.random.SeedSequence(seed).spawn(config.alpha_restarts):
        rng = np.random.default_rng(child)
        result, _ = lloyd(instance, seed_centers(instance, k, rng), config.lloyd_max_iters)
        if best is None or result.cost < best.cost:
            best = result
    return best


@dataclass
class CenterCompletion:
    centers: dict[int, np.ndarray]
    cost: float
    rounds: int
    failed_rounds: int


def a_cost(instance: ClusterInstance, session: OracleSession, partial_centers: dict,
           k: int, eps: float, delta: float, config: SolverConfig | None = None,
           seed: int = 0) -> CenterCompletion:
    """Complete ``partial_centers`` (session label -> center) to k labeled centers.

    Each phase D^2-samples a batch, labels it through ``session``, and gives
    the most frequent label still lacking a center the mean of its samples.
    The round with the lowest nearest-center cost wins. Rounds that stall
    are discarded; if all stall, :class:`PhaseExhaustedError` is raised.
    """
    if not instance.is_euclidean:
        raise InvalidArgumentError("center completion needs a Euclidean instance")
    if not (0 < eps < 1 and 0 < delta < 1):
        raise InvalidArgumentError("eps and delta must lie in (0, 1)")
    config = config or SolverConfig()
    partial = {int(l): np.asarray(c, dtype=float) for l, c in partial_centers.items()}
    if len(partial) > k:
        raise InvalidArgumentError("more partial centers than clusters")
    if len(partial) == k:
        centers = dict(sorted(partial.items()))
        return CenterCompletion(centers, _center_cost(instance, centers), 0, 0)

    batch = config.batch_size(k, eps)
    rounds = config.rounds(delta)
    rng = np.random.default_rng(seed)
    best, best_cost, failed, stalled = None, math.inf, 0, {}
    for _ in range(rounds):
        try:
            centers = _complete_once(instance, session, partial, k, batch, rng)
        except PhaseExhaustedError as exc:
            failed += 1
            stalled = exc.partial
            continue
        c = _center_cost(instance, centers)
        if c < best_cost:
            best, best_cost = centers, c
    if best is None:
        raise PhaseExhaustedError(
            f"every one of {rounds} rounds stalled before reaching {k} centers", partial=stalled)
    return CenterCompletion(best, best_cost, rounds, failed)


def _complete_once(instance, session, partial, k, batch, rng) -> dict:
    centers = dict(partial)
    x = instance.points
    while len(centers) < k:
        if centers:
            c = np.vstack(list(centers.values()))
            weights = instance.powered_distances(c).min(axis=1) if instance.power == 2 \
                else instance.distances(c).min(axis=1) ** 2
        else:
            weights = np.ones(instance.n)
        total = weights.sum()
        if total <= 0:
            raise PhaseExhaustedError("all points sit on existing centers", partial=centers)
        ids = rng.choice(instance.n, size=batch, p=weights / total)
        labels = session.query_labels(ids)
        counts = np.bincount(labels, minlength=k + 1)
        for label in centers:
            counts[label] = 0
        if counts.max() == 0:
            raise PhaseExhaustedError("phase drew no point from an uncovered label", partial=centers)
        label = int(np.argmax(counts))
        centers[label] = x[ids[labels == label]].mean(axis=0)
    return dict(sorted(centers.items()))


def _center_cost(instance: ClusterInstance, centers: dict) -> float:
    return assign_nearest(instance, np.vstack(list(centers.values()))).cost
