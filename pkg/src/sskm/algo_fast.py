"""Clustering with a query count that does not grow with n.

A uniform labeled sample finds the large clusters and their centroids,
center completion fills in the rest, and one global all-pairs classifier
relabels points, but only where the prediction names a large cluster whose
center is close enough. Everything else goes to its nearest center.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .algo_ring import QueryReport
from .core import ClusterInstance, Clustering, clustering_from_labels
from .errors import InvalidArgumentError
from .learners import DEFAULT_MAX_SAMPLES, sample_complexity_euclidean, train_all_pairs
from .oracle import OracleSession
from .solvers import SolverConfig, a_cost

log = logging.getLogger(__name__)


@dataclass
class FastConfig:
    q1_cap: int | None = None
    step4_cap: int | None = None
    C: float = 1.0
    max_samples: int | None = DEFAULT_MAX_SAMPLES
    antisymmetric: bool = False
    solver: SolverConfig = field(default_factory=SolverConfig)


@dataclass
class FastRunState:
    sample_ids: np.ndarray
    sample_labels: np.ndarray
    large_labels: list[int]
    centers: dict[int, np.ndarray]
    opt_star: float
    threshold: float
    predicted: np.ndarray | None = None
    gated: np.ndarray | None = None


def q1(k: int, eps: float, delta: float, cap: int | None = None) -> int:
    """ceil(256 k^3 / (eps^2 delta)), optionally capped."""
    if not (0 < eps < 0.25 and 0 < delta < 1):
        raise InvalidArgumentError("need 0 < eps < 1/4 and 0 < delta < 1")
    if k < 1:
        raise InvalidArgumentError("k must be >= 1")
    value = math.ceil(256 * k ** 3 / (eps * eps * delta))
    if cap is not None and value > cap:
        log.info("uniform sample size capped from %d to %d", value, cap)
        return int(cap)
    return value


def detect_large_clusters(ids, labels, points: np.ndarray, k: int, eps: float,
                          q1_size: int) -> tuple[list[int], dict[int, np.ndarray]]:
    """Labels with strictly more than (eps / 2k) * q1_size samples, and the
    mean of each one's sampled points (multiplicities counted)."""
    ids = np.asarray(ids, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    counts = np.bincount(labels, minlength=k + 1)
    limit = eps / (2 * k) * q1_size
    large = [int(a) for a in np.flatnonzero(counts > limit) if a >= 1]
    centroids = {a: points[ids[labels == a]].mean(axis=0) for a in large}
    return large, centroids


def fast_budget(k: int, r: int, eps: float, delta: float,
                config: FastConfig | None = None) -> dict:
    """Deterministic sample-size terms of a run; none depends on n."""
    config = config or FastConfig()
    e, d = eps / 6, delta / 3
    return {
        "q1_raw": q1(k, e, d),
        "q1": q1(k, e, d, config.q1_cap),
        "step4_raw": sample_complexity_euclidean(r, k, e ** 4 / k, d, config.C, None),
        "step4": _step4_size(k, r, e, d, config),
        "dsq_batch": config.solver.batch_size(k, e),
        "boost_rounds": config.solver.rounds(d),
    }


def _step4_size(k, r, e, d, config) -> int:
    m = sample_complexity_euclidean(r, k, e ** 4 / k, d, config.C, config.max_samples)
    if config.step4_cap is not None and m > config.step4_cap:
        log.info("classifier sample size capped from %d to %d", m, config.step4_cap)
        m = int(config.step4_cap)
    return m


def run_fast_algorithm(instance: ClusterInstance, session: OracleSession, eps: float,
                       delta: float, config: FastConfig | None = None,
                       seed: int = 0) -> tuple[Clustering, QueryReport]:
    """Run with internal accuracy eps/6 and confidence delta/3.

    ``report.state`` holds the intermediate :class:`FastRunState`.
    """
    if not instance.is_euclidean or instance.power != 2:
        raise InvalidArgumentError("the fast algorithm needs a Euclidean k-means instance")
    if not (0 < eps < 1 and 0 < delta < 1):
        raise InvalidArgumentError("eps and delta must lie in (0, 1)")
    config = config or FastConfig()
    k, n, x = instance.k, instance.n, instance.points
    e, d = eps / 6, delta / 3
    budget = fast_budget(k, instance.dim, eps, delta, config)
    size = budget["q1"]
    if size < 2 * k / e:
        raise InvalidArgumentError(
            f"uniform sample of {size} is below 2k/eps' = {2 * k / e:.1f}; "
            "large clusters are not guaranteed to exist")
    sc0, lq0 = session.same_cluster_count, session.label_count
    rng = np.random.default_rng(np.random.SeedSequence([seed, 2]))
    report = QueryReport()

    def finish(labels, fallback, state):
        result = clustering_from_labels(instance, labels, k, fallback=fallback)
        report.same_cluster = session.same_cluster_count - sc0
        report.label_queries = session.label_count - lq0
        report.cost = result.cost
        report.state = state
        report.extra.update({
            "k_prime": len(state.large_labels) if state else None,
            "opt_star": state.opt_star if state else None,
            "threshold": state.threshold if state else None,
            "budget": budget,
        })
        return result, report

    if size >= n:
        # the sample would cover P anyway: label every point once
        labels = session.query_labels(np.arange(n))
        return finish(labels, None, None)

    # Step 1-2: uniform sample, large clusters
    s_ids = rng.integers(0, n, size=size)
    s_labels = session.query_labels(s_ids)
    large, centroids = detect_large_clusters(s_ids, s_labels, x, k, e, size)
    assert large, "pigeonhole guarantees at least one large label"
    if k == 1:
        state = FastRunState(s_ids, s_labels, large, centroids, math.nan, math.nan)
        return finish(np.ones(n, dtype=np.int64), None, state)

    # Step 3: complete to k centers, OPT* and the recoloring gate
    completion = a_cost(instance, session, centroids, k, e, d, config.solver,
                        seed=int(rng.integers(2 ** 31)))
    labels_k = sorted(completion.centers)
    c_mat = np.vstack([completion.centers[a] for a in labels_k])
    sq = instance.powered_distances(c_mat)
    nearest = np.argmin(sq, axis=1)
    opt_star = float(sq[np.arange(n), nearest].sum())
    threshold = k * opt_star / (n * e ** 3)
    state = FastRunState(s_ids, s_labels, large, completion.centers, opt_star, threshold)

    # Step 4: one classifier on fresh samples
    m4 = budget["step4"]
    if m4 >= n:
        predicted = session.query_labels(np.arange(n))
    else:
        t_ids = rng.integers(0, n, size=m4)
        t_labels = session.query_labels(t_ids)
        clf = train_all_pairs(instance, t_ids, t_labels, k, config.antisymmetric)
        predicted = clf.predict(instance, np.arange(n))

    # Step 5: gated recoloring
    label_arr = np.asarray(labels_k, dtype=np.int64)
    out = label_arr[nearest]
    col = {a: i for i, a in enumerate(labels_k)}
    pred_col = np.array([col.get(int(a), -1) for a in range(k + 1)])[predicted]
    is_large = np.isin(predicted, large)
    within = np.zeros(n, dtype=bool)
    ok = pred_col >= 0
    within[ok] = sq[np.flatnonzero(ok), pred_col[ok]] <= threshold
    gated = is_large & within
    out[gated] = predicted[gated]
    state.predicted, state.gated = predicted, gated
    fallback = np.vstack([completion.centers.get(a, c_mat[0]) for a in range(1, k + 1)])
    return finish(out, fallback, state)
