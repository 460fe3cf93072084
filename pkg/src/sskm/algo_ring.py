"""(1+eps)-approximate, (1-eps)-accurate clustering by ring partitioning.

An unsupervised alpha-approximation is split, cluster by cluster, into an
inner ball and doubling annuli around each center. Every ring is labeled
from a few oracle-labeled samples through an all-pairs learner, so points
that a_alpha put in the wrong cluster get their target label back.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .core import ClusterInstance, Clustering, clustering_from_labels, solve_1center
from .errors import DegenerateRadiusError, InvalidArgumentError, NonSeparableError
from .learners import DEFAULT_MAX_SAMPLES, sample_complexity, train_all_pairs
from .oracle import OracleSession
from .solvers import SolverConfig, a_alpha

log = logging.getLogger(__name__)


@dataclass
class RingConfig:
    """Knobs for desk-scale runs. ``sample_cap`` and ``cap_factor`` bound
    the per-ring sample size below the learner's sample complexity."""

    c_med: float = 96.0
    C: float = 1.0
    max_samples: int | None = DEFAULT_MAX_SAMPLES
    sample_cap: int | None = None
    cap_factor: float | None = None
    antisymmetric: bool = False
    solver: SolverConfig = field(default_factory=SolverConfig)


@dataclass
class QueryReport:
    same_cluster: int = 0
    label_queries: int = 0
    rings: list[dict] = field(default_factory=list)
    cost: float = math.nan
    accuracy: float | None = None
    extra: dict = field(default_factory=dict)
    partitions: list = field(default_factory=list, repr=False)
    state: object = field(default=None, repr=False)
    samples: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        d = {"same_cluster": self.same_cluster, "rings": self.rings,
             "cost": self.cost, "accuracy": self.accuracy,
             "label_queries": self.label_queries}
        d.update(self.extra)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass
class RingPartition:
    cluster: int
    center: object
    radius: float
    rings: list[np.ndarray]
    distances: list[np.ndarray]
    residual: int = 0

    @property
    def J(self) -> int:
        return len(self.rings) - 1


def ring_count(n: int) -> int:
    """J = ceil(log2(n) / 2)."""
    return math.ceil(math.log2(n) / 2) if n > 1 else 0


def ring_radius(instance: ClusterInstance, cluster, center, gamma: float) -> float:
    """sqrt(cost / (gamma |C|)) for power 2, cost / (gamma |C|) for power 1."""
    if not 0 < gamma < 0.5:
        raise InvalidArgumentError("gamma must lie in (0, 1/2)")
    ids = instance.check_ids(cluster)
    if ids.size == 0:
        raise InvalidArgumentError("cluster must be non-empty")
    c = [center] if instance.is_euclidean else np.atleast_1d(center)
    total = float(instance.powered_distances(c, ids).sum())
    avg = total / (gamma * ids.size)
    return math.sqrt(avg) if instance.power == 2 else avg


def partition_rings(instance: ClusterInstance, cluster, center, radius: float, n: int,
                    index: int = 0) -> RingPartition:
    """Ring 0 holds d <= r; ring j >= 1 holds 2^(j-1) r < d <= 2^j r."""
    ids = instance.check_ids(cluster)
    c = [center] if instance.is_euclidean else np.atleast_1d(center)
    d = instance.distances(c, ids)[:, 0]
    J = ring_count(n)
    if radius <= 0:
        if np.any(d > 0):
            raise DegenerateRadiusError(
                f"cluster {index}: zero radius but points away from the center")
        j_of = np.zeros(ids.size, dtype=np.int64)
    else:
        # smallest j with d <= 2^j r, found by comparison rather than log2
        bounds = radius * 2.0 ** np.arange(J + 1)
        j_of = np.searchsorted(bounds, d, side="left")
    residual = int(np.count_nonzero(j_of > J))
    if residual:
        log.warning("cluster %d: %d points beyond the last ring moved into ring %d",
                    index, residual, J)
        j_of = np.minimum(j_of, J)
    rings = [ids[j_of == j] for j in range(J + 1)]
    dists = [d[j_of == j] for j in range(J + 1)]
    return RingPartition(index, center, float(radius), rings, dists, residual)


def _gamma(eps: float, alpha: float, power: int, c_med: float) -> float:
    return eps * eps / (288.0 * alpha) if power == 2 else eps / (c_med * alpha)


def run_ring_algorithm(instance: ClusterInstance, session: OracleSession, eps: float,
                       delta: float, alpha: float = 20.0, config: RingConfig | None = None,
                       seed: int = 0) -> tuple[Clustering, QueryReport]:
    """Run the ring algorithm.

    ``report.partitions`` keeps every ring partition and ``report.samples``
    every (ids, session labels) batch; neither is part of the JSON form.
    """
    if not (0 < eps < 1 and 0 < delta < 1):
        raise InvalidArgumentError("eps and delta must lie in (0, 1)")
    if alpha < 1:
        raise InvalidArgumentError("alpha must be >= 1")
    config = config or RingConfig()
    k, n = instance.k, instance.n
    sc0, lq0 = session.same_cluster_count, session.label_count
    report = QueryReport()

    if k == 1:
        result = clustering_from_labels(instance, np.ones(n, dtype=np.int64), 1)
        report.cost = result.cost
        return result, report

    inter = a_alpha(instance, k, seed=seed, config=config.solver)
    gamma = _gamma(eps, alpha, instance.power, config.c_med)
    delta_ring = delta / (k * max(1.0, math.log2(n)))
    m_prime = sample_complexity(instance, gamma * gamma, delta_ring, config.C,
                                config.max_samples)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    out = np.zeros(n, dtype=np.int64)

    for i in range(1, k + 1):
        ids = inter.cluster(i)
        if ids.size == 0:
            continue
        center, _ = solve_1center(instance, ids)
        part = partition_rings(instance, ids, center, ring_radius(instance, ids, center, gamma),
                               n, index=i)
        report.partitions.append(part)
        for j, ring in enumerate(part.rings):
            if ring.size == 0:
                continue
            m = m_prime
            if config.sample_cap is not None:
                m = min(m, int(config.sample_cap))
            if config.cap_factor is not None:
                m = min(m, max(1, math.ceil(config.cap_factor * ring.size)))
            if ring.size <= m:
                # labeling the whole ring is exact and no more expensive
                out[ring] = session.query_labels(ring)
                report.samples.append((ring, out[ring].copy()))
                report.rings.append({"i": i, "j": j, "m": int(ring.size), "size": int(ring.size)})
                continue
            sample = rng.choice(ring, size=m, replace=True)
            labels = session.query_labels(sample)
            report.samples.append((sample, labels))
            try:
                clf = train_all_pairs(instance, sample, labels, k, config.antisymmetric)
            except NonSeparableError as exc:
                raise NonSeparableError(f"cluster {i} ring {j}: {exc}", pair=exc.pair,
                                        ring=(i, j)) from exc
            out[ring] = clf.predict(instance, ring)
            report.rings.append({"i": i, "j": j, "m": int(m), "size": int(ring.size)})

    result = clustering_from_labels(instance, out, k, fallback=inter.centers)
    report.same_cluster = session.same_cluster_count - sc0
    report.label_queries = session.label_count - lq0
    report.cost = result.cost
    report.extra.update({"m_prime": int(m_prime), "gamma": gamma})
    return result, report


def query_budget(report: QueryReport, k: int) -> int:
    """k times the total number of labeled samples: the same-cluster bound."""
    return k * sum(r["m"] for r in report.rings)
