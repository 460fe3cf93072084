"""Instances, clusterings and the cost/error primitives used everywhere else.

Point ids are integer row indices ``0..n-1``. Cluster labels are 1-based
(``1..k``). In the Euclidean case a center is a real vector; in the
finite-metric case a center is a candidate id ``0..m-1`` indexing the
candidate block of the distance matrix.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InvalidArgumentError, SealedError

EUCLIDEAN = "euclidean"
FINITE_METRIC = "finite_metric"

COST_RTOL = 1e-9
_TRIANGLE_EXHAUSTIVE_LIMIT = 200
_TRIANGLE_SAMPLES = 20_000


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ClusterInstance:
    """A k-means (power 2) or k-median (power 1) instance.

    Build with :meth:`euclidean` or :meth:`finite_metric` rather than the raw
    constructor.
    """

    kind: str
    k: int
    power: int
    points: np.ndarray | None = None
    dist: np.ndarray | None = None
    n_points: int = 0

    def __post_init__(self):
        if self.power not in (1, 2):
            raise InvalidArgumentError(f"power must be 1 or 2, got {self.power}")
        if self.kind == EUCLIDEAN:
            pts = np.asarray(self.points, dtype=float)
            if pts.ndim != 2 or pts.shape[1] < 1:
                raise InvalidArgumentError("Euclidean points must form an (n, r) array with r >= 1")
            if not np.all(np.isfinite(pts)):
                raise InvalidArgumentError("points contain non-finite coordinates")
            object.__setattr__(self, "points", _readonly(pts))
            object.__setattr__(self, "n_points", pts.shape[0])
        elif self.kind == FINITE_METRIC:
            d = np.asarray(self.dist, dtype=float)
            if d.ndim != 2 or d.shape[0] != d.shape[1]:
                raise InvalidArgumentError("distance matrix must be square")
            if not 1 <= self.n_points < d.shape[0]:
                raise InvalidArgumentError("need n_points >= 1 and at least one candidate center")
            _check_metric(d)
            object.__setattr__(self, "dist", _readonly(d))
        else:
            raise InvalidArgumentError(f"unknown instance kind {self.kind!r}")
        if not 1 <= self.k <= self.n:
            raise InvalidArgumentError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")

    @classmethod
    def euclidean(cls, points, k: int, power: int = 2) -> "ClusterInstance":
        return cls(kind=EUCLIDEAN, k=int(k), power=int(power), points=points)

    @classmethod
    def finite_metric(cls, dist, n_points: int, k: int, power: int = 2) -> "ClusterInstance":
        """``dist`` is the full (n+m) x (n+m) matrix over points then candidates."""
        return cls(kind=FINITE_METRIC, k=int(k), power=int(power), dist=dist, n_points=int(n_points))

    @property
    def is_euclidean(self) -> bool:
        return self.kind == EUCLIDEAN

    @property
    def n(self) -> int:
        return self.n_points

    @property
    def dim(self) -> int:
        if not self.is_euclidean:
            raise InvalidArgumentError("finite-metric instances have no dimension")
        return self.points.shape[1]

    @property
    def n_candidates(self) -> int:
        if self.is_euclidean:
            raise InvalidArgumentError("Euclidean instances have an unbounded candidate space")
        return self.dist.shape[0] - self.n_points

    @property
    def point_candidate_dist(self) -> np.ndarray:
        """(n, m) block of distances from points to candidates."""
        return self.dist[: self.n_points, self.n_points:]

    def with_k(self, k: int) -> "ClusterInstance":
        if self.is_euclidean:
            return ClusterInstance.euclidean(self.points, k, self.power)
        return ClusterInstance.finite_metric(self.dist, self.n_points, k, self.power)

    # -- validation -------------------------------------------------------

    def check_ids(self, ids) -> np.ndarray:
        ids = np.atleast_1d(np.asarray(ids))
        if ids.size and (ids.dtype.kind not in "iu"):
            raise InvalidArgumentError("point ids must be integers")
        ids = ids.astype(np.int64, copy=False)
        if ids.size and (ids.min() < 0 or ids.max() >= self.n):
            raise InvalidArgumentError("point id out of range")
        return ids

    def check_centers(self, centers) -> np.ndarray:
        """Validate a sequence of centers and return it as an array."""
        if self.is_euclidean:
            c = np.atleast_2d(np.asarray(centers, dtype=float))
            if c.ndim != 2 or c.shape[1] != self.dim:
                raise InvalidArgumentError(
                    f"center dimension mismatch: expected {self.dim}, got shape {c.shape}"
                )
            return c
        c = np.atleast_1d(np.asarray(centers))
        if c.dtype.kind not in "iu" or c.ndim != 1:
            raise InvalidArgumentError("finite-metric centers must be integer candidate ids")
        if c.size and (c.min() < 0 or c.max() >= self.n_candidates):
            raise InvalidArgumentError("unknown candidate id")
        return c.astype(np.int64)

    # -- distances --------------------------------------------------------

    def coords(self, ids=None) -> np.ndarray:
        if not self.is_euclidean:
            raise InvalidArgumentError("finite-metric points have no coordinates")
        return self.points if ids is None else self.points[ids]

    def distances(self, centers, ids=None) -> np.ndarray:
        """Plain distances, shape (len(ids), len(centers))."""
        c = self.check_centers(centers)
        if self.is_euclidean:
            x = self.points if ids is None else self.points[ids]
            return np.sqrt(_sqdist(x, c))
        rows = slice(0, self.n) if ids is None else ids
        return self.point_candidate_dist[rows][:, c]

    def powered_distances(self, centers, ids=None) -> np.ndarray:
        """Distances raised to the instance power, shape (len(ids), len(centers))."""
        if self.is_euclidean and self.power == 2:
            c = self.check_centers(centers)
            x = self.points if ids is None else self.points[ids]
            return _sqdist(x, c)
        d = self.distances(centers, ids)
        return d if self.power == 1 else d * d

    def pairwise_point_distances(self, ids) -> np.ndarray:
        ids = self.check_ids(ids)
        if self.is_euclidean:
            x = self.points[ids]
            return np.sqrt(_sqdist(x, x))
        return self.dist[np.ix_(ids, ids)]


def _sqdist(x: np.ndarray, c: np.ndarray) -> np.ndarray:
    diff = x[:, None, :] - c[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _check_metric(d: np.ndarray, seed: int = 0) -> None:
    if not np.all(np.isfinite(d)):
        raise InvalidArgumentError("distance matrix contains non-finite entries")
    if np.any(d < 0):
        raise InvalidArgumentError("distance matrix has negative entries")
    if np.any(np.diag(d) != 0):
        raise InvalidArgumentError("distance matrix diagonal must be zero")
    scale = max(float(d.max()), 1.0)
    if not np.allclose(d, d.T, rtol=0, atol=1e-12 * scale):
        raise InvalidArgumentError("distance matrix is not symmetric")
    tol = 1e-9 * scale
    size = d.shape[0]
    if size <= _TRIANGLE_EXHAUSTIVE_LIMIT:
        for mid in range(size):
            if np.any(d > d[:, mid, None] + d[None, mid, :] + tol):
                raise InvalidArgumentError("distance matrix violates the triangle inequality")
        return
    rng = np.random.default_rng(seed)
    i, j, m = rng.integers(0, size, size=(3, _TRIANGLE_SAMPLES))
    if np.any(d[i, j] > d[i, m] + d[m, j] + tol):
        raise InvalidArgumentError("distance matrix violates the triangle inequality")


@dataclass(eq=False)
class Clustering:
    """Labels ``1..k`` for every point plus one center per label."""

    labels: np.ndarray
    centers: np.ndarray
    cost: float

    @property
    def k(self) -> int:
        return len(self.centers)

    def recompute_cost(self, instance: ClusterInstance) -> float:
        return labeled_cost(instance, self.labels, self.centers)

    def cluster(self, label: int) -> np.ndarray:
        return np.flatnonzero(self.labels == label)


class GroundTruth:
    """Hidden target labeling. Algorithms only see it through an oracle session.

    ``reveal()`` is the explicit evaluation path used by harnesses and tests.
    """

    def __init__(self, labels, k: int | None = None, sealed: bool = True):
        labels = np.asarray(labels)
        if labels.ndim != 1 or labels.size == 0:
            raise InvalidArgumentError("ground truth needs a non-empty 1-d label vector")
        if labels.dtype.kind not in "iu":
            if not np.all(labels == np.round(labels)):
                raise InvalidArgumentError("labels must be integers")
        labels = labels.astype(np.int64)
        k = int(labels.max()) if k is None else int(k)
        if labels.min() < 1 or labels.max() > k:
            raise InvalidArgumentError("ground-truth labels must lie in 1..k")
        self._labels = _readonly(labels)
        self.k = k
        self.sealed = sealed

    @property
    def n(self) -> int:
        return self._labels.size

    @property
    def labels(self) -> np.ndarray:
        if self.sealed:
            raise SealedError("ground truth is sealed; query it through an OracleSession")
        return self._labels

    def reveal(self) -> np.ndarray:
        return self._labels

    def validate_no_boundary(self, instance: ClusterInstance) -> bool:
        """True iff every point is strictly nearest to its own derived center."""
        return boundary_violations(instance, self._labels, self.k).size == 0


# -- cost primitives ------------------------------------------------------


def cost(instance: ClusterInstance, subset, center) -> float:
    """Sum of d(p, center)^power over the subset."""
    ids = instance.check_ids(subset)
    if ids.size == 0:
        instance.check_centers([center] if instance.is_euclidean else np.atleast_1d(center))
        return 0.0
    c = [center] if instance.is_euclidean else np.atleast_1d(center)
    return float(instance.powered_distances(c, ids)[:, 0].sum())


def labeled_cost(instance: ClusterInstance, labels, centers) -> float:
    labels = np.asarray(labels)
    c = instance.check_centers(centers)
    if labels.shape != (instance.n,):
        raise InvalidArgumentError("labels must cover every point")
    total = 0.0
    for i in range(len(c)):
        ids = np.flatnonzero(labels == i + 1)
        if ids.size:
            total += float(instance.powered_distances(c[i: i + 1], ids).sum())
    return total


def solve_1center(instance: ClusterInstance, subset, eps1: float = 1e-3, seed: int = 0):
    """Best single center for a subset; returns ``(center, cost)``.

    Euclidean power 2 gives the exact centroid, the finite metric case
    scans every candidate (smallest id wins ties), and Euclidean power 1
    runs Weiszfeld to a center within ``(1 + eps1)`` of the optimum.
    """
    ids = instance.check_ids(subset)
    if ids.size == 0:
        raise InvalidArgumentError("cannot place a center for an empty subset")
    if not instance.is_euclidean:
        costs = instance.point_candidate_dist[ids].astype(float)
        if instance.power == 2:
            costs = costs * costs
        totals = costs.sum(axis=0)
        q = int(np.argmin(totals))
        return q, float(totals[q])
    x = instance.points[ids]
    if instance.power == 2:
        mu = x.mean(axis=0)
        return mu, float(_sqdist(x, mu[None])[:, 0].sum())
    c = geometric_median(x, eps1=eps1, seed=seed)
    return c, float(np.linalg.norm(x - c, axis=1).sum())


def geometric_median(x: np.ndarray, eps1: float = 1e-3, tol: float = 1e-9,
                     max_iter: int = 10_000, seed: int = 0) -> np.ndarray:
    """Weiszfeld iteration with a convexity-based stopping certificate.

    Stops when the center moves less than ``tol`` (relative) or when the
    certified gap ``f(y) - LB <= eps1 * LB``, where
    ``LB = f(y) - |grad f(y)| * max_i |x_i - y|`` (the optimum lies in the
    convex hull). Landing exactly on an input point triggers an optimality
    test there and, if that fails, a jittered restart.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[0] == 1:
        return x[0].copy()
    rng = np.random.default_rng(seed)
    spread = float(np.ptp(x, axis=0).max()) or 1.0
    y = x.mean(axis=0)
    best, best_f = y, float(np.linalg.norm(x - y, axis=1).sum())
    for _restart in range(8):
        for _ in range(max_iter):
            diff = x - y
            d = np.linalg.norm(diff, axis=1)
            f = float(d.sum())
            if f < best_f:
                best, best_f = y, f
            on_point = d == 0.0
            if on_point.any():
                u = (diff[~on_point] / d[~on_point, None]).sum(axis=0)
                if np.linalg.norm(u) <= on_point.sum():
                    return y
                y = y + rng.normal(scale=1e-6 * spread, size=y.shape)
                break
            grad = -(diff / d[:, None]).sum(axis=0)
            lb = f - float(np.linalg.norm(grad)) * float(d.max())
            if lb > 0 and f - lb <= eps1 * lb:
                return y
            w = 1.0 / d
            y_new = (w[:, None] * x).sum(axis=0) / w.sum()
            if np.linalg.norm(y_new - y) <= tol * (1.0 + np.linalg.norm(y)):
                f_new = float(np.linalg.norm(x - y_new, axis=1).sum())
                return y_new if f_new <= best_f else best
            y = y_new
        else:
            return best
    return best


def assign_nearest(instance: ClusterInstance, centers) -> Clustering:
    """Label each point by its nearest center (smallest index wins ties)."""
    c = instance.check_centers(centers)
    if len(c) == 0:
        raise InvalidArgumentError("need at least one center")
    pd = instance.powered_distances(c)
    idx = np.argmin(pd, axis=1)
    total = float(pd[np.arange(instance.n), idx].sum())
    return Clustering(labels=idx.astype(np.int64) + 1, centers=c.copy(), cost=total)


def centers_for_labels(instance: ClusterInstance, labels, k: int, fallback=None):
    """Optimal center per label; empty labels take ``fallback[i]`` (or the first point)."""
    labels = np.asarray(labels)
    out = []
    for i in range(1, k + 1):
        ids = np.flatnonzero(labels == i)
        if ids.size:
            out.append(solve_1center(instance, ids)[0])
        elif fallback is not None:
            out.append(np.asarray(fallback)[i - 1])
        else:
            out.append(instance.points[0] if instance.is_euclidean else 0)
    if instance.is_euclidean:
        return np.vstack(out)
    return np.asarray(out, dtype=np.int64)


def clustering_from_labels(instance: ClusterInstance, labels, k: int, fallback=None) -> Clustering:
    labels = np.asarray(labels, dtype=np.int64)
    centers = centers_for_labels(instance, labels, k, fallback)
    return Clustering(labels=labels.copy(), centers=centers,
                      cost=labeled_cost(instance, labels, centers))


def clustering_error(a, truth, k: int) -> int:
    """Minimum number of mislabeled points over all label permutations."""
    a = np.asarray(a.labels if isinstance(a, Clustering) else a)
    truth = np.asarray(truth.reveal() if isinstance(truth, GroundTruth) else truth)
    if a.shape != truth.shape or a.ndim != 1:
        raise InvalidArgumentError("labelings cover different point sets")
    if a.size == 0:
        return 0
    if min(a.min(), truth.min()) < 1 or max(a.max(), truth.max()) > k:
        raise InvalidArgumentError("labels must lie in 1..k")
    agree = np.zeros((k, k), dtype=np.int64)
    np.add.at(agree, (a - 1, truth - 1), 1)
    rows, cols = linear_sum_assignment(agree, maximize=True)
    return int(a.size - agree[rows, cols].sum())


def accuracy(a, truth, k: int) -> float:
    """1 - clustering_error / n."""
    n = np.asarray(a.labels if isinstance(a, Clustering) else a).size
    return 1.0 - clustering_error(a, truth, k) / n if n else 1.0


def boundary_violations(instance: ClusterInstance, labels, k: int) -> np.ndarray:
    """Ids of points not strictly nearest to their own label's derived center."""
    labels = np.asarray(labels)
    centers = centers_for_labels(instance, labels, k)
    present = np.array([np.any(labels == i) for i in range(1, k + 1)])
    d = instance.distances(centers)
    d[:, ~present] = np.inf
    own = d[np.arange(instance.n), labels - 1]
    d[np.arange(instance.n), labels - 1] = np.inf
    return np.flatnonzero(own >= d.min(axis=1))


def squared_triangle_holds(a: float, b: float, eps: float, rtol: float = 1e-12) -> bool:
    """(a + b)^2 <= (1 + eps) a^2 + (1 + 1/eps) b^2, up to relative rounding."""
    lhs = (a + b) ** 2
    rhs = (1 + eps) * a * a + (1 + 1 / eps) * b * b
    return lhs <= rhs * (1 + rtol)


def check_squared_triangle(samples: int = 100_000, seed: int = 0, rtol: float = 1e-12) -> dict:
    rng = np.random.default_rng(seed)
    scale = 10.0 ** rng.uniform(-6, 6, size=(2, samples))
    a, b = rng.random((2, samples)) * scale
    eps = rng.uniform(np.nextafter(0.0, 1.0), 1.0, size=samples)
    lhs = (a + b) ** 2
    rhs = (1 + eps) * a * a + (1 + 1 / eps) * b * b
    ok = lhs <= rhs * (1 + rtol)
    worst = float(np.max((lhs - rhs) / np.maximum(rhs, np.finfo(float).tiny)))
    violations = int((~ok).sum())
    return {"samples": samples, "violations": violations, "max_relative_excess": worst,
            "passed": violations == 0}


# -- JSON instance files --------------------------------------------------


def instance_to_dict(instance: ClusterInstance, truth: GroundTruth | None = None) -> dict:
    if instance.is_euclidean:
        data = {"type": EUCLIDEAN, "power": instance.power, "k": instance.k,
                "points": instance.points.tolist()}
    else:
        data = {"type": FINITE_METRIC, "power": instance.power, "k": instance.k,
                "n_points": instance.n, "candidates": instance.n_candidates,
                "dist": instance.dist.tolist()}
    if truth is not None:
        data["truth"] = truth.reveal().tolist()
    return data


def instance_from_dict(data: dict) -> tuple[ClusterInstance, GroundTruth | None]:
    try:
        kind = data["type"]
        power = int(data.get("power", 2))
        k = int(data["k"])
        if kind == EUCLIDEAN:
            inst = ClusterInstance.euclidean(np.asarray(data["points"], dtype=float), k, power)
        elif kind == FINITE_METRIC:
            dist = np.asarray(data["dist"], dtype=float)
            n_points = int(data["n_points"])
            if "candidates" in data and n_points + int(data["candidates"]) != dist.shape[0]:
                raise InvalidArgumentError("n_points + candidates must match the distance matrix size")
            inst = ClusterInstance.finite_metric(dist, n_points, k, power)
        else:
            raise InvalidArgumentError(f"unknown instance type {kind!r}")
    except (KeyError, TypeError) as exc:
        raise InvalidArgumentError(f"malformed instance: {exc}") from exc
    truth = None
    if data.get("truth") is not None:
        truth = GroundTruth(data["truth"], k=k)
        if truth.n != inst.n:
            raise InvalidArgumentError("truth length does not match the number of points")
    return inst, truth


def save_instance(path, instance: ClusterInstance, truth: GroundTruth | None = None) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(instance, truth)), encoding="utf-8")


def load_instance(path) -> tuple[ClusterInstance, GroundTruth | None]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidArgumentError(f"{path}: not valid JSON ({exc})") from exc
    return instance_from_dict(data)


def planted_cost(instance: ClusterInstance, truth: GroundTruth) -> float:
    """Cost of the target labeling with its own optimal centers."""
    return clustering_from_labels(instance, truth.reveal(), truth.k).cost


def relative_close(a: float, b: float, rtol: float = COST_RTOL) -> bool:
    return math.isclose(a, b, rel_tol=rtol, abs_tol=rtol)
