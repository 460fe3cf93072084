"""Zero-sample-error, non-inventive multiclass learners.

Multiclass prediction uses the all-pairs reduction: one binary separator
``g[a, b]`` per ordered label pair, and ``predict`` returns the label with
the largest score ``sum_{b != a} g[a, b](x)``. Labels never seen in training
get constant separators that make them unreachable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .core import ClusterInstance
from .errors import InvalidArgumentError, NonSeparableError

DEFAULT_MAX_SAMPLES = 100_000

HALFSPACE = "halfspace"
CANDIDATE_PAIR = "pair"
CONSTANT = "const"


@dataclass(frozen=True)
class BinarySeparator:
    """A +/-1 predictor.

    ``halfspace``: +1 iff <w, x> + b > 0.
    ``pair``: -1 iff d(p, q1) >= d(p, q2), else +1.
    ``const``: always ``value``.
    """

    kind: str
    w: tuple[float, ...] | None = None
    b: float = 0.0
    q1: int = -1
    q2: int = -1
    value: int = 1

    @classmethod
    def constant(cls, value: int) -> "BinarySeparator":
        return cls(kind=CONSTANT, value=1 if value > 0 else -1)

    def decision(self, instance: ClusterInstance, ids=None, x=None) -> np.ndarray:
        """Signed score whose sign is the prediction (+1 iff > 0)."""
        if self.kind == CONSTANT:
            size = len(x) if x is not None else len(ids)
            return np.full(size, float(self.value))
        if self.kind == HALFSPACE:
            pts = x if x is not None else instance.coords(ids)
            return pts @ np.asarray(self.w) + self.b
        pc = instance.point_candidate_dist[ids]
        return pc[:, self.q2] - pc[:, self.q1]

    def predict(self, instance: ClusterInstance, ids=None, x=None) -> np.ndarray:
        return np.where(self.decision(instance, ids, x) > 0, 1, -1)

    def to_dict(self) -> dict:
        if self.kind == HALFSPACE:
            return {"kind": HALFSPACE, "w": list(self.w), "b": self.b}
        if self.kind == CANDIDATE_PAIR:
            return {"kind": CANDIDATE_PAIR, "q1": self.q1, "q2": self.q2}
        return {"kind": CONSTANT, "value": self.value}

    @classmethod
    def from_dict(cls, d: dict) -> "BinarySeparator":
        if d["kind"] == HALFSPACE:
            return cls(kind=HALFSPACE, w=tuple(float(v) for v in d["w"]), b=float(d["b"]))
        if d["kind"] == CANDIDATE_PAIR:
            return cls(kind=CANDIDATE_PAIR, q1=int(d["q1"]), q2=int(d["q2"]))
        return cls.constant(int(d["value"]))


def fit_separator_euclidean(positives, negatives) -> BinarySeparator:
    """Exact hard-margin separation by linear programming.

    Solves ``max t  s.t.  y_i (<w, x_i> + b) >= t,  |w|_inf <= 1,  t <= 1`` on
    standardized coordinates, maps the solution back and then re-checks every
    training sign in the original coordinates. Any failure of that check is
    reported as non-separable.
    """
    pos = np.atleast_2d(np.asarray(positives, dtype=float))
    neg = np.atleast_2d(np.asarray(negatives, dtype=float))
    if pos.size == 0 and neg.size == 0:
        raise InvalidArgumentError("need at least one training point")
    if pos.size == 0:
        return BinarySeparator.constant(-1)
    if neg.size == 0:
        return BinarySeparator.constant(+1)
    if pos.shape[1] != neg.shape[1]:
        raise InvalidArgumentError("positives and negatives differ in dimension")
    pos, neg = np.unique(pos, axis=0), np.unique(neg, axis=0)
    x = np.vstack([pos, neg])
    y = np.concatenate([np.ones(len(pos)), -np.ones(len(neg))])
    shift = x.mean(axis=0)
    scale = float(np.abs(x - shift).max()) or 1.0
    z = (x - shift) / scale
    r = z.shape[1]

    # variables: w (r), b, t ; minimize -t
    c = np.zeros(r + 2)
    c[-1] = -1.0
    a_ub = np.hstack([-y[:, None] * z, -y[:, None], np.ones((len(y), 1))])
    b_ub = np.zeros(len(y))
    bounds = [(-1.0, 1.0)] * r + [(None, None), (None, 1.0)]
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status != 0 or res.x is None or res.x[-1] <= 1e-12:
        raise NonSeparableError("training points are not strictly linearly separable")
    wz, bz = res.x[:r], res.x[r]
    w = wz / scale
    b = bz - float(w @ shift)
    margins = y * (x @ w + b)
    if not np.all(margins > 0):
        raise NonSeparableError("separating hyperplane failed the exact sign check")
    return BinarySeparator(kind=HALFSPACE, w=tuple(float(v) for v in w), b=float(b))


def fit_separator_fms(instance: ClusterInstance, positives, negatives) -> BinarySeparator:
    """First zero-error candidate pair (q1, q2) in lexicographic order."""
    pos = instance.check_ids(positives)
    neg = instance.check_ids(negatives)
    pc = instance.point_candidate_dist
    dp, dn = pc[np.unique(pos)], pc[np.unique(neg)]
    m = pc.shape[1]
    for q1 in range(m):
        # +1 needs d(p,q1) < d(p,q2); -1 needs d(p,q1) >= d(p,q2)
        ok = np.ones(m, dtype=bool)
        if dp.size:
            ok &= np.all(dp[:, q1, None] < dp, axis=0)
        if dn.size and ok.any():
            ok &= np.all(dn[:, q1, None] >= dn, axis=0)
        hits = np.flatnonzero(ok)
        if hits.size:
            return BinarySeparator(kind=CANDIDATE_PAIR, q1=q1, q2=int(hits[0]))
    raise NonSeparableError("no candidate pair separates the training points")


@dataclass
class Classifier:
    k: int
    seen_labels: tuple[int, ...]
    separators: dict[tuple[int, int], BinarySeparator] = field(default_factory=dict)
    kind: str = "euclidean"

    def scores(self, instance: ClusterInstance, ids=None, x=None) -> np.ndarray:
        if x is not None:
            x = np.atleast_2d(np.asarray(x, dtype=float))
            if instance.is_euclidean and x.shape[1] != instance.dim:
                raise InvalidArgumentError("point dimension mismatch")
            size = len(x)
        else:
            ids = instance.check_ids(ids)
            size = len(ids)
        out = np.zeros((size, self.k))
        for (a, _b), g in self.separators.items():
            if g.kind == CONSTANT:
                out[:, a - 1] += g.value
            else:
                out[:, a - 1] += g.predict(instance, ids, x)
        return out

    def predict(self, instance: ClusterInstance, ids=None, x=None) -> np.ndarray:
        """Labels ``1..k``; ties go to the smallest label."""
        return np.argmax(self.scores(instance, ids, x), axis=1).astype(np.int64) + 1

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "kind": self.kind,
            "seen_labels": list(self.seen_labels),
            "separators": [
                {"pair": [a, b], "separator": g.to_dict()}
                for (a, b), g in sorted(self.separators.items())
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Classifier":
        seps = {(int(s["pair"][0]), int(s["pair"][1])): BinarySeparator.from_dict(s["separator"])
                for s in d["separators"]}
        return cls(k=int(d["k"]), seen_labels=tuple(d["seen_labels"]), separators=seps,
                   kind=d.get("kind", "euclidean"))


def train_all_pairs(instance: ClusterInstance, ids, labels, k: int,
                    antisymmetric: bool = False) -> Classifier:
    """Fit one separator per ordered pair of seen labels.

    ``ids``/``labels`` form the training multiset (duplicates allowed).
    With ``antisymmetric`` the reverse separator is derived as the negation
    instead of being fitted independently.
    """
    ids = instance.check_ids(ids)
    labels = np.asarray(labels, dtype=np.int64).ravel()
    if ids.size == 0:
        raise InvalidArgumentError("need at least one training sample")
    if labels.shape != ids.shape:
        raise InvalidArgumentError("ids and labels differ in length")
    if labels.min() < 1 or labels.max() > k:
        raise InvalidArgumentError("training labels must lie in 1..k")
    seen = tuple(int(v) for v in np.unique(labels))
    seen_set = set(seen)
    seps: dict[tuple[int, int], BinarySeparator] = {}
    groups = {a: np.unique(ids[labels == a]) for a in seen}
    for a in range(1, k + 1):
        for b in range(1, k + 1):
            if a == b:
                continue
            if a in seen_set and b in seen_set:
                if antisymmetric and (b, a) in seps:
                    flipped = _negate(seps[(b, a)])
                    if _fits(flipped, instance, groups[a], groups[b]):
                        seps[(a, b)] = flipped
                        continue
                try:
                    seps[(a, b)] = _fit_pair(instance, groups[a], groups[b])
                except NonSeparableError as exc:
                    raise NonSeparableError(f"labels ({a}, {b}): {exc}", pair=(a, b)) from exc
            elif a in seen_set:
                seps[(a, b)] = BinarySeparator.constant(+1)
            else:
                seps[(a, b)] = BinarySeparator.constant(-1)
    kind = "euclidean" if instance.is_euclidean else "finite_metric"
    return Classifier(k=k, seen_labels=seen, separators=seps, kind=kind)


def _fit_pair(instance, pos_ids, neg_ids) -> BinarySeparator:
    if np.intersect1d(pos_ids, neg_ids).size:
        raise NonSeparableError("the same point carries both labels")
    if instance.is_euclidean:
        return fit_separator_euclidean(instance.points[pos_ids], instance.points[neg_ids])
    return fit_separator_fms(instance, pos_ids, neg_ids)


def _fits(g: BinarySeparator, instance, pos_ids, neg_ids) -> bool:
    return bool(np.all(g.predict(instance, pos_ids) == 1) and np.all(g.predict(instance, neg_ids) == -1))


def _negate(g: BinarySeparator) -> BinarySeparator:
    if g.kind == HALFSPACE:
        return BinarySeparator(kind=HALFSPACE, w=tuple(-v for v in g.w), b=-g.b)
    if g.kind == CONSTANT:
        return BinarySeparator.constant(-g.value)
    # opposite sign except on distance ties, hence the _fits check by callers
    return BinarySeparator(kind=CANDIDATE_PAIR, q1=g.q2, q2=g.q1)


def predict(classifier: Classifier, instance: ClusterInstance, p) -> int:
    """Predict one point: a point id, or (Euclidean only) a coordinate vector."""
    if isinstance(p, (int, np.integer)):
        return int(classifier.predict(instance, ids=[int(p)])[0])
    if not instance.is_euclidean:
        raise InvalidArgumentError("finite-metric prediction needs a point id")
    return int(classifier.predict(instance, x=np.atleast_2d(p))[0])


# -- sample complexity ----------------------------------------------------


def _check_common(k, eps, delta, C):
    if not (0 < eps < 1 and 0 < delta < 1):
        raise InvalidArgumentError("eps and delta must lie in (0, 1)")
    if k < 1:
        raise InvalidArgumentError("k must be >= 1")
    if C <= 0:
        raise InvalidArgumentError("scale constant C must be positive")


def _finish(value: float, max_samples: int | None) -> int:
    m = max(1, math.ceil(value))
    return m if max_samples is None else min(m, int(max_samples))


def sample_complexity_euclidean(r: int, k: int, eps: float, delta: float, C: float = 1.0,
                                max_samples: int | None = DEFAULT_MAX_SAMPLES) -> int:
    """ceil(C (k^2 r ln(k^2 r) ln(k^3 r / eps) + ln(1/delta)) / eps), at least 1."""
    _check_common(k, eps, delta, C)
    if r < 1:
        raise InvalidArgumentError("r must be >= 1")
    k2r = k * k * r
    value = C * (k2r * math.log(k2r) * math.log(k ** 3 * r / eps) + math.log(1 / delta)) / eps
    return _finish(value, max_samples)


def sample_complexity_fms(qsize: int, k: int, eps: float, delta: float, C: float = 1.0,
                          max_samples: int | None = DEFAULT_MAX_SAMPLES) -> int:
    """ceil(C (k^2 ln k ln|Q| (ln k + ln(1/eps)) + ln(1/delta)) / eps), at least 1."""
    _check_common(k, eps, delta, C)
    if qsize < 1:
        raise InvalidArgumentError("|Q| must be >= 1")
    value = C * (k * k * math.log(k) * math.log(qsize) * (math.log(k) + math.log(1 / eps))
                 + math.log(1 / delta)) / eps
    return _finish(value, max_samples)


def sample_complexity(instance: ClusterInstance, eps: float, delta: float, C: float = 1.0,
                      max_samples: int | None = DEFAULT_MAX_SAMPLES) -> int:
    if instance.is_euclidean:
        return sample_complexity_euclidean(instance.dim, instance.k, eps, delta, C, max_samples)
    return sample_complexity_fms(instance.n_candidates, instance.k, eps, delta, C, max_samples)
