"""Same-cluster oracle and the label oracle built on top of it.

Every same-cluster evaluation is counted, including self-queries and
repeats. ``query_label`` keeps a list of one representative per target
cluster, in first-encounter order, and answers with the 1-based position of
the matching representative. Once all k representatives exist, a miss on
the first k - 1 of them settles the answer without a k-th query.
"""

from __future__ import annotations

from typing import IO

import numpy as np

from .errors import InvalidArgumentError
from .core import GroundTruth


class OracleSession:
    """One algorithm run's view of the ground truth.

    Not safe for concurrent use; give each parallel trial its own session.
    """

    def __init__(self, truth: GroundTruth, log: IO[str] | None = None):
        self._truth = truth.reveal()
        self.k = truth.k
        self.same_cluster_count = 0
        self.label_count = 0
        self.representatives: list[int] = []
        # target label -> session label, fed only by answered queries
        self._session_of = np.zeros(truth.k + 1, dtype=np.int64)
        self._log = log

    @property
    def n(self) -> int:
        return self._truth.size

    def _check(self, p) -> int:
        if isinstance(p, (bool, np.bool_)) or not isinstance(p, (int, np.integer)):
            raise InvalidArgumentError(f"point id must be an integer, got {p!r}")
        if not 0 <= p < self.n:
            raise InvalidArgumentError(f"unknown point id {p}")
        return int(p)

    def same_cluster(self, p, q) -> bool:
        p, q = self._check(p), self._check(q)
        self.same_cluster_count += 1
        result = bool(self._truth[p] == self._truth[q])
        if self._log is not None:
            self._log.write(f"SC {p} {q} {int(result)}\n")
        return result

    def query_label(self, p) -> int:
        p = self._check(p)
        self.label_count += 1
        label = None
        reps = self.representatives
        full = len(reps) == self.k
        for i, rep in enumerate(reps, start=1):
            if full and i == self.k:
                label = i
                break
            if self.same_cluster(p, rep):
                label = i
                break
        if label is None:
            self.representatives.append(p)
            label = len(self.representatives)
            self._session_of[self._truth[p]] = label
        if self._log is not None:
            self._log.write(f"LABEL {p} {label}\n")
        return label

    def query_labels(self, ids) -> np.ndarray:
        """Label a batch of points, in order, with exactly the accounting of
        repeated :meth:`query_label` calls."""
        ids = np.asarray(ids)
        if ids.size and ids.dtype.kind not in "iu":
            raise InvalidArgumentError("point ids must be integers")
        ids = ids.astype(np.int64).ravel()
        if ids.size and (ids.min() < 0 or ids.max() >= self.n):
            raise InvalidArgumentError("unknown point id in batch")
        if self._log is not None:
            return np.array([self.query_label(int(p)) for p in ids], dtype=np.int64)
        true = self._truth[ids]
        out = np.empty(ids.size, dtype=np.int64)
        start = 0
        while start < ids.size:
            known = self._session_of[true[start:]]
            fresh = np.flatnonzero(known == 0)
            stop = ids.size if fresh.size == 0 else start + int(fresh[0])
            if stop > start:
                labels = self._session_of[true[start:stop]]
                out[start:stop] = labels
                if len(self.representatives) == self.k:
                    labels = np.minimum(labels, self.k - 1)
                self.same_cluster_count += int(labels.sum())
            if stop < ids.size:
                # new cluster: scans every existing representative, then joins
                self.same_cluster_count += len(self.representatives)
                self.representatives.append(int(ids[stop]))
                self._session_of[true[stop]] = len(self.representatives)
                out[stop] = len(self.representatives)
                stop += 1
            start = stop
        self.label_count += ids.size
        return out

    def session_labels_of_truth(self) -> dict[int, int]:
        """Target label -> session label, for evaluation code only."""
        return {t: int(s) for t, s in enumerate(self._session_of) if t and s}


def check_oracle_accounting(trials: int = 1000, max_n: int = 200, max_k: int = 8,
                            seed: int = 0) -> dict:
    """Randomized audit of query_label: zero induced error, per-call query
    bounds, and the counter against an independent shadow simulation."""
    from .core import clustering_error

    rng = np.random.default_rng(seed)
    failures = []
    for t in range(trials):
        k = int(rng.integers(1, max_k + 1))
        n = int(rng.integers(k, max_n + 1))
        truth = rng.integers(1, k + 1, size=n)
        truth[rng.permutation(n)[:k]] = np.arange(1, k + 1)
        session = OracleSession(GroundTruth(truth, k=k))
        order = rng.integers(0, n, size=int(rng.integers(n, 2 * n + 1)))
        shadow_reps: list[int] = []
        shadow = 0
        labels = np.zeros(n, dtype=np.int64)
        for p in order:
            before = session.same_cluster_count
            full = len(session.representatives) == k
            got = session.query_label(int(p))
            spent = session.same_cluster_count - before
            if truth[p] in shadow_reps:
                pos = shadow_reps.index(truth[p]) + 1
                shadow += min(pos, k - 1) if len(shadow_reps) == k else pos
                want = pos
            else:
                shadow += len(shadow_reps)
                shadow_reps.append(truth[p])
                want = len(shadow_reps)
            if got != want or (full and spent > k - 1) or spent > k:
                failures.append((t, "per-call"))
                break
            labels[p] = got
        else:
            seen = np.unique(order)
            if clustering_error(labels[seen], truth[seen], k) != 0:
                failures.append((t, "error"))
        if session.same_cluster_count != shadow:
            failures.append((t, "counter"))
    return {"trials": trials, "failures": failures, "passed": not failures}
