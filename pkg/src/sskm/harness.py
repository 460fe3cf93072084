"""Experiment runner: seed grids over the three algorithms, CSV output,
and the statistical checks used by ``sskm verify``."""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .algo_fast import FastConfig, run_fast_algorithm
from .algo_ring import RingConfig, run_ring_algorithm
from .core import ClusterInstance, GroundTruth, accuracy, load_instance, planted_cost
from .errors import InvalidArgumentError, SSKMError
from .instances import (brute_force_optimum, gen_fms_from_subsets, gen_gaussian,
                        gen_hypercube_lb, gen_random_metric)
from .oracle import OracleSession
from .solvers import SolverConfig, a_alpha

COLUMNS = ["algo", "seed", "n", "k", "dim_or_qsize", "power", "epsilon", "delta",
           "sc_queries", "label_queries", "cost", "cost_ratio", "accuracy",
           "runtime_ms", "status"]
ALGORITHMS = ("ring", "fast", "baseline")
SETTING_KEYS = {"alpha", "c_med", "sample_cap", "cap_factor", "dsq_batch", "boost_rounds",
                "C", "max_samples", "q1_cap", "step4_cap", "alpha_restarts",
                "reference_restarts", "antisymmetric", "timing", "workers"}
REFERENCE_NOTE = "reference cost = brute-force optimum if n <= 12, else min(planted cost, best baseline over restarts)"
BRUTE_FORCE_MAX_N = 12

GENERATORS = {
    "gaussian": lambda p: gen_gaussian(int(p.get("k", 4)), int(p.get("n", 400)),
                                       int(p.get("r", 2)), float(p.get("separation", 20.0)),
                                       int(p.get("seed", 0)), int(p.get("power", 2))),
    "hypercube": lambda p: gen_hypercube_lb(int(p.get("r", 2))),
    "fms-subsets": lambda p: gen_fms_from_subsets(int(p.get("r", 2))),
    "random-metric": lambda p: gen_random_metric(int(p.get("n", 40)), int(p.get("m", 10)),
                                                 int(p.get("k", 3)), int(p.get("seed", 0)),
                                                 power=int(p.get("power", 2))),
}


def generate(family: str, params: dict) -> tuple[ClusterInstance, GroundTruth]:
    if family not in GENERATORS:
        raise InvalidArgumentError(f"unknown family {family!r}; choose from {sorted(GENERATORS)}")
    try:
        return GENERATORS[family](params)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, SSKMError):
            raise
        raise InvalidArgumentError(f"bad generator parameters: {exc}") from exc


def check_settings(settings: dict) -> dict:
    unknown = set(settings) - SETTING_KEYS
    if unknown:
        raise InvalidArgumentError(f"unknown config keys: {sorted(unknown)}")
    for key, value in settings.items():
        if key in ("antisymmetric", "timing"):
            if not isinstance(value, bool):
                raise InvalidArgumentError(f"{key} must be true or false")
        elif value is not None and (isinstance(value, bool) or not isinstance(value, (int, float))
                                    or value <= 0):
            raise InvalidArgumentError(f"{key} must be a positive number")
    return settings


def _solver_config(s: dict) -> SolverConfig:
    return SolverConfig(alpha_restarts=int(s.get("alpha_restarts", 5)),
                        dsq_batch=s.get("dsq_batch"), boost_rounds=s.get("boost_rounds"))


def _opt_int(v):
    return None if v is None else int(v)


def ring_config(s: dict) -> RingConfig:
    return RingConfig(c_med=float(s.get("c_med", 96.0)), C=float(s.get("C", 1.0)),
                      max_samples=_opt_int(s.get("max_samples", 100_000)),
                      sample_cap=_opt_int(s.get("sample_cap")), cap_factor=s.get("cap_factor"),
                      antisymmetric=bool(s.get("antisymmetric", False)),
                      solver=_solver_config(s))


def fast_config(s: dict) -> FastConfig:
    return FastConfig(q1_cap=_opt_int(s.get("q1_cap", s.get("sample_cap"))),
                      step4_cap=_opt_int(s.get("step4_cap", s.get("sample_cap"))),
                      C=float(s.get("C", 1.0)),
                      max_samples=_opt_int(s.get("max_samples", 100_000)),
                      antisymmetric=bool(s.get("antisymmetric", False)),
                      solver=_solver_config(s))


def reference_cost(instance: ClusterInstance, truth: GroundTruth | None,
                   restarts: int = 50) -> float:
    """Best known cost: exact when brute force is cheap, else the lower of
    the planted clustering and the best of ``restarts`` baseline runs."""
    if instance.n <= BRUTE_FORCE_MAX_N and not (instance.is_euclidean and instance.power != 2):
        return brute_force_optimum(instance)
    best = a_alpha(instance, seed=0, config=SolverConfig(alpha_restarts=restarts)).cost
    if truth is not None:
        best = min(best, planted_cost(instance, truth))
    return best


@dataclass
class Cell:
    algo: str
    seed: int
    instance: ClusterInstance
    truth: GroundTruth | None
    eps: float
    delta: float
    settings: dict
    reference: float


def _run_cell(cell: Cell) -> dict:
    inst = cell.instance
    row = {"algo": cell.algo, "seed": cell.seed, "n": inst.n, "k": inst.k,
           "dim_or_qsize": inst.dim if inst.is_euclidean else inst.n_candidates,
           "power": inst.power, "epsilon": cell.eps, "delta": cell.delta,
           "sc_queries": "", "label_queries": "", "cost": "", "cost_ratio": "",
           "accuracy": "", "runtime_ms": "", "status": "ok"}
    start = time.perf_counter()
    try:
        if cell.algo == "baseline":
            result = a_alpha(inst, seed=cell.seed, config=_solver_config(cell.settings))
            row["sc_queries"], row["label_queries"] = 0, 0
        else:
            if cell.truth is None:
                raise InvalidArgumentError("oracle algorithms need ground truth")
            session = OracleSession(cell.truth)
            if cell.algo == "ring":
                result, report = run_ring_algorithm(
                    inst, session, cell.eps, cell.delta, float(cell.settings.get("alpha", 20.0)),
                    ring_config(cell.settings), seed=cell.seed)
            else:
                result, report = run_fast_algorithm(
                    inst, session, cell.eps, cell.delta, fast_config(cell.settings),
                    seed=cell.seed)
            row["sc_queries"], row["label_queries"] = report.same_cluster, report.label_queries
    except SSKMError as exc:
        row["status"] = f"{type(exc).__name__}: {exc}".replace("\n", " ")
        return row
    row["cost"] = result.cost
    if cell.reference > 0:
        row["cost_ratio"] = result.cost / cell.reference
    else:
        row["cost_ratio"] = 1.0 if result.cost == 0 else math.inf
    if cell.truth is not None:
        row["accuracy"] = accuracy(result.labels, cell.truth.reveal(), inst.k)
    if cell.settings.get("timing"):
        row["runtime_ms"] = round((time.perf_counter() - start) * 1000, 3)
    return row


def run_experiment(config: dict) -> list[dict]:
    """Run every (seed, algorithm) cell of ``config``; rows come back in
    seed-major, algorithm-minor order regardless of parallelism.

    Keys: ``instance`` (path) or ``generator`` ({"family", "params"});
    ``algo`` (name or list); ``epsilon``; ``delta``; ``seeds`` (list);
    ``settings`` (see :data:`SETTING_KEYS`).
    """
    settings = check_settings(dict(config.get("settings", {})))
    if "instance" in config:
        instance, truth = load_instance(config["instance"])
    elif "generator" in config:
        g = config["generator"]
        instance, truth = generate(g["family"], g.get("params", {}))
    else:
        raise InvalidArgumentError("config needs an instance path or a generator spec")
    algos = config.get("algo", "baseline")
    algos = [algos] if isinstance(algos, str) else list(algos)
    for a in algos:
        if a not in ALGORITHMS:
            raise InvalidArgumentError(f"unknown algorithm {a!r}")
    eps, delta = float(config.get("epsilon", 0.2)), float(config.get("delta", 0.2))
    if not (0 < eps < 1 and 0 < delta < 1):
        raise InvalidArgumentError("epsilon and delta must lie in (0, 1)")
    seeds = [int(s) for s in config.get("seeds", [0])]
    ref = reference_cost(instance, truth, int(settings.get("reference_restarts", 50)))
    cells = [Cell(a, s, instance, truth, eps, delta, settings, ref) for s in seeds for a in algos]
    workers = int(settings.get("workers", 1))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_cell, cells))
    return [_run_cell(c) for c in cells]


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    buf.write(f"# {REFERENCE_NOTE}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in COLUMNS])
    return buf.getvalue()


def write_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(rows_to_csv(rows))


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(lines))


# -- statistical checks ---------------------------------------------------


def estimate_sample_mean(eps: float, delta: float, trials: int, points, seed: int = 0,
                   m: int | None = None, rtol: float = 1e-12) -> dict:
    """Failure rate of the sample-mean guarantee for uniform samples.

    Each trial draws m = ceil(1/(eps delta)) points (or the given ``m``)
    with replacement and checks d^2(mu(S), mu(C)) <= eps cost(C)/|C| and
    cost(C, mu(S)) <= (1 + eps) cost(C). The contract is
    rate <= delta + 3 sqrt(delta / trials).
    """
    if not (0 < eps < 1 and 0 < delta < 1):
        raise InvalidArgumentError("eps and delta must lie in (0, 1)")
    if trials < 100:
        raise InvalidArgumentError("need at least 100 trials")
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    size = math.ceil(1 / (eps * delta)) if m is None else int(m)
    rng = np.random.default_rng(seed)
    mu = x.mean(axis=0)
    cost_c = float(((x - mu) ** 2).sum())
    scale = cost_c + float((x ** 2).sum()) + 1.0
    samples = rng.integers(0, len(x), size=(trials, size))
    mu_s = x[samples].mean(axis=1)
    d2 = ((mu_s - mu) ** 2).sum(axis=1)
    cost_s = np.array([float(((x - c) ** 2).sum()) for c in mu_s])
    bad1 = d2 > eps * cost_c / len(x) + rtol * scale / len(x)
    bad2 = cost_s > (1 + eps) * cost_c + rtol * scale
    failures = int(np.count_nonzero(bad1 | bad2))
    rate = failures / trials
    bound = delta + 3 * math.sqrt(delta / trials)
    return {"m": size, "trials": trials, "failures": failures, "rate": rate,
            "bound": bound, "passed": rate <= bound}
