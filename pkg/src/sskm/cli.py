"""Command line entry point: ``sskm gen``, ``sskm run``, ``sskm verify``.

Exit codes: 0 success, 1 a verification check failed, 2 invalid
arguments or config, 3 algorithm error (the CSV is still written).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .core import check_squared_triangle, save_instance
from .errors import InvalidArgumentError, SSKMError
from .harness import GENERATORS, estimate_sample_mean, generate, run_experiment, write_csv
from .instances import verify_hypercube_optima
from .oracle import check_oracle_accounting

EXIT_OK, EXIT_CHECK_FAILED, EXIT_INVALID, EXIT_ALGORITHM = 0, 1, 2, 3
CHECKS = ("lemma51", "inaba", "triangle", "oracle")


def parse_params(items: list[str] | None) -> dict:
    """``key=value`` pairs; values are read as JSON when possible."""
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise InvalidArgumentError(f"expected key=value, got {item!r}")
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            out[key] = value
    return out


def parse_range(text) -> list[int]:
    """``"3"``, ``"0..19"`` (inclusive) or ``"1,4,9"``."""
    text = str(text)
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise InvalidArgumentError(f"empty range {text!r}")
            return list(range(lo, hi + 1))
        return [int(v) for v in text.split(",")]
    except ValueError as exc:
        raise InvalidArgumentError(f"bad integer range {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sskm", description="Semi-supervised k-means tools")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate an instance file")
    g.add_argument("--family", required=True, choices=sorted(GENERATORS))
    g.add_argument("--params", nargs="*", default=[], metavar="KEY=VALUE")
    g.add_argument("--out", required=True)

    r = sub.add_parser("run", help="run algorithms over a seed range")
    r.add_argument("--algo", required=True,
                   help="ring, fast or baseline; comma separated for several")
    r.add_argument("--instance", required=True)
    r.add_argument("--epsilon", type=float, required=True)
    r.add_argument("--delta", type=float, required=True)
    r.add_argument("--seeds", default="0")
    r.add_argument("--config", help="JSON file of algorithm settings")
    r.add_argument("--out", required=True)

    v = sub.add_parser("verify", help="run a self-check")
    v.add_argument("--check", required=True, choices=CHECKS)
    v.add_argument("--params", nargs="*", default=[], metavar="KEY=VALUE")
    return parser


def _gen(args) -> int:
    instance, truth = generate(args.family, parse_params(args.params))
    save_instance(args.out, instance, truth)
    return EXIT_OK


def _run(args) -> int:
    settings = {}
    if args.config:
        try:
            with open(args.config) as fh:
                settings = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidArgumentError(f"cannot read config: {exc}") from exc
        if not isinstance(settings, dict):
            raise InvalidArgumentError("config must be a JSON object")
    rows = run_experiment({
        "instance": args.instance, "algo": args.algo.split(","), "epsilon": args.epsilon,
        "delta": args.delta, "seeds": parse_range(args.seeds), "settings": settings,
    })
    write_csv(rows, args.out)
    return EXIT_OK if all(row["status"] == "ok" for row in rows) else EXIT_ALGORITHM


def _verify(args) -> int:
    p = parse_params(args.params)
    if args.check == "lemma51":
        reports = [verify_hypercube_optima(r) for r in parse_range(p.get("r", "1..6"))]
        result = {"reports": reports, "passed": all(x["passed"] for x in reports)}
    elif args.check == "inaba":
        count = int(p.get("points", 1000))
        result = estimate_sample_mean(float(p.get("eps", 0.2)), float(p.get("delta", 0.2)),
                                int(p.get("trials", 1000)), np.linspace(0.0, 1.0, count),
                                seed=int(p.get("seed", 0)),
                                m=None if p.get("m") is None else int(p["m"]))
    elif args.check == "triangle":
        result = check_squared_triangle(int(p.get("samples", 100_000)), int(p.get("seed", 0)))
    else:
        result = check_oracle_accounting(int(p.get("trials", 1000)), int(p.get("max_n", 200)),
                                         int(p.get("max_k", 8)), int(p.get("seed", 0)))
        result["failures"] = len(result["failures"])
    print(json.dumps(result, indent=2, sort_keys=True, default=float))
    return EXIT_OK if result["passed"] else EXIT_CHECK_FAILED


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"gen": _gen, "run": _run, "verify": _verify}[args.command]
    try:
        return handler(args)
    except InvalidArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SSKMError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ALGORITHM
    except (OSError, KeyError, TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
