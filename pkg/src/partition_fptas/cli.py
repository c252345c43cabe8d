"""Command-line front end: ``solve``, ``oracle``, ``bench`` and ``selftest``.

Every flag can also be set through an environment variable named
``PARTITION_FPTAS_<FLAG>`` (upper case, dashes as underscores); explicit
flags win.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import time
from fractions import Fraction

import numpy as np

from . import __version__, stats
from .intset import INT64_MAX
from .oracle import OracleLimitError, exact_partition_opt
from .pipeline import LimitError, PartitionInstance, solve_partition

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INPUT = 2
EXIT_LIMITS = 3

ENV_PREFIX = "PARTITION_FPTAS_"

# peak memory is roughly 3.5 KB per unit of internal precision
DEFAULT_LIMITS = {"max_internal": 1 << 20, "oracle_max_sum": 10**7}


class InputError(ValueError):
    pass


def _env(name: str, default=None):
    return os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"), default)


# ---------------------------------------------------------------- parsing


def parse_values(text: str) -> list[int]:
    """Whitespace separated positive integers; ``#`` starts a comment."""
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0]
        for tok in line.split():
            try:
                v = int(tok, 10)
            except ValueError:
                raise InputError(f"line {lineno}: not an integer: {tok!r}") from None
            if v < 1:
                raise InputError(f"line {lineno}: values must be positive, got {v}")
            if v > INT64_MAX:
                raise LimitError(f"line {lineno}: value exceeds the 64-bit range")
            out.append(v)
    if sum(out) > INT64_MAX:
        raise LimitError("total exceeds the 64-bit range")
    return out


def parse_epsilon(text: str) -> int:
    """``0.1`` or ``1/10`` to the integer ``E = ceil(1/ε)``."""
    try:
        eps = Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise InputError(f"cannot parse epsilon {text!r}") from None
    if eps <= 0 or eps >= 1:
        raise InputError("epsilon must lie in (0, 1)")
    E = math.ceil(1 / eps)
    return max(E, 2)


def parse_limits(text: str | None) -> dict:
    limits = dict(DEFAULT_LIMITS)
    if not text:
        return limits
    for part in text.split(","):
        if not part.strip():
            continue
        key, sep, val = part.partition("=")
        key = key.strip()
        if not sep or key not in limits:
            raise InputError(f"unknown limit {part!r}; known: {', '.join(limits)}")
        try:
            limits[key] = int(val)
        except ValueError:
            raise InputError(f"limit {key} needs an integer") from None
    return limits


def digest(values) -> str:
    h = hashlib.sha256()
    h.update(" ".join(map(str, values)).encode())
    return "sha256:" + h.hexdigest()


def _read_input(path: str | None) -> str:
    if path in (None, "-"):
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except UnicodeDecodeError:
        raise InputError(f"{path} is not text") from None


# ---------------------------------------------------------------- output


def _flatten(d, prefix=""):
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            yield from _flatten(v, key + ".")
        elif isinstance(v, list):
            yield key, ",".join(map(str, v))
        else:
            yield key, v


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2, sort_keys=True) + "\n"
    return "".join(f"{k}\t{v}\n" for k, v in _flatten(report))


def _emit(text: str, path: str | None):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


# ---------------------------------------------------------------- commands


def run_solve(args) -> dict:
    values = parse_values(_read_input(args.input))
    E = parse_epsilon(args.epsilon)
    limits = parse_limits(args.limits)
    c = Fraction(args.constant_c)
    if c <= 0:
        raise InputError("--constant-c must be positive")
    inst = PartitionInstance(values, E)
    timings = {} if args.timings else None
    t0 = time.perf_counter()
    with stats.collecting() as counters:
        sol = solve_partition(inst, c=c, threads=args.threads, timings=timings,
                              max_internal=limits["max_internal"])
    resum = sum(values[i] for i in sol.subset_indices)
    assert resum == sol.achieved_sum
    report = {
        "input_digest": digest(values),
        "n": len(values),
        "total": inst.total,
        "epsilon": f"1/{E}",
        "epsilon_inv": E,
        "threshold_constant": str(c),
        "method": sol.method,
        "achieved_sum": sol.achieved_sum,
        "subset_size": len(sol.subset_indices),
        "subset_indices": sol.subset_indices,
        "error_budget": sol.error_budget or {},
        "counters": counters.as_dict(),
    }
    if args.check:
        opt, _ = exact_partition_opt(values, max_sum=limits["oracle_max_sum"])
        report["opt"] = opt
        report["guarantee_holds"] = (E - 1) * opt <= E * sol.achieved_sum <= E * opt
    if timings is not None:
        timings["total"] = time.perf_counter() - t0
        report["timings"] = {k: round(v, 6) for k, v in timings.items()}
    return report


def run_oracle(args) -> dict:
    values = parse_values(_read_input(args.input))
    limits = parse_limits(args.limits)
    opt, witness = exact_partition_opt(values, max_sum=limits["oracle_max_sum"])
    return {
        "input_digest": digest(values),
        "n": len(values),
        "total": sum(values),
        "opt": opt,
        "subset_indices": witness,
    }


BENCH_FIELDS = ["n", "epsilon_inv", "seed", "max_value", "wall_s", "plan_s", "rp_s",
                "classes_s", "combine_s", "recover_s", "K", "achieved_sum", "total"]


def generate_instance(n: int, max_value: int, seed: int) -> list[int]:
    rng = np.random.default_rng(seed)
    return rng.integers(1, max_value, size=n, endpoint=True).tolist()


def run_bench(args) -> str:
    limits = parse_limits(args.limits)
    c = Fraction(args.constant_c)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=BENCH_FIELDS, lineterminator="\n")
    writer.writeheader()
    for n in args.n:
        for E in args.epsilon_inv:
            values = generate_instance(n, args.max_value, args.seed)
            timings = {}
            t0 = time.perf_counter()
            sol = solve_partition(PartitionInstance(values, E), c=c, threads=args.threads,
                                  timings=timings, max_internal=limits["max_internal"])
            wall = time.perf_counter() - t0
            row = {"n": n, "epsilon_inv": E, "seed": args.seed, "max_value": args.max_value,
                   "wall_s": f"{wall:.4f}", "achieved_sum": sol.achieved_sum, "total": sol.total,
                   "K": (sol.error_budget or {}).get("K", 0)}
            for stage in ("plan", "rp", "classes", "combine", "recover"):
                row[f"{stage}_s"] = f"{timings.get(stage, 0.0):.4f}"
            writer.writerow(row)
            if args.progress:
                print(f"n={n} E={E} {wall:.2f}s", file=sys.stderr)
    return buf.getvalue()


def run_selftest(args) -> bool:
    """Random instances against the exact optimum; prints one line per case."""
    rng = np.random.default_rng(args.seed)
    ok = True
    for case in range(args.cases):
        n = int(rng.integers(1, 19))
        E = int(rng.choice([3, 10, 20]))
        values = rng.integers(1, 10**4, size=n, endpoint=True).tolist()
        sol = solve_partition(PartitionInstance(values, E))
        opt, _ = exact_partition_opt(values)
        good = ((E - 1) * opt <= E * sol.achieved_sum <= E * opt
                and sum(values[i] for i in sol.subset_indices) == sol.achieved_sum)
        ok &= good
        if args.verbose or not good:
            print(f"case {case}: n={n} E={E} opt={opt} got={sol.achieved_sum} {'ok' if good else 'FAIL'}")
    print(f"selftest {'passed' if ok else 'FAILED'} ({args.cases} cases)")
    return ok


# ---------------------------------------------------------------- parser


def _int_list(text: str) -> list[int]:
    try:
        return [int(float(t)) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="partition-fptas", description="Approximate Partition solver")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", default=_env("input", "-"), help="instance file, '-' for stdin")
    common.add_argument("--output", default=_env("output", "-"), help="report file, '-' for stdout")
    common.add_argument("--format", choices=["json", "tsv"], default=_env("format", "json"))
    common.add_argument("--limits", default=_env("limits"),
                        help="comma separated key=value: max_internal, oracle_max_sum")

    tuning = argparse.ArgumentParser(add_help=False)
    tuning.add_argument("--threads", type=int, default=int(_env("threads", "1")))
    tuning.add_argument("--constant-c", default=_env("constant_c", "1"),
                        help="size-threshold constant (rational, e.g. 1 or 1/1000)")

    s = sub.add_parser("solve", parents=[common, tuning], help="approximate an instance")
    s.add_argument("--epsilon", default=_env("epsilon", "0.1"), help="decimal or 1/E")
    s.add_argument("--check", action="store_true", help="also compute the exact optimum")
    s.add_argument("--timings", action="store_true", help="include wall time per stage")

    sub.add_parser("oracle", parents=[common], help="exact optimum for small instances")

    b = sub.add_parser("bench", parents=[tuning], help="timing sweep, CSV output")
    b.add_argument("--n", type=_int_list, default=_int_list(_env("n", "1000,10000")))
    b.add_argument("--epsilon-inv", type=_int_list, default=_int_list(_env("epsilon_inv", "10,20,40")))
    b.add_argument("--max-value", type=int, default=int(_env("max_value", str(10**9))))
    b.add_argument("--seed", type=int, default=int(_env("seed", "0")))
    b.add_argument("--output", default=_env("output", "-"))
    b.add_argument("--limits", default=_env("limits"))
    b.add_argument("--progress", action="store_true")

    t = sub.add_parser("selftest", help="compare against the exact oracle")
    t.add_argument("--cases", type=int, default=int(_env("cases", "50")))
    t.add_argument("--seed", type=int, default=int(_env("seed", "0")))
    t.add_argument("--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        if getattr(args, "threads", 1) < 1:
            raise InputError("--threads must be at least 1")
        if args.command == "solve":
            _emit(render(run_solve(args), args.format), args.output)
        elif args.command == "oracle":
            _emit(render(run_oracle(args), args.format), args.output)
        elif args.command == "bench":
            _emit(run_bench(args), args.output)
        else:
            return EXIT_OK if run_selftest(args) else EXIT_FAILED
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (LimitError, OracleLimitError, OverflowError, MemoryError) as exc:
        print(f"limit exceeded: {exc}", file=sys.stderr)
        return EXIT_LIMITS
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
