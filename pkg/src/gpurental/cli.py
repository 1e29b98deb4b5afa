"""Command-line interface: validate, solve, gen-trace, simulate, pareto, compare.

Exit codes: 0 success, 1 validation failure, 2 instability (total load >=
budget), 3 I/O or parse errors.  All numbers are printed with 12 significant
digits so repeated runs with the same inputs are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .errors import BruteForceError, InstabilityError, SpecError, TraceError
from .optimizer import SolverConfig, pareto_frontier, solve_allocation
from .simulator import (
    FixedWidth,
    Policy,
    SimMetrics,
    SmallestRemainingFirst,
    StaticClusterEqualSplit,
    UniformWidth,
    budget_timeseries,
    compare_policies,
    simulate,
)
from .speedup import validate as validate_speedup
from .workload import WorkloadSpec, generate_trace, load_spec, read_trace, write_trace

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_UNSTABLE = 2
EXIT_IO = 3


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def _json_ready(value):
    """Round floats to 12 significant digits for reproducible output."""
    if isinstance(value, float):
        return float(_fmt(value))
    if isinstance(value, dict):
        return {k: _json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_ready(v) for v in value]
    return value


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _require_files(*paths: str | None) -> None:
    for p in paths:
        if p is not None and not os.path.exists(p):
            raise TraceError(f"no such file: {p}")


def parse_policy(text: str, spec: WorkloadSpec, cfg: SolverConfig) -> Policy:
    """Parse a policy string: optimal | fixed:k1,..,kM | uniform:k |
    cluster:C | srf:C,kcap."""
    if text == "optimal":
        return FixedWidth(solve_allocation(spec, cfg).ks)
    kind, _, rest = text.partition(":")
    try:
        if kind == "fixed":
            return FixedWidth(tuple(float(x) for x in rest.split(",")))
        if kind == "uniform":
            return UniformWidth(float(rest))
        if kind == "cluster":
            return StaticClusterEqualSplit(float(rest))
        if kind == "srf":
            c, cap = rest.split(",")
            return SmallestRemainingFirst(float(c), float(cap))
    except (ValueError, TypeError) as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(f"bad policy arguments in {text!r}: {exc}") from None
    raise SpecError(f"unknown policy {text!r}")


def _cmd_validate(args) -> int:
    spec = load_spec(args.spec)
    axioms_ok = True
    for jt in spec.types:
        report = validate_speedup(jt.speedup, k_max=args.k_max)
        states = " ".join(f"{c.name}={'pass' if c.passed else 'FAIL'}" for c in report.checks())
        print(f"type {jt.name!r}: {states}")
        for check in report.checks():
            if not check.passed and check.detail:
                print(f"  {check.name}: {check.detail}")
        axioms_ok &= report.ok
    stable = spec.total_load < spec.budget
    rel = "<" if stable else ">="
    print(f"stability: total load {_fmt(spec.total_load)} {rel} budget {_fmt(spec.budget)}")
    if not axioms_ok:
        print("FAILED: speedup axioms violated")
        return EXIT_VALIDATION
    if not stable:
        print("FAILED: unstable workload")
        return EXIT_UNSTABLE
    print("OK")
    return EXIT_OK


def _cmd_solve(args) -> int:
    spec = load_spec(args.spec)
    cfg = SolverConfig(k_max=args.k_max)
    alloc = solve_allocation(spec, cfg)
    text = json.dumps(_json_ready(alloc.to_dict()), indent=2) + "\n"
    _emit(text, args.out)
    if args.out:
        print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_gen_trace(args) -> int:
    spec = load_spec(args.spec)
    trace = generate_trace(spec, args.jobs, args.seed, arrivals=args.arrivals)
    write_trace(trace, args.out)
    print(f"wrote {len(trace)} events to {args.out}")
    return EXIT_OK


def _metrics_json(metrics: SimMetrics) -> str:
    return json.dumps(_json_ready(metrics.to_dict()), indent=2) + "\n"


def _cmd_simulate(args) -> int:
    spec = load_spec(args.spec)
    trace = read_trace(args.trace)
    cfg = SolverConfig(k_max=args.k_max)
    policy = parse_policy(args.policy, spec, cfg)
    metrics = simulate(trace, spec, policy, collect_per_job=bool(args.per_job))
    sys.stdout.write(_metrics_json(metrics))
    if args.per_job:
        rows = ["arrival,completion,response,gpu_hours"]
        if metrics.per_job is not None:
            for a, c, r, g in metrics.per_job:
                rows.append(f"{_fmt(a)},{_fmt(c)},{_fmt(r)},{_fmt(g)}")
        _emit("\n".join(rows) + "\n", args.per_job)
    if args.timeseries:
        series = budget_timeseries(trace, spec, policy, args.timeseries_step)
        rows = ["t,K"]
        for t, k in series:
            rows.append(f"{_fmt(t)},{_fmt(k)}")
        _emit("\n".join(rows) + "\n", args.timeseries)
    return EXIT_OK


def _cmd_pareto(args) -> int:
    spec = load_spec(args.spec)
    cfg = SolverConfig(k_max=args.k_max)
    if args.points < 1:
        raise SpecError("--points must be >= 1")
    budgets = np.linspace(args.b_min, args.b_max, args.points)
    workers = None
    env = os.environ.get("RENTAL_THREADS")
    if env:
        workers = max(1, int(env))
    points = pareto_frontier(spec, budgets, cfg, max_workers=workers)
    m = len(spec.types)
    rows = ["budget,mean_response_time," + ",".join(f"k_{i + 1}" for i in range(m))]
    successes = 0
    for pt in points:
        if pt.allocation is not None:
            successes += 1
            ks = ",".join(_fmt(k) for k in pt.allocation.ks)
            rows.append(f"{_fmt(pt.budget)},{_fmt(pt.allocation.objective)},{ks}")
        else:
            err = pt.error.replace(",", ";")
            rows.append(f"{_fmt(pt.budget)},error: {err}" + "," * m)
    _emit("\n".join(rows) + "\n", args.out)
    if args.out:
        print(f"wrote {args.out} ({successes}/{len(points)} budgets solved)")
    return EXIT_OK if successes else EXIT_UNSTABLE


def _cmd_compare(args) -> int:
    spec = load_spec(args.spec)
    trace = read_trace(args.trace)
    cfg = SolverConfig(k_max=args.k_max)
    labels = [s for s in args.policies.split(";") if s]
    if not labels:
        raise SpecError("--policies must name at least one policy")
    policies = [parse_policy(s, spec, cfg) for s in labels]
    results = compare_policies(trace, spec, policies)
    rows = ["policy,job_count,mean_response_time,time_avg_budget,total_gpu_hours"]
    for label, (_, metrics) in zip(labels, results):
        mrt = "" if metrics.mean_response_time is None else _fmt(metrics.mean_response_time)
        field = f'"{label}"' if "," in label else label
        rows.append(
            f"{field},{metrics.job_count},{mrt},"
            f"{_fmt(metrics.time_avg_budget)},{_fmt(metrics.total_gpu_hours)}"
        )
    _emit("\n".join(rows) + "\n", args.out)
    if args.out:
        print(f"wrote {args.out}")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gpurental",
        description="Plan and verify cloud-GPU rental policies under a time-average budget.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--spec", required=True, help="workload config JSON")
        p.add_argument(
            "--k-max", type=float, default=SolverConfig().k_max, help="cap on any width"
        )

    p = sub.add_parser("validate", help="check speedup axioms and stability")
    add_common(p)
    p.set_defaults(fn=_cmd_validate)

    p = sub.add_parser("solve", help="compute the optimal fixed-width allocation")
    add_common(p)
    p.add_argument("--out", help="write the allocation JSON here instead of stdout")
    p.set_defaults(fn=_cmd_solve)

    p = sub.add_parser("gen-trace", help="generate a synthetic arrival trace CSV")
    add_common(p)
    p.add_argument("--jobs", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--arrivals", choices=["poisson", "periodic"], default="poisson")
    p.set_defaults(fn=_cmd_gen_trace)

    p = sub.add_parser("simulate", help="replay a trace under a policy")
    add_common(p)
    p.add_argument("--trace", required=True)
    p.add_argument(
        "--policy",
        required=True,
        help="optimal | fixed:k1,...,kM | uniform:k | cluster:C | srf:C,kcap",
    )
    p.add_argument("--per-job", help="write per-job CSV here")
    p.add_argument("--timeseries", help="write K(t) samples CSV here")
    p.add_argument("--timeseries-step", type=float, default=1.0)
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("pareto", help="sweep budgets and emit the frontier CSV")
    add_common(p)
    p.add_argument("--b-min", type=float, required=True)
    p.add_argument("--b-max", type=float, required=True)
    p.add_argument("--points", type=int, required=True)
    p.add_argument("--out", help="write the frontier CSV here instead of stdout")
    p.set_defaults(fn=_cmd_pareto)

    p = sub.add_parser("compare", help="simulate several policies on one trace")
    add_common(p)
    p.add_argument("--trace", required=True)
    p.add_argument("--policies", required=True, help="semicolon-separated policy strings")
    p.add_argument("--out", help="write the comparison CSV here instead of stdout")
    p.set_defaults(fn=_cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        _require_files(getattr(args, "spec", None), getattr(args, "trace", None))
        return args.fn(args)
    except InstabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except (SpecError, TraceError, BruteForceError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
