"""Discrete-event replay of a trace under a GPU rental policy.

Fixed-width policies never queue, so their replay is closed-form: each job
finishes at arrival + size / s(k).  The cluster baselines are event-driven:
between events every in-service job depletes its remaining work at a
constant rate, so the next completion is solved exactly (no time stepping).

K(t), the number of GPUs rented at time t, is piecewise constant between
events; its integral and the per-job GPU-hours are computed exactly.
K(t) is right-continuous: at the instant a job completes, it is gone.

One replay is strictly sequential (event-ordered); distinct replays share
no state and may run concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SpecError
from .speedup import scalar_fn
from .workload import Trace, WorkloadSpec


@dataclass(frozen=True)
class FixedWidth:
    """Every type-i job runs on ks[i] GPUs from arrival to completion."""

    ks: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "ks", tuple(float(k) for k in self.ks))
        if len(self.ks) == 0 or min(self.ks) < 1.0:
            raise SpecError("fixed-width policy needs widths >= 1")


@dataclass(frozen=True)
class UniformWidth:
    """Every job of every type runs on the same k GPUs."""

    k: float

    def __post_init__(self):
        if self.k < 1.0:
            raise SpecError("uniform width must be >= 1")


@dataclass(frozen=True)
class StaticClusterEqualSplit:
    """A fixed cluster of C GPUs re-split equally among present jobs."""

    cluster_size: float

    def __post_init__(self):
        if self.cluster_size < 1.0:
            raise SpecError("cluster size must be >= 1")


@dataclass(frozen=True)
class SmallestRemainingFirst:
    """Size-priority baseline: a fixed pool of C GPUs, granted to the jobs
    with least remaining work first, at most k_cap each; jobs that find the
    pool empty wait.  A simplified proxy for size-prioritizing schedulers,
    not a faithful reimplementation of any of them."""

    cluster_size: float
    k_cap: float

    def __post_init__(self):
        if self.cluster_size < 1.0 or self.k_cap < 1.0:
            raise SpecError("cluster size and k_cap must be >= 1")


Policy = FixedWidth | UniformWidth | StaticClusterEqualSplit | SmallestRemainingFirst


@dataclass(frozen=True)
class SimMetrics:
    """Measured outcome of one replay.

    ``per_job`` (optional) has one row per job with columns
    (arrival, completion, response, gpu_hours), in trace order.
    """

    job_count: int
    mean_response_time: float | None
    time_avg_budget: float
    total_gpu_hours: float
    per_job: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "job_count": self.job_count,
            "mean_response_time": self.mean_response_time,
            "time_avg_budget": self.time_avg_budget,
            "total_gpu_hours": self.total_gpu_hours,
        }


@dataclass(frozen=True)
class _Replay:
    completions: np.ndarray
    gpu_hours: np.ndarray
    work_done: np.ndarray
    seg_times: np.ndarray  # K(t) == seg_k[i] on [seg_times[i], seg_times[i+1])
    seg_k: np.ndarray


def _fixed_widths(spec: WorkloadSpec, policy: Policy) -> np.ndarray | None:
    if isinstance(policy, FixedWidth):
        if len(policy.ks) != len(spec.types):
            raise SpecError(
                f"policy has {len(policy.ks)} widths but workload has {len(spec.types)} types"
            )
        return np.asarray(policy.ks)
    if isinstance(policy, UniformWidth):
        return np.full(len(spec.types), policy.k)
    return None


def _extended_speed(f, at_one: float):
    """Speed at allocation a, extended linearly below one GPU (a * s(1));
    the cluster baselines can hand a job less than one GPU."""

    def speed(a: float) -> float:
        if a >= 1.0:
            return f(a)
        if a <= 0.0:
            return 0.0
        return a * at_one

    return speed


def _segments_from_deltas(times: np.ndarray, deltas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    uniq, inv = np.unique(times, return_inverse=True)
    k_after = np.cumsum(np.bincount(inv, weights=deltas))
    if uniq.size == 0 or uniq[0] > 0.0:
        uniq = np.concatenate([[0.0], uniq])
        k_after = np.concatenate([[0.0], k_after])
    return uniq, k_after


def _replay_fixed(trace: Trace, spec: WorkloadSpec, widths: np.ndarray) -> _Replay:
    speeds_per_type = np.array([t.speedup(k) for t, k in zip(spec.types, widths)])
    k_job = widths[trace.type_indices]
    durations = trace.sizes / speeds_per_type[trace.type_indices]
    completions = trace.arrival_times + durations
    gpu_hours = k_job * durations
    times = np.concatenate([trace.arrival_times, completions])
    deltas = np.concatenate([k_job, -k_job])
    seg_times, seg_k = _segments_from_deltas(times, deltas)
    return _Replay(completions, gpu_hours, trace.sizes.copy(), seg_times, seg_k)


def _replay_cluster(trace: Trace, spec: WorkloadSpec, policy: Policy) -> _Replay:
    n = len(trace)
    arr_t = trace.arrival_times
    arr_ty = trace.type_indices
    arr_x = trace.sizes
    speed_of = [
        _extended_speed(scalar_fn(t.speedup), scalar_fn(t.speedup)(1.0)) for t in spec.types
    ]
    equal_split = isinstance(policy, StaticClusterEqualSplit)
    pool = policy.cluster_size
    k_cap = policy.k_cap if isinstance(policy, SmallestRemainingFirst) else math.inf

    completions = np.zeros(n)
    gpu_hours = np.zeros(n)
    work_done = np.zeros(n)

    ids: list[int] = []
    rem: list[float] = []
    alloc: list[float] = []
    spd: list[float] = []

    seg_times = [0.0]
    seg_k = [0.0]
    t = 0.0
    i_next = 0

    def reallocate() -> None:
        m = len(ids)
        if m == 0:
            return
        if equal_split:
            share = pool / m
            for j in range(m):
                alloc[j] = share
                spd[j] = speed_of[arr_ty[ids[j]]](share)
        else:
            order = sorted(range(m), key=lambda j: (rem[j], ids[j]))
            left = pool
            for j in order:
                a = min(k_cap, left)
                left -= a
                alloc[j] = a
                spd[j] = speed_of[arr_ty[ids[j]]](a)

    def advance(dt: float) -> None:
        if dt > 0.0:
            for j in range(len(ids)):
                w = spd[j] * dt
                rem[j] -= w
                work_done[ids[j]] += w
                gpu_hours[ids[j]] += alloc[j] * dt

    while ids or i_next < n:
        dt_arr = arr_t[i_next] - t if i_next < n else math.inf
        dt_comp = math.inf
        j_comp = -1
        for j in range(len(ids)):
            if spd[j] > 0.0:
                tc = max(rem[j], 0.0) / spd[j]
                if tc < dt_comp:
                    dt_comp, j_comp = tc, j

        if j_comp >= 0 and dt_comp <= dt_arr:
            advance(dt_comp)
            t += dt_comp
            done = ids[j_comp]
            completions[done] = t
            for lst in (ids, rem, alloc, spd):
                lst.pop(j_comp)
        else:
            advance(max(dt_arr, 0.0))
            t = float(arr_t[i_next])
            ids.append(i_next)
            rem.append(float(arr_x[i_next]))
            alloc.append(0.0)
            spd.append(0.0)
            i_next += 1
        reallocate()
        k_now = (pool if equal_split else math.fsum(alloc)) if ids else 0.0
        if t == seg_times[-1]:
            seg_k[-1] = k_now
        else:
            seg_times.append(t)
            seg_k.append(k_now)

    return _Replay(completions, gpu_hours, work_done, np.array(seg_times), np.array(seg_k))


def _replay(trace: Trace, spec: WorkloadSpec, policy: Policy) -> _Replay:
    trace.check_against(spec)
    if len(trace) == 0:
        return _Replay(
            np.array([]), np.array([]), np.array([]), np.array([0.0]), np.array([0.0])
        )
    widths = _fixed_widths(spec, policy)
    if widths is not None:
        return _replay_fixed(trace, spec, widths)
    return _replay_cluster(trace, spec, policy)


def simulate(
    trace: Trace,
    spec: WorkloadSpec,
    policy: Policy,
    collect_per_job: bool = True,
) -> SimMetrics:
    """Replay the trace under the policy and measure it.

    Every job runs to completion, including those still in flight past the
    last arrival; the time-average budget divides by the last completion
    time, over which K(t) is identically zero afterwards.
    """
    rep = _replay(trace, spec, policy)
    n = len(trace)
    if n == 0:
        return SimMetrics(0, None, 0.0, 0.0, per_job=None)
    responses = rep.completions - trace.arrival_times
    total = float(rep.gpu_hours.sum())
    horizon = float(rep.completions.max())
    per_job = None
    if collect_per_job:
        per_job = np.column_stack(
            [trace.arrival_times, rep.completions, responses, rep.gpu_hours]
        )
    return SimMetrics(
        job_count=n,
        mean_response_time=float(responses.mean()),
        time_avg_budget=total / horizon,
        total_gpu_hours=total,
        per_job=per_job,
    )


def compare_policies(
    trace: Trace,
    spec: WorkloadSpec,
    policies,
    collect_per_job: bool = False,
) -> list[tuple[Policy, SimMetrics]]:
    """Simulate each policy on the identical trace, in the given order."""
    return [(p, simulate(trace, spec, p, collect_per_job=collect_per_job)) for p in policies]


def budget_timeseries(
    trace: Trace,
    spec: WorkloadSpec,
    policy: Policy,
    sample_step: float,
) -> np.ndarray:
    """Sample the exact K(t) step function at multiples of sample_step.

    Returns an array of (t, K(t)) rows covering [0, last completion],
    right-continuous at event instants.
    """
    if sample_step <= 0:
        raise ValueError("sample_step must be positive")
    rep = _replay(trace, spec, policy)
    horizon = float(rep.completions.max()) if len(rep.completions) else 0.0
    ts = np.arange(math.ceil(horizon / sample_step) + 1) * sample_step
    idx = np.searchsorted(rep.seg_times, ts, side="right") - 1
    ks = rep.seg_k[np.maximum(idx, 0)]
    return np.column_stack([ts, ks])
