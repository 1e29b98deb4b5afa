"""Optimal fixed-width GPU allocation under a time-average budget.

The planning problem is separable: choose one width k_i per job type to
minimize the predicted mean response time (1/lambda) * sum_i rho_i / s_i(k_i)
subject to the time-average GPU usage sum_i rho_i * k_i / s_i(k_i) <= b.

``solve_allocation`` relaxes the budget with a multiplier mu, minimizes the
per-type penalized cost (1 + mu*k) / s(k) by golden-section search (unimodal
under the speedup axioms), and bisects mu until the budget binds or the
multiplier hits zero.  ``brute_force_allocation`` is the independent grid
oracle used to cross-check the solver.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import BruteForceError
from .speedup import DEFAULT_K_MAX, SpeedupFunction, scalar_fn
from .workload import WorkloadSpec

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SolverConfig:
    """Numerical knobs for the allocation solver."""

    k_max: float = DEFAULT_K_MAX  # cap on any width; flagged when it binds
    budget_tol: float = 1e-9  # relative slack allowed on the budget
    bisect_tol: float = 1e-12  # relative width of the final mu bracket
    inner_tol: float = 1e-12  # relative width of the per-type k bracket

    def __post_init__(self):
        if self.k_max < 1.0:
            raise ValueError("k_max must be >= 1")
        if min(self.budget_tol, self.bisect_tol, self.inner_tol) <= 0:
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class Allocation:
    """A fixed-width plan plus its predicted performance.

    ``objective`` and ``budget_used`` are always recomputed from ``ks``;
    ``multiplier`` is the budget shadow price found by the solver (0 when the
    budget did not bind) and ``cap_active`` flags widths pinned at k_max.
    """

    ks: tuple[float, ...]
    objective: float
    budget_used: float
    multiplier: float
    cap_active: bool

    def to_dict(self) -> dict:
        return {
            "ks": list(self.ks),
            "objective": self.objective,
            "budget_used": self.budget_used,
            "multiplier": self.multiplier,
            "cap_active": self.cap_active,
        }


@dataclass(frozen=True)
class ParetoPoint:
    """One budget sweep entry; exactly one of allocation/error is set."""

    budget: float
    allocation: Allocation | None = None
    error: str | None = None


def _check_ks(spec: WorkloadSpec, ks) -> np.ndarray:
    arr = np.asarray(ks, dtype=float)
    if arr.shape != (len(spec.types),):
        raise ValueError(f"expected {len(spec.types)} widths, got shape {arr.shape}")
    if np.any(arr < 1.0):
        raise ValueError(f"widths must be >= 1, got {arr.min()}")
    return arr


def objective(spec: WorkloadSpec, ks) -> float:
    """Predicted mean response time of the fixed-width plan ``ks``."""
    arr = _check_ks(spec, ks)
    speeds = np.array([t.speedup(k) for t, k in zip(spec.types, arr)])
    return float((spec.loads / speeds).sum() / spec.total_rate)


def budget_usage(spec: WorkloadSpec, ks) -> float:
    """Time-average GPU count the plan consumes: sum of load * k / s(k)."""
    arr = _check_ks(spec, ks)
    speeds = np.array([t.speedup(k) for t, k in zip(spec.types, arr)])
    return float((spec.loads * arr / speeds).sum())


def merge_segments(k1: float, t1: float, k2: float, t2: float) -> float:
    """Duration-weighted average width of two GPU assignments.

    Replacing two segments (k1 for t1 hours, k2 for t2 hours) of the same
    job with this single width finishes the combined work no later and with
    no more GPU-hours, for any valid concave speedup.
    """
    if t1 <= 0 or t2 <= 0:
        raise ValueError("segment durations must be positive")
    if k1 < 1 or k2 < 1:
        raise ValueError("widths must be >= 1")
    return (k1 * t1 + k2 * t2) / (t1 + t2)


def inner_minimize(f: SpeedupFunction, mu: float, cfg: SolverConfig | None = None) -> float:
    """Minimize the penalized cost g(k) = (1 + mu*k) / s(k) over [1, k_max].

    g is unimodal under the speedup axioms, so golden-section search (run in
    log-k space to handle the wide range) finds the minimum; ties are broken
    toward the smallest k whose g-value is within inner_tol of it, so flat
    saturation regions never waste GPUs.
    """
    if mu < 0:
        raise ValueError("multiplier must be >= 0")
    cfg = cfg or SolverConfig()
    s = scalar_fn(f)

    def g(u: float) -> float:
        k = math.exp(u)
        return (1.0 + mu * k) / s(k)

    lo, hi = 0.0, math.log(cfg.k_max)
    tol = math.log1p(cfg.inner_tol)
    c = hi - _INV_PHI * (hi - lo)
    d = lo + _INV_PHI * (hi - lo)
    gc, gd = g(c), g(d)
    while hi - lo > tol:
        if gc < gd:
            hi, d, gd = d, c, gc
            c = hi - _INV_PHI * (hi - lo)
            gc = g(c)
        else:
            lo, c, gc = c, d, gd
            d = lo + _INV_PHI * (hi - lo)
            gd = g(d)
    u_best = 0.5 * (lo + hi)
    g_best = g(u_best)
    for u_end in (0.0, math.log(cfg.k_max)):
        if g(u_end) < g_best:
            u_best, g_best = u_end, g(u_end)

    # Smallest k whose value is within inner_tol of the minimum.
    target = g_best * (1.0 + cfg.inner_tol)
    if g(0.0) <= target:
        return 1.0
    left, right = 0.0, u_best
    while right - left > tol:
        mid = 0.5 * (left + right)
        if g(mid) <= target:
            right = mid
        else:
            left = mid
    return min(math.exp(right), cfg.k_max)


def _fill_budget(
    spec: WorkloadSpec,
    ks: np.ndarray,
    ks_upper: np.ndarray,
    cfg: SolverConfig,
) -> np.ndarray:
    """Raise widths toward ``ks_upper`` until the budget binds.

    Supports speedups whose penalized cost has a flat argmin (saturating
    tails): the bisection brackets the multiplier but usage can jump across
    it, leaving slack that this pass spends at constant marginal cost.
    """
    b = spec.budget
    ks = ks.copy()
    usages = [scalar_fn(t.speedup) for t in spec.types]
    loads = spec.loads

    def u_i(i: int, k: float) -> float:
        return loads[i] * k / usages[i](k)

    total = sum(u_i(i, k) for i, k in enumerate(ks))
    slack = b - total
    for i in range(len(ks)):
        if slack <= cfg.budget_tol * b * 0.5:
            break
        k_hi = max(ks_upper[i], ks[i])
        if k_hi <= ks[i]:
            continue
        gain = u_i(i, k_hi) - u_i(i, ks[i])
        if gain <= slack:
            slack -= gain
            ks[i] = k_hi
            continue
        target = u_i(i, ks[i]) + slack
        lo, hi = ks[i], k_hi
        for _ in range(200):
            if hi - lo <= 1e-15 * hi:
                break
            mid = 0.5 * (lo + hi)
            if u_i(i, mid) <= target:
                lo = mid
            else:
                hi = mid
        ks[i] = lo
        slack = b - sum(u_i(j, k) for j, k in enumerate(ks))
    return ks


def _make_allocation(spec: WorkloadSpec, ks: np.ndarray, mu: float, cfg: SolverConfig) -> Allocation:
    ks = np.clip(ks, 1.0, cfg.k_max)
    cap = bool(np.any(ks >= cfg.k_max * (1.0 - 1e-6)))
    return Allocation(
        ks=tuple(float(k) for k in ks),
        objective=objective(spec, ks),
        budget_used=budget_usage(spec, ks),
        multiplier=float(mu),
        cap_active=cap,
    )


def solve_allocation(spec: WorkloadSpec, cfg: SolverConfig | None = None) -> Allocation:
    """Compute the optimal fixed-width allocation for the workload.

    Bisects the budget multiplier: usage of the per-type minimizers is
    non-increasing in mu, so the bracket closes on either mu = 0 (budget
    slack, widths at the cap) or mu > 0 with the budget binding within
    budget_tol.  Raises InstabilityError when total load >= budget.
    """
    cfg = cfg or SolverConfig()
    spec.check_stability()
    b = spec.budget
    fns = [t.speedup for t in spec.types]

    def inner_all(mu: float) -> np.ndarray:
        return np.array([inner_minimize(f, mu, cfg) for f in fns])

    def usage(ks: np.ndarray) -> float:
        return budget_usage(spec, ks)

    ks0 = inner_all(0.0)
    if usage(ks0) <= b * (1.0 + cfg.budget_tol):
        return _make_allocation(spec, ks0, 0.0, cfg)

    mu_lo, ks_lo = 0.0, ks0
    mu_hi = 1.0
    ks_hi = inner_all(mu_hi)
    growth = 0
    while usage(ks_hi) > b:
        mu_lo, ks_lo = mu_hi, ks_hi
        mu_hi *= 4.0
        ks_hi = inner_all(mu_hi)
        growth += 1
        if growth > 2000:
            raise RuntimeError("budget multiplier bracket did not close")

    mu = mu_hi
    for _ in range(20000):
        if mu_hi - mu_lo <= cfg.bisect_tol * mu_hi:
            break
        mu = 0.5 * (mu_lo + mu_hi)
        ks_mid = inner_all(mu)
        u = usage(ks_mid)
        if abs(u - b) <= cfg.budget_tol * b:
            return _make_allocation(spec, ks_mid, mu, cfg)
        if u > b:
            mu_lo, ks_lo = mu, ks_mid
        else:
            mu_hi, ks_hi = mu, ks_mid

    ks = _fill_budget(spec, ks_hi, ks_lo, cfg)
    return _make_allocation(spec, ks, mu_hi, cfg)


def _budget_axis_cap(f: SpeedupFunction, load: float, b: float, k_max: float) -> float:
    """Largest width this type alone could sustain: load * k / s(k) <= b."""
    s = scalar_fn(f)

    def u(k: float) -> float:
        return load * k / s(k)

    if u(k_max) <= b:
        return k_max
    lo, hi = 0.0, math.log(k_max)  # u is non-decreasing; bisect in log space
    for _ in range(200):
        if hi - lo <= 1e-14:
            break
        mid = 0.5 * (lo + hi)
        if u(math.exp(mid)) <= b:
            lo = mid
        else:
            hi = mid
    return math.exp(lo)


_ZOOM_POINTS = 96  # per-axis sampling target for the coarse-to-fine passes


def _running_argmin(values: np.ndarray) -> np.ndarray:
    """Index of the first minimum among values[0..j], for every j."""
    best = np.minimum.accumulate(values)
    strict = np.empty(len(values), dtype=bool)
    strict[0] = True
    strict[1:] = best[1:] < best[:-1]
    pos = np.where(strict, np.arange(len(values)), 0)
    return np.maximum.accumulate(pos)


def brute_force_allocation(
    spec: WorkloadSpec,
    grid_step: float,
    cfg: SolverConfig | None = None,
    max_axis_points: int = 30_000_000,
) -> Allocation:
    """Grid-search oracle for the allocation problem.

    Evaluates the canonical grid {1, 1+step, 1+2*step, ...} per axis, bounded
    by the width at which a type alone would exhaust the budget.  The last
    axis is resolved analytically (usage is non-decreasing and the objective
    non-increasing in k, so given the leftover budget the best choice is the
    widest feasible grid point); with three or four types the remaining axes
    are scanned coarse-to-fine, every level exhaustive on its subgrid.
    """
    cfg = cfg or SolverConfig()
    if grid_step <= 0:
        raise ValueError("grid_step must be positive")
    m = len(spec.types)
    if m > 4:
        raise BruteForceError(f"grid search supports at most 4 types, got {m}")
    spec.check_stability()
    b = spec.budget
    loads = spec.loads

    caps = [
        _budget_axis_cap(t.speedup, loads[i], b, cfg.k_max) for i, t in enumerate(spec.types)
    ]
    sizes = [int(math.floor((c - 1.0) / grid_step)) + 1 for c in caps]
    if max(sizes) > max_axis_points:
        raise BruteForceError(
            f"axis needs {max(sizes)} grid points at step {grid_step}; "
            f"raise grid_step or lower the budget"
        )

    def axis_values(i: int, idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        ks = 1.0 + idx.astype(float) * grid_step
        s = spec.types[i].speedup(ks)
        return loads[i] * ks / s, loads[i] / s

    last = int(np.argmax(sizes))
    outer = [i for i in range(m) if i != last]

    u_last, obj_last = axis_values(last, np.arange(sizes[last]))
    # Axioms make these monotone; accumulate guards against round-off wiggles.
    u_last = np.maximum.accumulate(u_last)
    best_obj_last = np.minimum.accumulate(obj_last)
    arg_last = _running_argmin(obj_last)

    def evaluate(idx_lists: list[np.ndarray]) -> tuple[float, list[int], int] | None:
        """Best feasible point with outer axes restricted to idx_lists."""
        us = []
        objs = []
        for ax, idx in zip(outer, idx_lists):
            u, o = axis_values(ax, idx)
            us.append(u)
            objs.append(o)
        grids_u = np.meshgrid(*us, indexing="ij") if us else [np.zeros(1)]
        grids_o = np.meshgrid(*objs, indexing="ij") if objs else [np.zeros(1)]
        rem = b - sum(g.ravel() for g in grids_u)
        outer_obj = sum(g.ravel() for g in grids_o)
        j = np.searchsorted(u_last, rem, side="right") - 1
        feasible = j >= 0
        if not feasible.any():
            return None
        total = np.where(feasible, outer_obj + best_obj_last[np.maximum(j, 0)], np.inf)
        flat = int(np.argmin(total))
        shape = tuple(len(x) for x in idx_lists) if idx_lists else (1,)
        coords = np.unravel_index(flat, shape)
        picked = [int(idx_lists[d][coords[d]]) for d in range(len(idx_lists))]
        return float(total[flat]), picked, int(arg_last[j[flat]])

    if not outer:
        feasible = u_last <= b
        if not feasible.any():
            raise BruteForceError("no feasible grid point")
        n_ok = int(np.searchsorted(u_last, b, side="right"))
        j = int(np.argmin(obj_last[:n_ok]))
        ks = np.array([1.0 + j * grid_step])
        return _make_allocation(spec, ks, 0.0, cfg)

    windows = [(0, sizes[ax] - 1) for ax in outer]
    strides = [max(1, (hi - lo) // _ZOOM_POINTS + 1) for lo, hi in windows]
    best = None
    while True:
        idx_lists = []
        for (lo, hi), st in zip(windows, strides):
            idx = np.arange(lo, hi + 1, st)
            if idx[-1] != hi:
                idx = np.append(idx, hi)
            idx_lists.append(idx)
        res = evaluate(idx_lists)
        if res is not None and (best is None or res[0] < best[0]):
            best = res
        if all(st == 1 for st in strides):
            break
        center = res[1] if res is not None else [w[0] for w in windows]
        new_windows = []
        new_strides = []
        for d, ((lo, hi), st) in enumerate(zip(windows, strides)):
            c = center[d]
            new_windows.append((max(lo, c - 2 * st), min(hi, c + 2 * st)))
            new_strides.append(max(1, st // 16))
        windows, strides = new_windows, new_strides

    if best is None:
        raise BruteForceError("no feasible grid point")
    _, picked, j_last = best
    ks = np.empty(m)
    for d, ax in enumerate(outer):
        ks[ax] = 1.0 + picked[d] * grid_step
    ks[last] = 1.0 + j_last * grid_step
    return _make_allocation(spec, ks, 0.0, cfg)


def pareto_frontier(
    spec: WorkloadSpec,
    budgets,
    cfg: SolverConfig | None = None,
    max_workers: int | None = None,
) -> list[ParetoPoint]:
    """Solve the allocation for each budget; infeasible budgets become
    per-point errors so partial frontiers still come out.  Results are
    ordered by budget regardless of execution order."""
    cfg = cfg or SolverConfig()
    budgets = sorted(float(b) for b in budgets)

    def solve_one(b: float) -> ParetoPoint:
        try:
            alloc = solve_allocation(dataclasses.replace(spec, budget=b), cfg)
            return ParetoPoint(budget=b, allocation=alloc)
        except ValueError as exc:
            return ParetoPoint(budget=b, error=str(exc))

    if max_workers is not None and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            points = list(pool.map(solve_one, budgets))
    else:
        points = [solve_one(b) for b in budgets]
    return points
