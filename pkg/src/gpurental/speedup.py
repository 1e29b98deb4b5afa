"""Speedup functions: how much faster a job runs when given k GPUs.

A speedup function s(k) is defined for k >= 1 and must be monotone
non-decreasing with non-increasing average speedup s(k)/k (diminishing
returns per GPU).  ``validate`` checks those axioms numerically on a
geometric grid; the solver and simulator assume they hold.

All speedup values are immutable after construction and safe to evaluate
from any number of threads.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np

from .errors import SpecError

# Axiom violations smaller than this (relative) are treated as round-off.
REL_TOL = 1e-9

# Default upper end of the validation grid and of the solver's search range.
DEFAULT_K_MAX = float(2**20)

_GRID_RATIO = 1.1


class SpeedupFunction:
    """Base class; subclasses provide ``_value`` vectorized over k >= 1."""

    def _value(self, k: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, k):
        """Evaluate s(k). Accepts a float or an ndarray; k must be >= 1."""
        arr = np.asarray(k, dtype=float)
        if np.any(arr < 1.0):
            raise ValueError(f"speedup is defined for k >= 1, got {np.min(arr)}")
        out = self._value(arr)
        if arr.ndim == 0:
            return float(out)
        return out

    def cost_rate(self, k):
        """GPU-hours spent per unit of work at width k: k / s(k)."""
        arr = np.asarray(k, dtype=float)
        out = arr / self(arr)
        if arr.ndim == 0:
            return float(out)
        return out


@dataclass(frozen=True)
class Amdahl(SpeedupFunction):
    """Amdahl's law with parallel fraction p: s(k) = 1 / ((1-p) + p/k)."""

    parallel_fraction: float

    def __post_init__(self):
        p = self.parallel_fraction
        if not (0.0 <= p <= 1.0) or not math.isfinite(p):
            raise SpecError(f"amdahl parallel fraction must be in [0, 1], got {p}")

    def _value(self, k):
        p = self.parallel_fraction
        return 1.0 / ((1.0 - p) + p / k)


@dataclass(frozen=True)
class PowerLaw(SpeedupFunction):
    """Power-law speedup s(k) = k**alpha.

    Sub-linearity requires alpha <= 1; larger exponents are constructible so
    that ``validate`` can report the violation, but they fail validation.
    """

    exponent: float

    def __post_init__(self):
        a = self.exponent
        if not (a > 0.0) or not math.isfinite(a):
            raise SpecError(f"power-law exponent must be positive, got {a}")

    def _value(self, k):
        return k**self.exponent


@dataclass(frozen=True)
class Tabular(SpeedupFunction):
    """Piecewise-linear speedup through measured (k, s) points.

    Between points the value is linearly interpolated; beyond the last point
    (and below the first) it is held constant, so a saturating tail stays
    monotone and sub-linear.
    """

    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple((float(k), float(s)) for k, s in self.points)
        if len(pts) == 0:
            raise SpecError("tabular speedup needs at least one (k, s) point")
        ks = [k for k, _ in pts]
        for k, s in pts:
            if k < 1.0:
                raise SpecError(f"tabular point has k < 1: {k}")
            if not s > 0.0:
                raise SpecError(f"tabular point has non-positive speed: {s}")
        if any(b <= a for a, b in zip(ks, ks[1:])):
            raise SpecError("tabular points must have strictly increasing k")
        object.__setattr__(self, "points", pts)

    def _value(self, k):
        ks = np.array([p[0] for p in self.points])
        ss = np.array([p[1] for p in self.points])
        return np.interp(k, ks, ss)

    @property
    def knots(self) -> np.ndarray:
        return np.array([p[0] for p in self.points])


@dataclass(frozen=True)
class AxiomCheck:
    """Outcome of one axiom check; ``detail`` names the first violating pair."""

    name: str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    monotone: AxiomCheck
    sublinear: AxiomCheck
    concave: AxiomCheck
    normalized: AxiomCheck  # s(1) = 1; a warning, not a failure

    @property
    def ok(self) -> bool:
        return self.monotone.passed and self.sublinear.passed and self.concave.passed

    @property
    def warnings(self) -> list[str]:
        return [] if self.normalized.passed else [self.normalized.detail]

    def checks(self) -> list[AxiomCheck]:
        return [self.monotone, self.sublinear, self.concave, self.normalized]


def _concavity_check(f: SpeedupFunction, ks: np.ndarray, s: np.ndarray) -> AxiomCheck:
    """Concavity on sampled triples: the value at an interior point must not
    fall below the chord through its neighbours.  Two triple families are
    used so that kinks both at and between grid points are caught:
    (a) each consecutive pair with its midpoint, (b) each interior grid
    point with its neighbours."""
    a, b = ks[:-1], ks[1:]
    sa, sb = s[:-1], s[1:]
    scale = np.maximum(np.abs(sa), np.abs(sb))

    mids = 0.5 * (a + b)
    deficit_mid = 0.5 * (sa + sb) - f(mids)
    bad = np.flatnonzero(deficit_mid > REL_TOL * scale)
    if bad.size:
        i = bad[0]
        return AxiomCheck(
            "concave",
            False,
            f"s({mids[i]:.6g}) = {f(mids[i]):.6g} < chord mean "
            f"(s({a[i]:.6g}) + s({b[i]:.6g}))/2 = {0.5 * (sa[i] + sb[i]):.6g}",
        )

    if len(ks) >= 3:
        lo, mid, hi = ks[:-2], ks[1:-1], ks[2:]
        theta = (hi - mid) / (hi - lo)
        chord = theta * s[:-2] + (1.0 - theta) * s[2:]
        deficit = chord - s[1:-1]
        scale3 = np.maximum(np.abs(s[:-2]), np.abs(s[2:]))
        bad = np.flatnonzero(deficit > REL_TOL * scale3)
        if bad.size:
            i = bad[0]
            return AxiomCheck(
                "concave",
                False,
                f"s({mid[i]:.6g}) = {s[1:-1][i]:.6g} < chord of "
                f"s({lo[i]:.6g}), s({hi[i]:.6g}) = {chord[i]:.6g}",
            )
    return AxiomCheck("concave", True)


def _grid(f: SpeedupFunction, k_max: float) -> np.ndarray:
    n = int(math.floor(math.log(k_max) / math.log(_GRID_RATIO))) + 1
    ks = _GRID_RATIO ** np.arange(n)
    ks = np.append(ks, k_max)
    if isinstance(f, Tabular):
        ks = np.append(ks, f.knots)
    ks = np.unique(ks)
    return ks[ks >= 1.0]


def validate(f: SpeedupFunction, k_max: float = DEFAULT_K_MAX) -> ValidationReport:
    """Check the speedup axioms on a geometric grid (plus tabular knots).

    Grid checking is the practical surrogate for the universally quantified
    axioms: monotonicity and sub-linearity are checked on consecutive grid
    pairs, concavity on sampled triples.  Violations below REL_TOL
    (relative) are ignored.
    """
    ks = _grid(f, k_max)
    s = f(ks)
    a, b = ks[:-1], ks[1:]
    sa, sb = s[:-1], s[1:]
    scale = np.maximum(np.abs(sa), np.abs(sb))

    def first_bad(violation: np.ndarray, fmt) -> AxiomCheck:
        bad = np.flatnonzero(violation > REL_TOL * scale)
        if bad.size == 0:
            return AxiomCheck(fmt.__name__, True)
        i = bad[0]
        return AxiomCheck(fmt.__name__, False, fmt(a[i], sa[i], b[i], sb[i]))

    def monotone(ka, va, kb, vb):
        return f"s({ka:.6g}) = {va:.6g} > s({kb:.6g}) = {vb:.6g}"

    def sublinear(ka, va, kb, vb):
        return (
            f"s({ka:.6g})/{ka:.6g} = {va / ka:.6g} < "
            f"s({kb:.6g})/{kb:.6g} = {vb / kb:.6g}"
        )

    mono = first_bad(sa - sb, monotone)
    sub = first_bad(sb / b - sa / a, sublinear)
    conc = _concavity_check(f, ks, s)

    s1 = f(1.0)
    norm = AxiomCheck("normalized", abs(s1 - 1.0) <= REL_TOL)
    if not norm.passed:
        norm = AxiomCheck("normalized", False, f"s(1) = {s1:.6g}, expected 1")
    return ValidationReport(mono, sub, conc, norm)


def scalar_fn(f: SpeedupFunction):
    """Specialized scalar evaluator for hot loops.

    The generic ``__call__`` pays ndarray conversion overhead on every
    evaluation; solvers and simulators call s(k) millions of times.
    """
    if isinstance(f, Amdahl):
        p = f.parallel_fraction
        q = 1.0 - p
        return lambda k: 1.0 / (q + p / k)
    if isinstance(f, PowerLaw):
        a = f.exponent
        return lambda k: k**a
    if isinstance(f, Tabular):
        xs = [p[0] for p in f.points]
        ys = [p[1] for p in f.points]
        n = len(xs)

        def interp(k: float) -> float:
            i = bisect.bisect_right(xs, k)
            if i == 0:
                return ys[0]
            if i == n:
                return ys[-1]
            w = (k - xs[i - 1]) / (xs[i] - xs[i - 1])
            return ys[i - 1] + w * (ys[i] - ys[i - 1])

        return interp
    return lambda k: float(f(k))


def parse_speedup(obj, where: str = "speedup") -> SpeedupFunction:
    """Build a speedup function from its config-document form."""
    if not isinstance(obj, dict) or "kind" not in obj:
        raise SpecError(f"{where}: expected an object with a 'kind' field")
    kind = obj["kind"]
    try:
        if kind == "amdahl":
            return Amdahl(float(obj["p"]))
        if kind == "power":
            return PowerLaw(float(obj["alpha"]))
        if kind == "tabular":
            pts = obj["points"]
            if not isinstance(pts, list):
                raise SpecError(f"{where}.points: expected a list of [k, s] pairs")
            return Tabular(tuple((float(k), float(s)) for k, s in pts))
    except KeyError as exc:
        raise SpecError(f"{where}: missing field {exc.args[0]!r} for kind {kind!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(f"{where}: {exc}") from None
    raise SpecError(f"{where}.kind: unknown speedup kind {kind!r}")
