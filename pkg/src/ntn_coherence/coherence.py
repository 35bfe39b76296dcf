"""Coherence time: the first lag at which |normalized autocorrelation| < epsilon."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import AutocorrEvaluator, Scenario
from .errors import InvalidEpsilon
from .quadrature import QuadSpec

BISECT_REL_WIDTH = 1e-4


@dataclass(frozen=True)
class TauGrid:
    """Log-spaced lags from ``tau_min`` to ``tau_max`` inclusive."""

    tau_min: float = 1e-9
    tau_max: float = 1e-2
    points_per_decade: int = 100

    def __post_init__(self):
        if not self.tau_min > 0:
            raise ValueError("tau_min must be positive")
        if not self.tau_max > self.tau_min:
            raise ValueError("tau_max must exceed tau_min")
        if self.points_per_decade < 20:
            raise ValueError("points_per_decade must be >= 20")

    def taus(self) -> np.ndarray:
        lo, hi = math.log10(self.tau_min), math.log10(self.tau_max)
        count = int(round((hi - lo) * self.points_per_decade)) + 1
        grid = np.logspace(lo, hi, max(count, 2))
        grid[0], grid[-1] = self.tau_min, self.tau_max
        return grid


@dataclass
class CoherenceResult:
    t: float
    epsilon: float
    tc: float | None                      # None means not reached within the grid
    crossing_bracket: tuple[float, float] | None
    curve: list = field(default_factory=list)   # [(tau, complex normalized A)]

    @property
    def status(self) -> str:
        return "found" if self.tc is not None else "not_reached"


def check_epsilon(epsilon: float) -> float:
    if not 0.0 < epsilon < 1.0:
        raise InvalidEpsilon(f"threshold must lie in (0, 1), got {epsilon!r}")
    return float(epsilon)


def _evaluator(scn, t, quad, evaluator):
    if evaluator is not None:
        return evaluator
    return AutocorrEvaluator(scn, t, quad)


def autocorr_curve(
    scn: Scenario,
    t: float = 0.0,
    grid: TauGrid = TauGrid(),
    quad: QuadSpec = QuadSpec(),
    *,
    k: float | None = None,
    threads: int = 1,
    evaluator: AutocorrEvaluator | None = None,
) -> list[tuple[float, complex]]:
    """Normalized autocorrelation over the lag grid.

    Lags are independent; with ``threads > 1`` they are evaluated
    concurrently, and the output is the same as the serial run.
    """
    ev = _evaluator(scn, t, quad, evaluator)
    ev.normalizer(k)
    taus = grid.taus()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(lambda tau: ev.normalized(tau, k), taus))
    else:
        values = [ev.normalized(tau, k) for tau in taus]
    return [(float(tau), complex(v)) for tau, v in zip(taus, values)]


def first_crossing(curve, epsilon: float) -> int | None:
    """Index of the first curve point with magnitude below ``epsilon``."""
    for i, (_, value) in enumerate(curve):
        if abs(value) < epsilon:
            return i
    return None


def coherence_time(
    scn: Scenario,
    t: float = 0.0,
    epsilon: float = 0.5,
    grid: TauGrid = TauGrid(),
    quad: QuadSpec = QuadSpec(),
    *,
    k: float | None = None,
    curve: list | None = None,
    threads: int = 1,
    evaluator: AutocorrEvaluator | None = None,
) -> CoherenceResult:
    """Smallest lag with ``|A(t, tau)/A(t, 0)| < epsilon``.

    The grid is scanned for the first point below the threshold; the bracket
    formed with its predecessor is then bisected (in log tau) on the true
    autocorrelation until its relative width is below 1e-4. ``tc`` is the
    geometric midpoint of the final bracket. A crossing before the first
    grid point is bracketed against tau = 0, where the value is exactly 1.
    """
    epsilon = check_epsilon(epsilon)
    ev = _evaluator(scn, t, quad, evaluator)
    if curve is None:
        curve = autocorr_curve(scn, t, grid, quad, k=k, threads=threads, evaluator=ev)
    idx = first_crossing(curve, epsilon)
    if idx is None:
        return CoherenceResult(float(t), epsilon, None, None, curve)
    hi = curve[idx][0]
    lo = curve[idx - 1][0] if idx > 0 else hi * 1e-3
    if idx == 0:
        # walk down until the lower end is above threshold
        while abs(ev.normalized(lo, k)) < epsilon and lo > 1e-300:
            lo *= 1e-3
    while hi / lo - 1.0 > BISECT_REL_WIDTH:
        mid = math.sqrt(lo * hi)
        if abs(ev.normalized(mid, k)) < epsilon:
            hi = mid
        else:
            lo = mid
    return CoherenceResult(float(t), epsilon, math.sqrt(lo * hi), (lo, hi), curve)
