"""Benchmark of non-adaptive strategies for minimising a Brownian bridge path.

A strategy picks ``n`` sampling times in advance.  For each replicate a path is
revealed at those times, the conditional expectation of the true minimum is
estimated by simulation, and the strategy's error is its best sampled value
minus that estimate.
"""

from __future__ import annotations

import bisect
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.stats import norm

from . import analytic
from .model import TIME_TOL, Knots, Segment
from .rng import RngHandle
from .sampler import simulate_global_min

KINDS = ("eqd", "rnd", "eqp")


class UnsupportedBridgeError(ValueError):
    """No equal-probability points can be resolved for this bridge."""


@dataclass(frozen=True)
class Strategy:
    kind: str
    n_points: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown strategy {self.kind!r}; choose from {KINDS}")
        if self.n_points < 1:
            raise ValueError("n_points must be at least 1")


@dataclass(frozen=True)
class BenchConfig:
    bridge: Segment = Segment(0.0, 1.0, 0.0, 1.0)
    n_points: int = 2
    replicates: int = 1000
    inner_min_samples: int = 1000
    level: float = 0.95
    seed: int = 0

    def __post_init__(self):
        if self.replicates < 2:
            raise ValueError("need at least 2 replicates")
        if self.inner_min_samples < 1:
            raise ValueError("inner_min_samples must be at least 1")
        if self.n_points < 1:
            raise ValueError("n_points must be at least 1")
        if not 0 < self.level < 1:
            raise ValueError("level must lie in (0, 1)")


@dataclass(frozen=True)
class StrategyReport:
    strategy: Strategy
    errors: np.ndarray = field(repr=False)
    mean: float
    variance: float
    ci: tuple[float, float]


# -- sampling points ---------------------------------------------------------------

def eqd_points(n: int) -> list[float]:
    if n < 1:
        raise ValueError("n must be at least 1")
    return [k / (n + 1) for k in range(1, n + 1)]


def eqp_points(bridge: Segment, n: int) -> list[float]:
    """Times splitting the bridge into ``n + 1`` pieces equally likely to hold the minimum.

    Found by root-finding on the distribution function of the location of the
    minimum; a flat bridge gives equidistant points.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if bridge.gap == 0:
        return [bridge.t_lo + bridge.length * p for p in eqd_points(n)]
    if bridge.gap**2 / (2 * bridge.length) > 700:
        raise UnsupportedBridgeError(
            f"location law of {bridge} is concentrated within exp(-700) of an endpoint")
    pts = []
    lo = bridge.t_lo
    for k in range(1, n + 1):
        target = k / (n + 1)
        s = brentq(lambda s: analytic.argmin_cdf(bridge, s) - target, lo, bridge.t_hi,
                   xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=500)
        pts.append(s)
        lo = s
    return pts


def strategy_points(strategy: Strategy, bridge: Segment, rng: RngHandle | None = None) -> list[float]:
    if strategy.kind == "eqd":
        return [bridge.t_lo + bridge.length * p for p in eqd_points(strategy.n_points)]
    if strategy.kind == "eqp":
        return eqp_points(bridge, strategy.n_points)
    if rng is None:
        raise ValueError("rnd points need an RngHandle")
    return list(bridge.t_lo + bridge.length * rng.uniform(strategy.n_points))


# -- revealing a path ----------------------------------------------------------------

class RevealedPath:
    """Values of one bridge path revealed one time at a time."""

    def __init__(self, bridge: Segment):
        self.bridge = bridge
        self.times = [bridge.t_lo, bridge.t_hi]
        self.values = [bridge.x_lo, bridge.x_hi]

    def has(self, t: float) -> bool:
        j = bisect.bisect_left(self.times, t)
        return any(abs(self.times[m] - t) <= TIME_TOL for m in (j - 1, j) if 0 <= m < len(self.times))

    def reveal(self, t: float, z: float) -> float:
        """Insert time ``t`` using the standard normal ``z``; returns the value."""
        if not self.bridge.t_lo < t < self.bridge.t_hi:
            raise ValueError(f"time {t} outside the open bridge interval")
        if self.has(t):
            raise ValueError(f"time {t} already revealed")
        j = bisect.bisect_left(self.times, t)
        t0, t1 = self.times[j - 1], self.times[j]
        x0, x1 = self.values[j - 1], self.values[j]
        mean = x0 + (t - t0) / (t1 - t0) * (x1 - x0)
        x = mean + math.sqrt((t - t0) * (t1 - t) / (t1 - t0)) * z
        self.times.insert(j, t)
        self.values.insert(j, x)
        return x

    def reveal_many(self, points: Sequence[float], rng: RngHandle) -> list[float]:
        z = rng.normal(len(points))
        return [self.reveal(t, zi) for t, zi in zip(points, z)]

    def value_at(self, t: float) -> float:
        j = bisect.bisect_left(self.times, t)
        for m in (j - 1, j):
            if 0 <= m < len(self.times) and abs(self.times[m] - t) <= TIME_TOL:
                return self.values[m]
        raise KeyError(t)

    def observe_many(self, points: Sequence[float], rng: RngHandle) -> list[float]:
        """Like :meth:`reveal_many`, but times already revealed are read back.

        One normal is consumed per point either way, so the stream position
        does not depend on coincidences.
        """
        z = rng.normal(len(points))
        return [self.value_at(t) if self.has(t) else self.reveal(t, zi) for t, zi in zip(points, z)]

    def rows(self) -> list[tuple[float, float]]:
        return list(zip(self.times, self.values))


def reveal_path(points: Sequence[float], bridge: Segment, rng: RngHandle) -> list[tuple[float, float]]:
    """Reveal ``points`` in order, each from the bridge between its revealed neighbours."""
    path = RevealedPath(bridge)
    path.reveal_many(points, rng)
    return path.rows()


def estimate_true_min(revealed: Sequence[tuple[float, float]], inner_samples: int,
                      rng: RngHandle) -> float:
    """Mean of simulated minima of the path pinned at all revealed values."""
    t = np.array([r[0] for r in revealed], dtype=float)
    x = np.array([r[1] for r in revealed], dtype=float)
    if t[0] != 0.0 or t[-1] != 1.0:
        # rescale a general bridge interval onto [0, 1]; time scaling by c
        # scales values by sqrt(c)
        c = t[-1] - t[0]
        t = (t - t[0]) / c
        x0 = x[0]
        vals, _ = simulate_global_min(Knots(t, (x - x0) / math.sqrt(c)), rng, inner_samples)
        return float(x0 + math.sqrt(c) * vals.mean())
    vals, _ = simulate_global_min(Knots(t, x), rng, inner_samples)
    return float(vals.mean())


# -- the benchmark ---------------------------------------------------------------------

def _replicate(cfg: BenchConfig, kinds: tuple[str, ...], eqp_pts, couple_eqp: bool, r: int) -> dict:
    rng = RngHandle(cfg.seed, r)
    bridge = cfg.bridge
    ends = min(bridge.x_lo, bridge.x_hi)
    errors = {}
    shared = [k for k in kinds if k in ("eqd", "rnd") or (k == "eqp" and couple_eqp)]
    if shared:
        path = RevealedPath(bridge)
        best = {}
        for kind in ("eqd", "rnd", "eqp"):
            if kind not in shared:
                continue
            if kind == "eqd":
                pts = strategy_points(Strategy("eqd", cfg.n_points), bridge)
            elif kind == "eqp":
                pts = eqp_pts
            else:
                pts = _fresh_uniform(path, cfg.n_points, rng)
            vals = path.observe_many(pts, rng)
            best[kind] = min(ends, min(vals))
        est = estimate_true_min(path.rows(), cfg.inner_min_samples, rng)
        errors.update({kind: b - est for kind, b in best.items()})
    if "eqp" in kinds and not couple_eqp:
        path = RevealedPath(bridge)
        vals = path.reveal_many(eqp_pts, rng)
        est = estimate_true_min(path.rows(), cfg.inner_min_samples, rng)
        errors["eqp"] = min(ends, min(vals)) - est
    return errors


def _fresh_uniform(path: RevealedPath, n: int, rng: RngHandle) -> list[float]:
    bridge = path.bridge
    pts = []
    while len(pts) < n:
        t = bridge.t_lo + bridge.length * rng.uniform()
        # redraw on a (probability-zero) collision
        if not path.has(t) and all(abs(t - p) > TIME_TOL for p in pts) and bridge.t_lo < t < bridge.t_hi:
            pts.append(t)
    return pts


def _chunk(args):
    cfg, kinds, eqp_pts, couple, rs = args
    return [_replicate(cfg, kinds, eqp_pts, couple, r) for r in rs]


def run_benchmark(cfg: BenchConfig, strategies: Iterable[Strategy | str], couple_eqp: bool = False,
                  workers: int = 1) -> list[StrategyReport]:
    """Run every replicate and summarise the errors per strategy.

    eqd and rnd points are revealed on the same path (eqd first); eqp gets its
    own path unless ``couple_eqp``.  Replicate ``r`` draws from stream ``r`` of
    ``cfg.seed``, so results do not depend on ``workers``.
    """
    strategies = [Strategy(s, cfg.n_points) if isinstance(s, str) else s for s in strategies]
    if not strategies:
        raise ValueError("no strategies given")
    for s in strategies:
        if s.n_points != cfg.n_points:
            raise ValueError(f"{s} does not match cfg.n_points={cfg.n_points}")
    kinds = tuple(dict.fromkeys(s.kind for s in strategies))
    eqp_pts = eqp_points(cfg.bridge, cfg.n_points) if "eqp" in kinds else None

    reps = range(cfg.replicates)
    if workers > 1:
        size = math.ceil(cfg.replicates / workers)
        jobs = [(cfg, kinds, eqp_pts, couple_eqp, reps[i:i + size]) for i in range(0, cfg.replicates, size)]
        with ProcessPoolExecutor(workers) as pool:
            results = [e for part in pool.map(_chunk, jobs) for e in part]
    else:
        results = [_replicate(cfg, kinds, eqp_pts, couple_eqp, r) for r in reps]

    z = norm.ppf(0.5 + cfg.level / 2)
    reports = []
    for kind in kinds:
        errs = np.array([res[kind] for res in results])
        mean = float(errs.mean())
        var = float(errs.var(ddof=1))
        half = float(z) * math.sqrt(var / len(errs))
        reports.append(StrategyReport(Strategy(kind, cfg.n_points), errs, mean, var,
                                      (mean - half, mean + half)))
    return reports


def strategy_ratio_trend(cfg: BenchConfig, n_grid: Sequence[int] = (2, 4, 8, 16, 32, 64),
                         workers: int = 1) -> list[tuple[int, float]]:
    """Mean-error ratio eqd/rnd for each number of points."""
    out = []
    for n in n_grid:
        eqd, rnd = run_benchmark(replace(cfg, n_points=n), ["eqd", "rnd"], workers=workers)
        out.append((n, eqd.mean / rnd.mean))
    return out
