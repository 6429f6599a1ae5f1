"""Probability that the minimum falls in a given interval, by quadrature.

For interval ``i`` the target is

    P_i = int_{-inf}^{min x} f_i(y) prod_{j != i} (1 - F_j(y)) dy

where ``f_i`` is the density of the minimum of bridge ``i`` and ``F_j`` the
distribution function of the minimum of bridge ``j``.  Four integration
methods are available; ``adaptive-gk`` is the default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _gk
from .model import Knots, PairwiseConfig, Segment

METHODS = ("adaptive-gk", "rigorous-rectangle", "riemann-left", "riemann-random")
RIEMANN_SUBINTERVALS = 10_000
_RECT_CHUNK = 1 << 20


@dataclass(frozen=True)
class QuadConfig:
    eps: float = 1e-9
    method: str = "adaptive-gk"
    transform: bool = True
    max_evals: int = 2_000_000_000

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.max_evals < 21:
            raise ValueError("max_evals must be at least 21")


@dataclass(frozen=True)
class QuadResult:
    value: float
    est_error: float
    evals: int
    rigorous_bound: Optional[float] = None
    converged: bool = True


class _MinFirst:
    """Integrand ``f_i(y) * prod_{j != i} (1 - F_j(y))`` over bridges (a, b, ell)."""

    def __init__(self, a, b, ell, i: int):
        self.a = np.asarray(a, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.ell = np.asarray(ell, dtype=float)
        self.i = i
        self.top = float(np.minimum(self.a, self.b).min())
        self.others = np.arange(len(self.a)) != i

    def __call__(self, y):
        y = np.atleast_1d(np.asarray(y, dtype=float))
        a, b, ell, i = self.a, self.b, self.ell, self.i
        below = y < self.top
        yy = np.where(below, y, self.top)
        f = (2.0 / ell[i]) * (a[i] + b[i] - 2 * yy) * np.exp(-2 * (a[i] - yy) * (b[i] - yy) / ell[i])
        if self.others.any():
            ao, bo, lo = a[self.others], b[self.others], ell[self.others]
            surv = -np.expm1(-2 * (ao - yy[:, None]) * (bo - yy[:, None]) / lo)
            f = f * np.prod(surv, axis=1)
        return np.where(below, f, 0.0)

    def on_unit(self, x):
        """Same integrand after ``y = top - (1 - x)/x``, with Jacobian 1/x^2."""
        x = np.asarray(x, dtype=float)
        pos = x > 0
        xs = np.where(pos, x, 1.0)
        y = self.top - (1 - xs) / xs
        with np.errstate(over="ignore", invalid="ignore"):
            g = self(y) / (xs * xs)
        g = np.where(np.isfinite(g), g, 0.0)
        return np.where(pos, g, 0.0)


def tail_cutoff(seg: Segment, eps: float) -> float:
    """Level below which the minimum of ``seg`` has probability at most ``eps``."""
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    return seg.floor - math.sqrt(seg.length / 2 * math.log(1 / eps))


def rectangle_step(k: Knots, i: int, x_hat: float, eps: float) -> tuple[float, float, float]:
    """Rectangle-rule step ``h`` guaranteeing error <= eps on [x_hat, min x].

    Returns ``(h, C, L)`` where ``C`` bounds the derivative of the integrand and
    ``L`` is the length of the integration range.
    """
    a, b, ell = k.arrays()
    return _rectangle_step(a, b, ell, i, x_hat, eps)


def _rectangle_step(a, b, ell, i, x_hat, eps):
    top = float(np.minimum(a, b).min())
    if not x_hat < top:
        raise ValueError("x_hat must lie below the smallest knot value")
    spread = a + b - 2 * x_hat
    C = 4.0 / ell[i] * (1.0 + spread[i] * float(np.sum(spread / ell)))
    L = top - x_hat
    return 2 * eps / (C * L), float(C), float(L)


def _gk_unit(fn: _MinFirst, cfg: QuadConfig):
    if cfg.transform:
        return _gk.integrate(fn.on_unit, 0.0, 1.0, eps=cfg.eps, max_evals=cfg.max_evals)
    # untransformed: finite range below the cutoff carries at most eps/1e3
    lo = min(tail_cutoff(Segment(0.0, fn.ell[fn.i], fn.a[fn.i], fn.b[fn.i]), cfg.eps * 1e-3),
             fn.top - 1e-3)
    r = _gk.integrate(fn, lo, fn.top, eps=cfg.eps * 0.999, max_evals=cfg.max_evals)
    return _gk.GKResult(r.value, r.error + cfg.eps * 1e-3, r.evals, r.converged)


def _rectangle(fn: _MinFirst, cfg: QuadConfig) -> QuadResult:
    seg_i = Segment(0.0, fn.ell[fn.i], fn.a[fn.i], fn.b[fn.i])
    x_hat = tail_cutoff(seg_i, cfg.eps)
    tail_bound = cfg.eps
    if not x_hat < fn.top:
        # whole range below the global floor is already within the tail bound
        tail_bound = math.exp(-2 * (seg_i.x_lo - fn.top) * (seg_i.x_hi - fn.top) / seg_i.length)
        return QuadResult(0.0, tail_bound, 0, rigorous_bound=tail_bound, converged=True)
    h_max, C, L = _rectangle_step(fn.a, fn.b, fn.ell, fn.i, x_hat, cfg.eps)
    n_steps = math.ceil(L / h_max)
    converged = n_steps <= cfg.max_evals
    n_steps = min(n_steps, cfg.max_evals)
    h = L / n_steps
    partial = []
    for start in range(0, n_steps, _RECT_CHUNK):
        ks = np.arange(start, min(start + _RECT_CHUNK, n_steps), dtype=float)
        partial.append(float(np.sum(fn(x_hat + ks * h))))
    value = math.fsum(partial) * h
    rect_bound = 0.5 * C * h * L
    return QuadResult(value, rect_bound, n_steps, rigorous_bound=tail_bound + rect_bound,
                      converged=converged)


def _riemann(fn: _MinFirst, cfg: QuadConfig, rng, random: bool) -> QuadResult:
    n = RIEMANN_SUBINTERVALS
    offs = rng.uniform(n) if random else np.zeros(n)
    x = (np.arange(n) + offs) / n
    if cfg.transform:
        value = float(np.sum(fn.on_unit(x))) / n
    else:
        seg_i = Segment(0.0, fn.ell[fn.i], fn.a[fn.i], fn.b[fn.i])
        lo = min(tail_cutoff(seg_i, cfg.eps), fn.top - 1e-3)
        value = float(np.sum(fn(lo + x * (fn.top - lo)))) * (fn.top - lo) / n
    ref = _gk_unit(fn, QuadConfig(eps=min(cfg.eps, 1e-12)))
    return QuadResult(value, abs(value - ref.value), n, converged=True)


def _integrate(fn: _MinFirst, cfg: QuadConfig, rng=None) -> QuadResult:
    if cfg.method == "adaptive-gk":
        r = _gk_unit(fn, cfg)
        return QuadResult(float(r.value), float(r.error), r.evals, converged=bool(r.converged))
    if cfg.method == "rigorous-rectangle":
        return _rectangle(fn, cfg)
    if cfg.method == "riemann-left":
        return _riemann(fn, cfg, None, random=False)
    if rng is None:
        raise ValueError("riemann-random needs an explicit RngHandle")
    return _riemann(fn, cfg, rng, random=True)


def interval_prob(k: Knots, i: int, cfg: QuadConfig = QuadConfig(), rng=None) -> QuadResult:
    """Probability that the minimum of the pinned process lies in [t_i, t_{i+1}]."""
    if not 0 <= i <= k.n:
        raise IndexError(f"interval index {i} outside 0..{k.n}")
    a, b, ell = k.arrays()
    return _integrate(_MinFirst(a, b, ell, i), cfg, rng)


def interval_probs(k: Knots, cfg: QuadConfig = QuadConfig(), rng=None) -> list[QuadResult]:
    return [interval_prob(k, i, cfg, rng) for i in range(k.n + 1)]


def pairwise_prob(pc: PairwiseConfig, q: QuadConfig = QuadConfig(), rng=None) -> QuadResult:
    """P{m(B1) < m(B2)} for two independent bridges.

    In coordinates relative to the floor of the first bridge this integrates
    ``(2/l1)(d1 - 2y) exp(2y(d1 - y)/l1) * (1 - exp(2(y - xi)(d2 - (y - xi))/l2))``
    over ``y <= min(xi, 0)``.
    """
    a = np.array([0.0, pc.xi])
    b = np.array([pc.d1, pc.xi + pc.d2])
    ell = np.array([pc.l1, pc.l2])
    return _integrate(_MinFirst(a, b, ell, 0), q, rng)
