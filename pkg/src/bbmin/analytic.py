"""Closed-form laws of the minimum of Brownian bridges and of its location.

Functions taking a position argument (``y`` or ``s``) accept scalars or numpy
arrays; scalars give back a float.  Densities are zero off their support.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from scipy.special import erfc, erfcx

from . import _gk
from .model import Knots, Segment

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
LOG_2PI = math.log(2.0 * math.pi)


def _ret(v):
    v = np.asarray(v, dtype=float)
    return float(v) if v.ndim == 0 else v


def _check_finite(y, name="y"):
    if not np.all(np.isfinite(y)):
        raise ValueError(f"{name} must be finite")


# -- laws of the minimum value -------------------------------------------------

def bm_min_density(a: float, horizon: float, y):
    """Density of the minimum of Brownian motion started at ``a`` over ``horizon``."""
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    y = np.asarray(y, dtype=float)
    _check_finite(y)
    # reflection principle: |W| folded at the start point
    dens = SQRT_2_OVER_PI / math.sqrt(horizon) * np.exp(-((a - y) ** 2) / (2 * horizon))
    return _ret(np.where(y <= a, dens, 0.0))


def bridge_min_density(seg: Segment, y):
    y = np.asarray(y, dtype=float)
    _check_finite(y)
    a, b, ell = seg.x_lo, seg.x_hi, seg.length
    below = y < min(a, b)
    yy = np.where(below, y, min(a, b))
    dens = (2.0 / ell) * (a + b - 2 * yy) * np.exp(-2 * (a - yy) * (b - yy) / ell)
    return _ret(np.where(below, dens, 0.0))


def bridge_min_cdf(seg: Segment, y):
    y = np.asarray(y, dtype=float)
    a, b, ell = seg.x_lo, seg.x_hi, seg.length
    below = y < min(a, b)
    yy = np.where(below, y, min(a, b))
    with np.errstate(over="ignore", invalid="ignore"):
        cdf = np.exp(-2 * (a - yy) * (b - yy) / ell)
    cdf = np.where(np.isneginf(y), 0.0, cdf)
    return _ret(np.where(below, cdf, 1.0))


def bridge_min_inverse_cdf(seg: Segment, z):
    z = np.asarray(z, dtype=float)
    if np.any(~((z > 0) & (z < 1))):
        raise ValueError("z must lie in the open interval (0, 1)")
    a, b, ell = seg.x_lo, seg.x_hi, seg.length
    return _ret(0.5 * (a + b - np.sqrt((b - a) ** 2 - 2 * ell * np.log(z))))


def global_min_survival(k: Knots, y):
    """P{m(X) > y} for the process pinned at ``k``."""
    y = np.asarray(y, dtype=float)
    a, b, ell = k.arrays()
    below = y < k.min_value
    yy = np.where(below, y, k.min_value)[..., None]
    with np.errstate(over="ignore", invalid="ignore"):
        factors = -np.expm1(-2 * (a - yy) * (b - yy) / ell)
    surv = np.prod(factors, axis=-1)
    surv = np.where(np.isneginf(y), 1.0, surv)
    return _ret(np.where(below, surv, 0.0))


# -- pairwise comparisons in closed form -------------------------------------

def pairwise_prob_closed_d2(d2: float) -> float:
    """P{m(B1) < m(B2)} for (0,0)->(0.5,0) against (0.5,0)->(1,d2)."""
    if not d2 >= 0:
        raise ValueError("d2 must be nonnegative")
    # exp(d2^2/2) * erfc(d2/sqrt2) == erfcx(d2/sqrt2), stable for large d2
    return 0.5 + math.sqrt(math.pi / 8) * d2 * float(erfcx(d2 / math.sqrt(2)))


def pairwise_prob_closed_l2(l2: float) -> float:
    """P{m(B1) < m(B2)} for (0,0)->(0.5,0) against a zero bridge of length ``l2``."""
    if not l2 > 0:
        raise ValueError("l2 must be positive")
    return 1.0 / (2 * l2 + 1)


# -- location of the minimum ---------------------------------------------------

def _h(seg: Segment, s):
    """Ratio of time spent on the high side over the low side of the bridge."""
    u = s - seg.t_lo
    v = seg.t_hi - s
    with np.errstate(divide="ignore", invalid="ignore"):
        if seg.x_hi <= seg.x_lo:
            return v / u
        return u / v


def argmin_density(seg: Segment, s):
    """Marginal density of the location of the minimum of one bridge.

    For a flat bridge (``gap == 0``) this is the uniform density ``1/length``.
    """
    s = np.asarray(s, dtype=float)
    ell, d = seg.length, seg.gap
    inside = (s >= seg.t_lo) & (s <= seg.t_hi)
    if d == 0.0:
        return _ret(np.where(inside, 1.0 / ell, 0.0))
    h = _h(seg, np.clip(s, seg.t_lo, seg.t_hi))
    q = d * d / (2 * ell) * h
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        first = d / ell**1.5 * np.sqrt(2.0 / (math.pi * h)) * np.exp(-q)
        second = (ell - d * d) / ell**2 * erfc(np.sqrt(q))
        dens = first + second
    dens = np.where(np.isinf(h), 0.0, dens)
    dens = np.where(h == 0, np.inf, dens)
    return _ret(np.where(inside, dens, 0.0))


def argmin_cdf(seg: Segment, s, eps: float = 1e-13):
    """P{location <= s}, by quadrature of :func:`argmin_density`.

    The inverse-square-root singularity at the low endpoint is removed with a
    quadratic change of variable before integrating.
    """
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    out = np.empty_like(s_arr)
    for idx, si in enumerate(s_arr):
        out[idx] = _argmin_cdf_scalar(seg, float(si), eps)
    return _ret(out.reshape(np.shape(s)))


def _argmin_cdf_scalar(seg: Segment, s: float, eps: float) -> float:
    if s <= seg.t_lo:
        return 0.0
    if s >= seg.t_hi:
        return 1.0
    if seg.gap == 0.0:
        return (s - seg.t_lo) / seg.length

    def mass(lo, width):
        # integral of the density over [lo, lo + width] (width may be negative)
        def g(w):
            return argmin_density(seg, lo + width * w * w) * 2 * abs(width) * w
        return _gk.integrate(g, 0.0, 1.0, eps=eps).value

    if seg.x_lo < seg.x_hi:
        return min(1.0, max(0.0, mass(seg.t_lo, s - seg.t_lo)))
    return min(1.0, max(0.0, 1.0 - mass(seg.t_hi, s - seg.t_hi)))


def joint_min_argmin_density(seg: Segment, y, s):
    """Joint density of (minimum value, location) for one bridge."""
    y, s = np.broadcast_arrays(np.asarray(y, dtype=float), np.asarray(s, dtype=float))
    a, b, ell = seg.x_lo, seg.x_hi, seg.length
    u = s - seg.t_lo
    v = seg.t_hi - s
    ok = (y < min(a, b)) & (u > 0) & (v > 0)
    yy = np.where(ok, y, min(a, b) - 1.0)
    uu = np.where(ok, u, 0.5 * ell)
    vv = np.where(ok, v, 0.5 * ell)
    logf = (np.log((a - yy) * (b - yy)) + 0.5 * math.log(2 * ell) - 0.5 * math.log(math.pi)
            - 1.5 * np.log(uu) - 1.5 * np.log(vv)
            + (b - a) ** 2 / (2 * ell) - (a - yy) ** 2 / (2 * uu) - (b - yy) ** 2 / (2 * vv))
    return _ret(np.where(ok, np.exp(logf), 0.0))


class ArgminCondCoeffs(NamedTuple):
    A: float
    B: float
    C: float

    @property
    def log_C(self) -> float:
        return math.log(self.C)


def _check_below(seg: Segment, y: float):
    if not (math.isfinite(y) and y < seg.floor):
        raise ValueError(f"conditioning level {y} must lie below min endpoint {seg.floor}")


def _log_C(seg: Segment, y: float) -> float:
    a, b, ell = seg.x_lo, seg.x_hi, seg.length
    return (1.5 * math.log(ell) + math.log(a - y) + math.log(b - y) - 0.5 * LOG_2PI
            - math.log(a + b - 2 * y) + (a + b - 2 * y) ** 2 / (2 * ell))


def argmin_cond_coeffs(seg: Segment, y: float) -> ArgminCondCoeffs:
    """Coefficients of the location density given the minimum equals ``y``.

    ``C`` overflows to ``inf`` for very short bridges; the density itself is
    evaluated in log space and stays finite.
    """
    _check_below(seg, y)
    A = (seg.x_lo - y) ** 2
    B = (seg.x_hi - y) ** 2
    lc = _log_C(seg, y)
    C = math.exp(lc) if lc < 709 else math.inf
    return ArgminCondCoeffs(A, B, C)


def _cond_log_density(seg: Segment, y: float, log_c: float, s):
    u = s - seg.t_lo
    v = seg.t_hi - s
    A = (seg.x_lo - y) ** 2
    B = (seg.x_hi - y) ** 2
    return log_c - 1.5 * np.log(u) - 1.5 * np.log(v) - A / (2 * u) - B / (2 * v)


def argmin_cond_density(seg: Segment, y: float, s):
    """Density of the location of the minimum given the minimum equals ``y``."""
    _check_below(seg, y)
    s = np.asarray(s, dtype=float)
    ok = (s > seg.t_lo) & (s < seg.t_hi)
    ss = np.where(ok, s, seg.t_lo + 0.5 * seg.length)
    logf = _cond_log_density(seg, y, _log_C(seg, y), ss)
    return _ret(np.where(ok, np.exp(logf), 0.0))


def _cubic_real_roots(c3: float, c2: float, c1: float, c0: float) -> list[float]:
    """Real roots of c3 x^3 + c2 x^2 + c1 x + c0 (c3 != 0), trigonometric/Cardano."""
    a, b, c = c2 / c3, c1 / c3, c0 / c3
    # depressed cubic x = t - a/3: t^3 + p t + q
    p = b - a * a / 3
    q = 2 * a**3 / 27 - a * b / 3 + c
    shift = -a / 3
    disc = (q / 2) ** 2 + (p / 3) ** 3
    if p == 0 and q == 0:
        return [shift]
    if disc > 0:
        r = math.sqrt(disc)
        t = math.copysign(abs(-q / 2 + r) ** (1 / 3), -q / 2 + r) + \
            math.copysign(abs(-q / 2 - r) ** (1 / 3), -q / 2 - r)
        return [t + shift]
    # three real roots (p < 0)
    m = 2 * math.sqrt(-p / 3)
    arg = 3 * q / (p * m)
    theta = math.acos(max(-1.0, min(1.0, arg))) / 3
    return [m * math.cos(theta - 2 * math.pi * k / 3) + shift for k in range(3)]


def _polish(poly, dpoly, lo: float, hi: float, x0: float, tol: float) -> float:
    """Newton's method kept inside the sign-change bracket [lo, hi]."""
    flo = poly(lo)
    x = min(max(x0, lo), hi)
    for _ in range(200):
        fx = poly(x)
        if fx == 0:
            return x
        if (fx > 0) == (flo > 0):
            lo, flo = x, fx
        else:
            hi = x
        dfx = dpoly(x)
        step_ok = dfx != 0
        if step_ok:
            xn = x - fx / dfx
            step_ok = lo < xn < hi
        if not step_ok:
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= tol or hi - lo <= tol:
            return xn
        x = xn
    return x


def argmin_cond_mode(seg: Segment, y: float) -> tuple[float, float]:
    """Global maximiser and maximum of :func:`argmin_cond_density`.

    Critical points solve the cubic obtained by differentiating the log
    density and clearing denominators.  In the unit variable
    ``w = (s - t_lo) / length`` it reads
    ``-6 w^3 + (9 + alpha - beta) w^2 - (3 + 2 alpha) w + alpha`` with
    ``alpha = A/length``, ``beta = B/length``; it is positive at 0 and negative
    at 1, so at least one maximum is interior.
    """
    _check_below(seg, y)
    ell = seg.length
    alpha = (seg.x_lo - y) ** 2 / ell
    beta = (seg.x_hi - y) ** 2 / ell
    c3, c2, c1, c0 = -6.0, 9.0 + alpha - beta, -(3.0 + 2.0 * alpha), alpha

    def poly(w):
        return ((c3 * w + c2) * w + c1) * w + c0

    def dpoly(w):
        return (3 * c3 * w + 2 * c2) * w + c1

    # monotone pieces of the cubic on [0, 1]
    breaks = [0.0, 1.0]
    qa, qb, qc = 3 * c3, 2 * c2, c1
    qd = qb * qb - 4 * qa * qc
    if qd > 0:
        r = math.sqrt(qd)
        for w in ((-qb - r) / (2 * qa), (-qb + r) / (2 * qa)):
            if 0.0 < w < 1.0:
                breaks.append(w)
    breaks.sort()
    guesses = _cubic_real_roots(c3, c2, c1, c0)
    tol = max(1e-12 / ell, 4 * np.finfo(float).eps)
    maxima = []
    for lo, hi in zip(breaks, breaks[1:]):
        plo, phi = poly(lo), poly(hi)
        # a maximum of the density is where the cubic goes from + to -
        if not (plo > 0 and phi < 0):
            continue
        inside = [g for g in guesses if lo <= g <= hi]
        x0 = inside[0] if inside else 0.5 * (lo + hi)
        maxima.append(_polish(poly, dpoly, lo, hi, x0, tol))
    if not maxima:
        raise RuntimeError(f"no interior maximum found for {seg} at y={y}")
    log_c = _log_C(seg, y)
    best_s, best_logf = math.nan, -math.inf
    for w in maxima:
        s = seg.t_lo + ell * min(max(w, 1e-300), 1.0)
        s = min(max(s, math.nextafter(seg.t_lo, math.inf)), math.nextafter(seg.t_hi, -math.inf))
        lf = float(_cond_log_density(seg, y, log_c, s))
        if lf > best_logf:
            best_s, best_logf = s, lf
    return best_s, math.exp(best_logf)


# -- the (0,0) -> (1,1) bridge ---------------------------------------------------

EQP_BRIDGE = Segment(0.0, 1.0, 0.0, 1.0)


def eqp_location_density(s):
    """Location density of the minimum of the (0,0)->(1,1) bridge."""
    s = np.asarray(s, dtype=float)
    if np.any(~((s > 0) & (s < 1))):
        raise ValueError("s must lie in (0, 1)")
    return _ret(np.sqrt(2 * (1 - s) / (math.pi * s)) * np.exp(-s / (2 * (1 - s))))
