"""Exact simulation of the minimum of a pinned Brownian path and of its location."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.stats import chi2

from . import analytic
from .model import Knots, Segment, segments
from .rng import RngHandle

MAX_PROPOSALS = 10**6
# expected uniform proposals per accepted draw above which "auto" switches
# from acceptance/rejection to the inverse-Gaussian mixture
AR_COST_LIMIT = 1000.0
# relative slack on the envelope; covers rounding in the density at the mode
_ENVELOPE_SLACK = 1e-9


# -- minimum value ---------------------------------------------------------------

def simulate_segment_min(seg: Segment, rng: RngHandle, size=None):
    """Minimum of one bridge by inversion of its distribution function."""
    return analytic.bridge_min_inverse_cdf(seg, rng.uniform(size))


def simulate_global_min(k: Knots, rng: RngHandle, size=None):
    """Minimum of the pinned process and the index of the segment attaining it.

    Every segment minimum is drawn (cost linear in the number of segments);
    ties go to the lowest index.
    """
    a, b, ell = k.arrays()
    n = 1 if size is None else int(size)
    z = rng.uniform((n, len(a)))
    mins = 0.5 * (a + b - np.sqrt((b - a) ** 2 - 2 * ell * np.log(z)))
    idx = np.argmin(mins, axis=1)
    vals = mins[np.arange(n), idx]
    if size is None:
        return float(vals[0]), int(idx[0])
    return vals, idx


@dataclass(frozen=True)
class FreqReport:
    counts: np.ndarray
    level: float
    intervals: np.ndarray  # shape (k, 2)

    @property
    def n_draws(self) -> int:
        return int(self.counts.sum())

    @property
    def freqs(self) -> np.ndarray:
        return self.counts / self.n_draws


def goodman_intervals(counts, level: float = 0.95) -> np.ndarray:
    """Goodman's simultaneous intervals for multinomial proportions.

    Each category gets a Wilson-type interval at Bonferroni level
    ``1 - (1 - level)/k``.
    """
    counts = np.asarray(counts, dtype=float)
    n = counts.sum()
    k = len(counts)
    A = chi2.ppf(1 - (1 - level) / k, df=1)
    half = np.sqrt(A * (A + 4 * counts * (n - counts) / n))
    lo = (A + 2 * counts - half) / (2 * (n + A))
    hi = (A + 2 * counts + half) / (2 * (n + A))
    return np.column_stack([np.clip(lo, 0, 1), np.clip(hi, 0, 1)])


def freq_report(k: Knots, n_draws: int, level: float = 0.95, rng: RngHandle | None = None) -> FreqReport:
    """Frequencies with which each interval hosts the simulated minimum."""
    if n_draws < 100:
        raise ValueError("n_draws must be at least 100")
    rng = rng or RngHandle()
    _, idx = simulate_global_min(k, rng, n_draws)
    counts = np.bincount(idx, minlength=k.n + 1)
    return FreqReport(counts, level, goodman_intervals(counts, level))


# -- location of the minimum -----------------------------------------------------

def argmin_given_min_ar(seg: Segment, y: float, rng: RngHandle, size: int = 1,
                        max_proposals: int = MAX_PROPOSALS):
    """Acceptance/rejection draws of the location given the minimum ``y``.

    Proposals are uniform on the segment and the envelope is the density's
    maximum from :func:`analytic.argmin_cond_mode`.  Returns the draws and the
    number of proposals used.
    """
    _, f_max = analytic.argmin_cond_mode(seg, y)
    envelope = f_max * (1 + _ENVELOPE_SLACK)
    cost = seg.length * envelope
    out = np.empty(size)
    got = proposals = 0
    while got < size:
        batch = int(min(max(16, 1.2 * cost * (size - got)), 1 << 20))
        s = seg.t_lo + seg.length * rng.uniform(batch)
        u = rng.uniform(batch)
        proposals += batch
        hits = np.flatnonzero(u * envelope <= analytic.argmin_cond_density(seg, y, s))
        take = min(len(hits), size - got)
        out[got:got + take] = s[hits[:take]]
        if take < len(hits):
            # proposals after the last needed acceptance are not counted
            proposals -= batch - 1 - hits[take - 1]
        got += take
        if proposals > max_proposals * size:
            raise RuntimeError(f"acceptance/rejection exceeded {max_proposals} proposals per draw "
                               f"for {seg} at y={y}; envelope is suspect")
    return out, proposals


def argmin_given_min_ig(seg: Segment, y: float, rng: RngHandle, size=None):
    """Location given the minimum ``y`` through an inverse-Gaussian mixture.

    With ``r = (s - t_lo)/(t_hi - s)`` the conditional density becomes
    proportional to ``(r^{-3/2} + r^{-1/2}) exp(-A/(2 l r) - B r/(2 l))``: an
    inverse Gaussian ``IG(sqrt(A/B), A/l)`` mixed with the reciprocal of
    ``IG(sqrt(B/A), B/l)``, weights ``sqrt(B)`` and ``sqrt(A)``.
    """
    analytic._check_below(seg, y)
    ra, rb = seg.x_lo - y, seg.x_hi - y  # sqrt(A), sqrt(B)
    ell = seg.length
    first = rng.uniform(size) * (ra + rb) < rb
    g1 = rng.inverse_gaussian(ra / rb, ra * ra / ell, size)
    g2 = rng.inverse_gaussian(rb / ra, rb * rb / ell, size)
    r = np.where(first, g1, 1.0 / g2)
    s = seg.t_lo + ell * (r / (1.0 + r))
    s = np.clip(s, seg.t_lo, seg.t_hi)
    return float(s) if np.ndim(s) == 0 else s


def simulate_argmin_given_min(seg: Segment, y: float, rng: RngHandle, method: str = "auto") -> float:
    """One exact draw of the location of the minimum given that it equals ``y``.

    ``method`` is ``"ar"``, ``"ig"`` or ``"auto"``; ``auto`` uses
    acceptance/rejection unless its expected cost exceeds ``AR_COST_LIMIT``
    proposals, which happens when ``y`` sits just below an endpoint.
    """
    if method == "ig":
        return argmin_given_min_ig(seg, y, rng)
    if method == "auto":
        _, f_max = analytic.argmin_cond_mode(seg, y)
        if seg.length * f_max > AR_COST_LIMIT:
            return argmin_given_min_ig(seg, y, rng)
    elif method != "ar":
        raise ValueError(f"unknown method {method!r}")
    return float(argmin_given_min_ar(seg, y, rng, 1)[0][0])


class ArgminSample(NamedTuple):
    segment_index: int
    min_value: float
    location: float


def simulate_global_argmin(k: Knots, rng: RngHandle, size=None, method: str = "auto"):
    """Joint draw of the minimum of the pinned process, its segment and location.

    Given all segment minima, the location of the global minimum is the
    location of the minimum of the winning segment conditioned on its own
    minimum only.
    """
    segs = segments(k)
    vals, idx = simulate_global_min(k, rng, 1 if size is None else size)
    out = [ArgminSample(int(j), float(v), simulate_argmin_given_min(segs[j], float(v), rng, method))
           for v, j in zip(vals, idx)]
    return out[0] if size is None else out


def sample_bridge_point(t_lo: float, x_lo: float, t_hi: float, x_hi: float, t: float,
                        rng: RngHandle, size=None):
    """Value at time ``t`` of the bridge from (t_lo, x_lo) to (t_hi, x_hi)."""
    if not t_lo < t < t_hi:
        raise ValueError(f"t={t} must lie strictly inside ({t_lo}, {t_hi})")
    ell = t_hi - t_lo
    mean = x_lo + (t - t_lo) / ell * (x_hi - x_lo)
    sd = math.sqrt((t - t_lo) * (t_hi - t) / ell)
    return mean + sd * rng.normal(size)


# -- summaries -------------------------------------------------------------------

@dataclass(frozen=True)
class HistogramTable:
    bin_center: np.ndarray
    count: np.ndarray
    kde: np.ndarray
    bandwidth: float

    def rows(self):
        return list(zip(self.bin_center.tolist(), self.count.tolist(), self.kde.tolist()))


def silverman_bandwidth(samples) -> float:
    x = np.asarray(samples, dtype=float)
    sd = x.std(ddof=1)
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34)
    if spread <= 0:
        spread = sd
    return 0.9 * spread * len(x) ** (-0.2)


def histogram_and_kde(samples, bins: int, bandwidth: float | None = None) -> HistogramTable:
    """Equal-width histogram with a Gaussian kernel density at the bin centres."""
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValueError("no samples")
    if bins < 2:
        raise ValueError("need at least two bins")
    if np.ptp(x) == 0:
        raise ValueError("all samples are identical; bandwidth is undefined")
    counts, edges = np.histogram(x, bins=bins)
    centers = 0.5 * (edges[:-1] + edges[1:])
    bw = silverman_bandwidth(x) if bandwidth is None else float(bandwidth)
    if not bw > 0:
        raise ValueError("bandwidth must be positive")
    dens = np.zeros(bins)
    for start in range(0, x.size, 100_000):
        z = (centers[:, None] - x[None, start:start + 100_000]) / bw
        dens += np.exp(-0.5 * z * z).sum(axis=1)
    dens /= x.size * bw * math.sqrt(2 * math.pi)
    return HistogramTable(centers, counts, dens, bw)
