"""Conditioning data for a Brownian bridge on [0, 1].

A :class:`Knots` instance holds the points ``(t_i, x_i)`` the process is pinned
to.  Between two consecutive knots the process is an independent Brownian
bridge, represented by a :class:`Segment`.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

# Times closer than this are considered equal.
TIME_TOL = 1e-12


class KnotsError(ValueError):
    """Invalid conditioning data."""

    def __init__(self, message: str, index: int | None = None):
        self.index = index
        if index is not None:
            message = f"row {index}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Segment:
    """Brownian bridge from ``(t_lo, x_lo)`` to ``(t_hi, x_hi)``."""

    t_lo: float
    t_hi: float
    x_lo: float
    x_hi: float

    def __post_init__(self):
        vals = (self.t_lo, self.t_hi, self.x_lo, self.x_hi)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite segment data {vals}")
        if not self.t_hi > self.t_lo:
            raise ValueError(f"segment needs t_lo < t_hi, got {self.t_lo}, {self.t_hi}")

    @property
    def length(self) -> float:
        return self.t_hi - self.t_lo

    @property
    def gap(self) -> float:
        return abs(self.x_hi - self.x_lo)

    @property
    def floor(self) -> float:
        """Lower of the two endpoint values; the minimum lies below it."""
        return min(self.x_lo, self.x_hi)


@dataclass(frozen=True)
class Knots:
    times: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        object.__setattr__(self, "values", tuple(float(x) for x in self.values))
        _validate(self.times, self.values)

    @property
    def n(self) -> int:
        """Number of interior knots."""
        return len(self.times) - 2

    @property
    def rows(self) -> list[tuple[float, float]]:
        return list(zip(self.times, self.values))

    @property
    def min_value(self) -> float:
        return min(self.values)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Per-segment ``(x_lo, x_hi, length)`` arrays."""
        t = np.asarray(self.times)
        x = np.asarray(self.values)
        return x[:-1], x[1:], np.diff(t)

    def __len__(self) -> int:
        return len(self.times)


def _validate(times: Sequence[float], values: Sequence[float]) -> None:
    if len(times) != len(values):
        raise KnotsError(f"{len(times)} times but {len(values)} values")
    if len(times) < 2:
        raise KnotsError("at least two knots (the endpoints) are required")
    for i, (t, x) in enumerate(zip(times, values)):
        if not (math.isfinite(t) and math.isfinite(x)):
            raise KnotsError(f"non-finite entry ({t}, {x})", i)
    for i in range(1, len(times)):
        if times[i] - times[i - 1] <= TIME_TOL:
            if abs(times[i] - times[i - 1]) <= TIME_TOL:
                raise KnotsError(f"duplicate time {times[i]}", i)
            raise KnotsError(f"times not increasing at {times[i]}", i)
    if abs(times[0]) > TIME_TOL:
        raise KnotsError(f"first time must be 0, got {times[0]}", 0)
    if abs(times[-1] - 1.0) > TIME_TOL:
        raise KnotsError(f"last time must be 1, got {times[-1]}", len(times) - 1)


def knots_from_rows(rows: Iterable[Sequence[float]]) -> Knots:
    """Build validated knots from ``(time, value)`` pairs given in any order."""
    rows = [tuple(r) for r in rows]
    if not rows:
        raise KnotsError("no rows")
    for i, r in enumerate(rows):
        if len(r) != 2:
            raise KnotsError(f"expected (time, value), got {r!r}", i)
    parsed = []
    for i, (t, x) in enumerate(rows):
        try:
            parsed.append((float(t), float(x), i))
        except (TypeError, ValueError):
            raise KnotsError(f"not a number: {(t, x)!r}", i) from None
    for t, x, i in parsed:
        if not (math.isfinite(t) and math.isfinite(x)):
            raise KnotsError(f"non-finite entry ({t}, {x})", i)
    parsed.sort(key=lambda r: r[0])
    for (t0, _, i0), (t1, _, i1) in zip(parsed, parsed[1:]):
        if abs(t1 - t0) <= TIME_TOL:
            raise KnotsError(f"duplicate time {t1} (also at row {i0})", i1)
    return Knots([p[0] for p in parsed], [p[1] for p in parsed])


def segments(k: Knots) -> list[Segment]:
    t, x = k.times, k.values
    return [Segment(t[i], t[i + 1], x[i], x[i + 1]) for i in range(len(t) - 1)]


@dataclass(frozen=True)
class PairwiseConfig:
    """Two bridges reduced to ``(l1, d1, l2, d2, xi)``.

    ``xi`` is the floor of the second bridge minus the floor of the first.
    """

    l1: float
    d1: float
    l2: float
    d2: float
    xi: float

    def __post_init__(self):
        for name in ("l1", "d1", "l2", "d2", "xi"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.l1 <= 0 or self.l2 <= 0:
            raise ValueError("bridge lengths must be positive")
        if self.d1 < 0 or self.d2 < 0:
            raise ValueError("gaps must be nonnegative")

    @classmethod
    def from_segments(cls, seg1: Segment, seg2: Segment) -> "PairwiseConfig":
        return cls(seg1.length, seg1.gap, seg2.length, seg2.gap, seg2.floor - seg1.floor)

    @property
    def seg1(self) -> Segment:
        return Segment(0.0, self.l1, 0.0, self.d1)

    @property
    def seg2(self) -> Segment:
        return Segment(0.0, self.l2, self.xi, self.xi + self.d2)


# -- CSV ---------------------------------------------------------------------

def read_knots_csv(source) -> Knots:
    """Read knots from a path or text stream with header ``t,x``."""
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, newline="") as fh:
            return read_knots_csv(fh)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise KnotsError("empty file") from None
    if [h.strip() for h in header] != ["t", "x"]:
        raise KnotsError(f"expected header 't,x', got {','.join(header)!r}")
    rows = []
    for lineno, rec in enumerate(reader, start=2):
        if not rec or all(not f.strip() for f in rec):
            continue
        if len(rec) != 2:
            raise KnotsError(f"line {lineno}: expected 2 fields, got {len(rec)}")
        try:
            rows.append((float(rec[0]), float(rec[1])))
        except ValueError:
            raise KnotsError(f"line {lineno}: not a number: {','.join(rec)!r}") from None
    return knots_from_rows(rows)


def knots_to_csv(k: Knots) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "x"])
    for t, x in k.rows:
        w.writerow([format(t, ".17g"), format(x, ".17g")])
    return buf.getvalue()
