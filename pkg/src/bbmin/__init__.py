"""Minimum of a Brownian path pinned at given points: its law, its location, exact
simulation, and a benchmark of non-adaptive sampling strategies built on them."""

from .model import Knots, KnotsError, PairwiseConfig, Segment, knots_from_rows, read_knots_csv, segments
from .quadrature import QuadConfig, QuadResult, interval_prob, interval_probs, pairwise_prob
from .rng import RngHandle

__version__ = "0.1.0"

__all__ = [
    "Knots", "KnotsError", "PairwiseConfig", "Segment", "knots_from_rows", "read_knots_csv",
    "segments", "QuadConfig", "QuadResult", "interval_prob", "interval_probs", "pairwise_prob",
    "RngHandle",
]
