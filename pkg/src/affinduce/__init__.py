"""Exact-arithmetic induced Markov maps for piecewise affine interval maps.

The pipeline: model a continuous piecewise affine map with rational data,
certify a nice neighborhood of its critical set, enumerate the good
intervals that make up the induced Markov map, outer-approximate the bad
set and its pullback tubes, and run ergodic diagnostics (invariant
densities, conservativity, ergodic-component statistics). All geometry is
exact rational; floating point appears only in the ergodic statistics.
"""
from .exact import AffineQ, IntervalQ, Rat, interval_image, interval_union_measure, rat, rat_str
from .pamap import (
    BudgetError,
    ExpansionReport,
    MapSpecError,
    OrbitRecord,
    PAMap,
    Renormalization,
    expansion_report,
    find_renormalization,
    laps_of_iterate,
)

__version__ = "0.1.0"

__all__ = [
    "AffineQ",
    "BudgetError",
    "ExpansionReport",
    "IntervalQ",
    "MapSpecError",
    "OrbitRecord",
    "PAMap",
    "Rat",
    "Renormalization",
    "__version__",
    "expansion_report",
    "find_renormalization",
    "interval_image",
    "interval_union_measure",
    "laps_of_iterate",
    "rat",
    "rat_str",
]
