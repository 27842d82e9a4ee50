"""Invariant densities and orbit statistics.

The transfer operator is discretized on an equal grid with exact rational
entries (affine preimages of cell boundaries), then the dominant
eigenvector is found by plain float power iteration: the matrix is column
stochastic, so the iteration is deterministic and self-normalizing. Orbit
statistics (conservativity, ergodic-component evidence) run on the
seeded sampler so identical seeds reproduce identical reports.
"""
from __future__ import annotations

from bisect import bisect_left, bisect_right
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .badset import BadSetApprox
from .exact import (
    IntervalQ,
    Rat,
    closed_measure,
    closed_intersection,
    fatten_closed,
    pieces_min_gap,
    rat_str,
)
from .induce import GoodForest, ResidualCurve, markov_residual_curve
from .nice import NiceNbhd
from .pamap import ExpansionReport, PAMap, expansion_report
from .sampling import (
    capped_orbit_tail,
    cell_counts,
    first_hit_time,
    sample_start,
)


@dataclass
class UlamModel:
    """Grid discretization of the transfer operator with its fixed density."""

    cells: int
    transition: list[list[Rat]]  # column-stochastic, entry [i][j] = mass j -> i
    density: np.ndarray  # per-cell density values (integrates to 1)
    tv: float  # total variation of the density vector
    iterations: int
    residual: float

    def to_json(self) -> dict:
        return {
            "cells": self.cells,
            "tv": self.tv,
            "iterations": self.iterations,
            "residual": self.residual,
            "density": [float(v) for v in self.density],
        }


def ulam_model(
    m: PAMap, cells: int, tol: float = 1e-12, max_iter: int = 1_000_000
) -> UlamModel:
    """Exact cell-to-cell transition fractions plus the stationary density."""
    if cells < 2:
        raise ValueError("cells must be >= 2")
    phase = m.phase
    width = phase.length / cells
    bounds = [phase.lo + width * k for k in range(cells + 1)]
    transition: list[list[Rat]] = [[Fraction(0)] * cells for _ in range(cells)]
    for j in range(cells):
        cell = IntervalQ(bounds[j], bounds[j + 1])
        for lap in m.laps:
            piece = lap.interval.intersection(cell)
            if piece is None or piece.is_point:
                continue
            img = lap.data.image(piece.closure())
            # distribute the image mass across the cells it overlaps
            start = max(0, bisect_right(bounds, img.lo) - 1)
            stop = min(cells, bisect_left(bounds, img.hi))
            for i in range(start, stop):
                lo = max(img.lo, bounds[i])
                hi = min(img.hi, bounds[i + 1])
                if lo < hi:
                    transition[i][j] += (hi - lo) / abs(lap.data.slope) / width
    for j in range(cells):
        col = sum((transition[i][j] for i in range(cells)), Fraction(0))
        assert col == 1, f"column {j} sums to {col}"

    matrix = np.array([[float(x) for x in row] for row in transition], dtype=float)
    v = np.full(cells, 1.0 / cells)
    iterations = 0
    residual = 0.0
    for iterations in range(1, max_iter + 1):
        nxt = matrix @ v
        nxt /= nxt.sum()
        residual = float(np.abs(nxt - v).sum())
        v = nxt
        if residual < tol:
            break
    density = v / float(width)
    tv = float(np.abs(np.diff(density)).sum())
    return UlamModel(
        cells=cells,
        transition=transition,
        density=density,
        tv=tv,
        iterations=iterations,
        residual=residual,
    )


def project_density(fine: np.ndarray) -> np.ndarray:
    """Average adjacent cells: density at 2k cells projected to k cells."""
    return 0.5 * (fine[0::2] + fine[1::2])


def density_l1_between(coarse: UlamModel, fine: UlamModel, phase_length: float) -> float:
    """L1 distance between a density and a doubled-resolution density."""
    if fine.cells != 2 * coarse.cells:
        raise ValueError("fine model must have exactly twice the cells")
    width = phase_length / coarse.cells
    return float(np.abs(project_density(fine.density) - coarse.density).sum() * width)


@dataclass
class OrbitStats:
    """Per-sample empirical statistics over the cell grid."""

    frequencies: list[list[float]]
    hitting_times: list[int | None]
    coverage: list[float]


@dataclass
class ConservativityReport:
    hit_fraction: float
    samples: int
    horizon: int
    seed: int
    quantiles: dict[str, int | None]

    def to_json(self) -> dict:
        return {
            "hit_fraction": self.hit_fraction,
            "samples": self.samples,
            "horizon": self.horizon,
            "seed": self.seed,
            "quantiles": self.quantiles,
        }


def conservativity_test(
    m: PAMap,
    target: IntervalQ,
    samples: int,
    horizon: int,
    seed: int,
    threads: int = 1,
    starts: Sequence[Rat] | None = None,
) -> ConservativityReport:
    """Fraction of seeded starts whose orbit enters the target within the horizon."""
    if target.is_point or target.length <= 0:
        raise ValueError("target must have positive length")
    if starts is None:
        starts = [sample_start(m, seed, i) for i in range(samples)]
    else:
        samples = len(starts)

    def work(x: Rat) -> int | None:
        return first_hit_time(m, x, target, horizon)

    times = _map_ordered(work, starts, threads)
    hits = sorted(t for t in times if t is not None)
    fraction = len(hits) / samples if samples else 0.0
    quantiles: dict[str, int | None] = {}
    for q in (0.5, 0.9, 0.99):
        idx = int(q * (len(hits) - 1)) if hits else None
        quantiles[f"q{int(q * 100)}"] = hits[idx] if hits else None
    return ConservativityReport(
        hit_fraction=fraction,
        samples=samples,
        horizon=horizon,
        seed=seed,
        quantiles=quantiles,
    )


@dataclass
class ErgodicityReport:
    max_l1: float
    samples: int
    horizon: int
    cells: int
    seed: int
    frequencies: list[list[float]]

    def to_json(self, include_frequencies: bool = False) -> dict:
        doc = {
            "max_l1": self.max_l1,
            "samples": self.samples,
            "horizon": self.horizon,
            "cells": self.cells,
            "seed": self.seed,
        }
        if include_frequencies:
            doc["frequencies"] = self.frequencies
        return doc


def ergodicity_test(
    m: PAMap,
    samples: int,
    horizon: int,
    cells: int,
    seed: int,
    threads: int = 1,
    starts: Sequence[Rat] | None = None,
) -> ErgodicityReport:
    """Max pairwise L1 distance between per-sample empirical cell measures.

    A small maximum is evidence for a single ergodic component; a large or
    bimodal spread flags candidate component splitting. Explicit ``starts``
    override the sampler (useful for deliberately exceptional orbits).
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if starts is None:
        starts = [sample_start(m, seed, i) for i in range(samples)]
    else:
        samples = len(starts)

    def work(x: Rat) -> list[int]:
        return cell_counts(m, x, horizon, cells)

    counts = _map_ordered(work, starts, threads)
    freqs = [[c / horizon for c in row] for row in counts]
    max_l1 = 0.0
    for a in range(len(freqs)):
        for b in range(a + 1, len(freqs)):
            dist = sum(abs(x - y) for x, y in zip(freqs[a], freqs[b]))
            max_l1 = max(max_l1, dist)
    return ErgodicityReport(
        max_l1=max_l1,
        samples=samples,
        horizon=horizon,
        cells=cells,
        seed=seed,
        frequencies=freqs,
    )


def component_index(
    m: PAMap,
    x: Rat,
    levels: Sequence[BadSetApprox],
    burn: int,
    tail: int,
    epsilon: Rat | None = None,
) -> int | None:
    """Least level whose fattening contains the whole observed orbit tail.

    The statistical stand-in for membership in a level of the extended
    bad-set hierarchy; ``None`` when even the largest level fails.
    """
    points = capped_orbit_tail(m, x, burn, tail)
    for n, level in enumerate(levels):
        eps = epsilon
        if eps is None:
            gap = pieces_min_gap(level.pieces)
            eps = gap / 2 if gap is not None else Fraction(0)
        fat = fatten_closed(level.pieces, eps, m.phase)
        if all(any(p.contains(pt) for p in fat) for pt in points):
            return n
    return None


def good_fill_fraction(forest: GoodForest, window: IntervalQ) -> Rat:
    """Exact fraction of a window covered by induced branch domains."""
    if window.length <= 0:
        raise ValueError("window must have positive length")
    if not forest.map.phase.contains_interval(window):
        raise ValueError("window must lie inside the phase interval")
    branch_pieces = [g.interval.closure() for g in forest.branches]
    covered = closed_intersection(branch_pieces, [window.closure()])
    return closed_measure(covered) / window.length


@dataclass
class CoherenceReport:
    """Joint evidence check tying expansion to induced-map and orbit statistics.

    For a map with an expansion verdict the pipeline expects: residual curve
    consistent with an almost-everywhere-defined induced map, near-certain
    target hitting, and a stable bounded-variation density estimate. Any
    miss fails the check.
    """

    applicable: bool
    passed: bool
    expansion_k: int | None
    markov_verdict: str | None
    conservativity_fraction: float | None
    max_l1: float | None
    tv_coarse: float | None
    tv_fine: float | None
    density_l1: float | None

    def to_json(self) -> dict:
        return {
            "applicable": self.applicable,
            "passed": self.passed,
            "expansion_k": self.expansion_k,
            "markov_verdict": self.markov_verdict,
            "conservativity_fraction": self.conservativity_fraction,
            "max_l1": self.max_l1,
            "tv_coarse": self.tv_coarse,
            "tv_fine": self.tv_fine,
            "density_l1": self.density_l1,
        }


def coherence_check(
    m: PAMap,
    nbhd: NiceNbhd,
    seed: int,
    expansion_kmax: int = 5,
    horizons: Sequence[int] | None = None,
    conserv_samples: int = 1000,
    conserv_horizon: int = 1000,
    ergodic_samples: int = 8,
    ergodic_horizon: int = 100_000,
    ergodic_cells: int = 32,
    cells: int = 64,
    threads: int = 1,
    curve: ResidualCurve | None = None,
    cons: ConservativityReport | None = None,
    erg: ErgodicityReport | None = None,
    coarse: UlamModel | None = None,
    fine: UlamModel | None = None,
) -> CoherenceReport:
    if horizons is None:
        horizons = list(range(2, 13))
    exp = expansion_report(m, expansion_kmax)
    if exp.verdict_k is None:
        return CoherenceReport(
            applicable=False,
            passed=True,
            expansion_k=None,
            markov_verdict=None,
            conservativity_fraction=None,
            max_l1=None,
            tv_coarse=None,
            tv_fine=None,
            density_l1=None,
        )
    if curve is None:
        curve = markov_residual_curve(m, nbhd, horizons)
    if cons is None:
        target = nbhd.sorted_components()[0][1]
        cons = conservativity_test(m, target, conserv_samples, conserv_horizon, seed, threads)
    if erg is None:
        erg = ergodicity_test(m, ergodic_samples, ergodic_horizon, ergodic_cells, seed, threads)
    if coarse is None:
        coarse = ulam_model(m, cells)
    if fine is None:
        fine = ulam_model(m, 2 * cells)
    l1 = density_l1_between(coarse, fine, float(m.phase.length))
    tv_stable = fine.tv <= 2.0 * coarse.tv + 0.5
    passed = (
        curve.verdict == "consistent-with-markov"
        and cons.hit_fraction >= 0.99
        and erg.max_l1 <= 0.1
        and l1 <= 1e-4
        and tv_stable
    )
    return CoherenceReport(
        applicable=True,
        passed=passed,
        expansion_k=exp.verdict_k,
        markov_verdict=curve.verdict,
        conservativity_fraction=cons.hit_fraction,
        max_l1=erg.max_l1,
        tv_coarse=coarse.tv,
        tv_fine=fine.tv,
        density_l1=l1,
    )


def _map_ordered(fn, items, threads: int):
    """Apply ``fn`` over items, optionally on a thread pool, order-preserving."""
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
