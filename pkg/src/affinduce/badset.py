"""Outer approximations of the bad set and its pullback machinery.

The bad set is what the induced map's branch domains leave behind. At a
finite horizon we only ever hold a closed outer approximation: the true bad
set is contained in every approximation and the approximations shrink under
horizon refinement. Tubes pull the bad core back along the orbit of a good
interval; extended levels union the core with the tubes over the critical
chains; the whole family is what absorbing behavior is measured against.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .exact import (
    IntervalQ,
    Rat,
    closed_difference,
    closed_intersection,
    closed_measure,
    fatten_closed,
    merge_closed,
    pieces_min_gap,
    rat_str,
)
from .induce import CriticalChain, GoodForest, GoodInterval, critical_type
from .pamap import PAMap
from .sampling import exact_orbit_tail, sample_start


class MissingChainEntry(LookupError):
    """Requested critical-chain depth was not enumerated in this forest."""


@dataclass
class BadSetApprox:
    """A finite union of closed pieces outer-approximating a bad-type set."""

    pieces: list[IntervalQ]  # normalized: sorted, disjoint; points allowed
    measure: Rat
    horizon: int
    level: str  # "core", "extended-<n>", or "tube"

    @classmethod
    def from_pieces(
        cls, pieces: Sequence[IntervalQ], horizon: int, level: str
    ) -> "BadSetApprox":
        normalized = merge_closed(pieces)
        return cls(normalized, closed_measure(normalized), horizon, level)

    def to_json(self) -> dict:
        return {
            "level": self.level,
            "horizon": self.horizon,
            "measure": rat_str(self.measure),
            "measure_float": float(self.measure),
            "piece_count": len(self.pieces),
            "pieces": [p.to_json() for p in self.pieces],
        }


def bad_set(forest: GoodForest) -> BadSetApprox:
    """Closed complement of the branch domains: the bad-core approximation."""
    union = forest.domain_union()
    pieces = union.complement_within(forest.map.phase)
    return BadSetApprox(
        pieces, closed_measure(pieces), forest.horizon, "core"
    )


@dataclass
class TubeApprox:
    """Pullback of the bad core along the orbit of one good interval.

    Slice ``i`` approximates the i-step preimage of the bad core inside the
    image component, intersected with the forward orbit interval; slice 0 is
    anchored at the core itself.
    """

    base: GoodInterval
    slices: list[list[IntervalQ]]
    union: BadSetApprox

    def to_json(self) -> dict:
        return {
            "base": self.base.to_json(),
            "slices": [[p.to_json() for p in s] for s in self.slices],
            "union": self.union.to_json(),
        }


def tube(m: PAMap, forest: GoodForest, base: GoodInterval) -> TubeApprox:
    """Exact tube slices along the orbit intervals of ``base``.

    The orbit intervals of a good interval each sit inside a single lap, so
    every backward step is one exact affine preimage of a piece list.
    """
    core = bad_set(forest)
    target_comp = dict(forest.nice.sorted_components())[base.target]
    anchor = closed_intersection(core.pieces, [target_comp.closure()])

    orbit_intervals = [base.interval.closure()]
    cur = base.interval.closure()
    for _ in range(base.time):
        lap = m.laps[m.branch_index(cur.midpoint())]
        cur = lap.data.image(cur)
        orbit_intervals.append(cur)

    slices: list[list[IntervalQ]] = [anchor]
    for i in range(base.time):
        j = base.time - i - 1  # orbit interval being pulled back into
        lap = m.laps[m.branch_index(orbit_intervals[j].midpoint())]
        inv = lap.data.invert()
        pulled = merge_closed(inv.image(p) for p in slices[-1])
        slices.append(pulled)

    union = BadSetApprox.from_pieces(
        [p for s in slices for p in s], forest.horizon, "tube"
    )
    return TubeApprox(base=base, slices=slices, union=union)


def critical_chains(forest: GoodForest) -> dict[Rat, CriticalChain]:
    return {c: critical_type(forest, c) for c in forest.map.critical_points}


def extended_bad_set(
    m: PAMap,
    forest: GoodForest,
    n: int,
    chains: dict[Rat, CriticalChain] | None = None,
) -> BadSetApprox:
    """Union of the bad core with the tubes over chain depths ``0..n``."""
    if n < 0:
        raise ValueError("level must be >= 0")
    if chains is None:
        chains = critical_chains(forest)
    pieces = list(bad_set(forest).pieces)
    for chain in chains.values():
        for entry in chain.chain[: n + 1]:
            pieces.extend(tube(m, forest, entry).union.pieces)
    return BadSetApprox.from_pieces(pieces, forest.horizon, f"extended-{n}")


@dataclass
class NearInvarianceReport:
    """How far a bad-type set is from being forward invariant off the critical set."""

    defect_measure: Rat
    defect_pieces: list[IntervalQ]
    level: str
    horizon: int

    def to_json(self) -> dict:
        return {
            "level": self.level,
            "horizon": self.horizon,
            "defect_measure": rat_str(self.defect_measure),
            "defect_measure_float": float(self.defect_measure),
            "defect_piece_count": len(self.defect_pieces),
            "defect_pieces": [p.to_json() for p in self.defect_pieces],
        }


def near_invariance_check(m: PAMap, approx: BadSetApprox) -> NearInvarianceReport:
    """Measure the image's spill: ``|f(B - criticals) - B|`` on closed hulls.

    Pieces are split at breakpoints before mapping, so each part is one
    exact affine image; removed critical points only drop isolated image
    points, which carry no measure.
    """
    interior = m.breakpoints[1:-1]
    images: list[IntervalQ] = []
    for piece in approx.pieces:
        bounds = [piece.lo]
        bounds.extend(q for q in interior if piece.lo < q < piece.hi)
        bounds.append(piece.hi)
        for a, b in zip(bounds, bounds[1:]):
            part = IntervalQ(a, b)
            lap = m.laps[m.branch_index(part.midpoint())]
            images.append(lap.data.image(part))
        if piece.is_point and not m.is_breakpoint(piece.lo):
            images.append(IntervalQ.hull(m(piece.lo), m(piece.lo)))
    image_pieces = merge_closed(images)
    defect = closed_difference(image_pieces, approx.pieces)
    return NearInvarianceReport(
        defect_measure=closed_measure(defect),
        defect_pieces=defect,
        level=approx.level,
        horizon=approx.horizon,
    )


def critical_window(m: PAMap, forest: GoodForest, c: Rat, d: int) -> IntervalQ:
    """The component around ``c`` of the one-step preimage of chain entry ``d``.

    This is the window inside the critical point's own neighborhood
    component that feeds the depth-``d`` chain interval; its length shrinks
    to zero along infinite chains.
    """
    chain = critical_type(forest, c).chain
    if d >= len(chain):
        raise MissingChainEntry(
            f"chain for critical point {rat_str(c)} has no depth-{d} entry at "
            f"horizon {forest.horizon}"
        )
    target = chain[d].interval
    comp = dict(forest.nice.sorted_components())[c]
    idx = m.breakpoints.index(c)
    left_lap, right_lap = m.laps[idx - 1], m.laps[idx]
    lo: Rat = comp.lo
    hi: Rat = comp.hi
    pre_left = left_lap.data.preimage(target)
    pre_right = right_lap.data.preimage(target)
    # f(c) lies inside the open target, so both one-sided preimages reach c.
    lo = max(lo, pre_left.lo)
    hi = min(hi, pre_right.hi)
    return IntervalQ(lo, hi, True, True)


def depth_profile(forest: GoodForest, k_max: int) -> list[tuple[int, Rat]]:
    """Measure of the set of points covered by at least ``k`` nested good intervals.

    Entry ``k=0`` is the whole phase length by convention. Equal-depth good
    intervals are pairwise disjoint, so each row is a plain sum of lengths.
    Requires an unpruned forest: cover mode drops nested members.
    """
    if forest.pruned:
        raise ValueError("depth profile needs an unpruned forest")
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    by_depth: dict[int, Rat] = {}
    for g in forest.goods:
        by_depth[g.depth] = by_depth.get(g.depth, Fraction(0)) + g.interval.length
    rows: list[tuple[int, Rat]] = [(0, forest.map.phase.length)]
    for k in range(1, k_max + 1):
        rows.append((k, by_depth.get(k - 1, Fraction(0))))
    return rows


@dataclass
class AbsorbingReport:
    """Fraction of sampled orbits whose observed tail stays near a closed set.

    A statistical proxy for limit-set containment: each sample is iterated
    ``burn`` steps exactly, then the next ``tail`` iterates must all lie in
    the epsilon-fattening of the set. Never a limit claim.
    """

    fraction: Fraction
    retained: int
    samples: int
    burn: int
    tail: int
    seed: int
    epsilon: Rat
    budget_skipped: int

    def to_json(self) -> dict:
        return {
            "fraction": rat_str(self.fraction),
            "fraction_float": float(self.fraction),
            "retained": self.retained,
            "samples": self.samples,
            "burn": self.burn,
            "tail": self.tail,
            "seed": self.seed,
            "epsilon": rat_str(self.epsilon),
            "budget_skipped": self.budget_skipped,
        }


def absorbing_detect(
    m: PAMap,
    approx: BadSetApprox,
    samples: int,
    burn: int,
    tail: int,
    seed: int,
    epsilon: Rat | None = None,
    digit_budget: int = 4_000,
) -> AbsorbingReport:
    """Estimate the measure of starts whose limit behavior hugs the set.

    Starts are deterministic from the seed; orbits are exact rationals with
    a denominator-digit budget (budget-breached samples count as not
    retained and are reported separately).
    """
    if burn < 1 or tail < 1:
        raise ValueError("burn and tail must be >= 1")
    if epsilon is None:
        gap = pieces_min_gap(approx.pieces)
        epsilon = gap / 2 if gap is not None else Fraction(0)
    fat = fatten_closed(approx.pieces, epsilon, m.phase)
    los = [p.lo for p in fat]

    def in_fat(x: Rat) -> bool:
        from bisect import bisect_right

        i = bisect_right(los, x) - 1
        return i >= 0 and x <= fat[i].hi

    retained = 0
    skipped = 0
    for i in range(samples):
        x = sample_start(m, seed, i)
        points = exact_orbit_tail(m, x, burn, tail, digit_budget)
        if points is None:
            skipped += 1
            continue
        if all(in_fat(p) for p in points):
            retained += 1
    return AbsorbingReport(
        fraction=Fraction(retained, samples),
        retained=retained,
        samples=samples,
        burn=burn,
        tail=tail,
        seed=seed,
        epsilon=epsilon,
        budget_skipped=skipped,
    )
