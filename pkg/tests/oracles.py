"""Independent brute-force oracles the production pipeline is checked against.

These deliberately avoid the production enumeration path: laps are rebuilt
from scratch by forward preimage sets and midpoint orbit composition, and
good intervals are solved per lap of each iterate independently.
"""
from __future__ import annotations

from fractions import Fraction

from affinduce.exact import AffineQ, IntervalQ
from affinduce.nice import NiceNbhd
from affinduce.pamap import PAMap


def brute_laps(m: PAMap, n: int) -> list[tuple[IntervalQ, AffineQ]]:
    """Laps of ``f^n`` rebuilt from the union of breakpoint preimage sets."""
    cuts = set(m.breakpoints)
    level = set(m.breakpoints)
    for _ in range(n - 1):
        level = {x for y in level for x in m.preimages(y)}
        cuts |= level
    bounds = sorted(cuts)
    out = []
    for a, b in zip(bounds, bounds[1:]):
        piece = IntervalQ(a, b)
        x = piece.midpoint()
        data = AffineQ.identity()
        for _ in range(n):
            branch = m.branches[m.branch_index(x)]
            data = branch.compose(data)
            x = m(x)
        out.append((piece, data))
    return out


def brute_good_intervals(
    m: PAMap, nbhd: NiceNbhd, horizon: int
) -> set[tuple[Fraction, Fraction, int, Fraction]]:
    """All good intervals up to the horizon as (lo, hi, time, target) tuples."""
    out: set[tuple[Fraction, Fraction, int, Fraction]] = set()
    for c, comp in nbhd.sorted_components():
        out.add((comp.lo, comp.hi, 0, c))
    for n in range(1, horizon + 1):
        for piece, data in brute_laps(m, n):
            for c, comp in nbhd.sorted_components():
                pre = data.preimage(comp)
                if piece.contains_interval(pre.closure()):
                    out.add((pre.lo, pre.hi, n, c))
    return out


def forest_tuples(forest) -> set[tuple[Fraction, Fraction, int, Fraction]]:
    return {
        (g.interval.lo, g.interval.hi, g.time, g.target) for g in forest.goods
    }
