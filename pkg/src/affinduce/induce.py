"""Good-interval enumeration and the induced Markov map.

A good interval ``T`` for a nice neighborhood ``U`` is an open interval
mapped by some iterate ``f^n`` affinely and bijectively onto a component of
``U``; the least such ``n`` is its time. Good intervals of a nice
neighborhood are pairwise disjoint or strictly nested, nesting strictly
increases time, and the maximal good intervals of time >= 1 are the branch
domains of the induced map, which acts on each branch by the branch's own
iterate.

Enumeration is by exact pullback: the time-``n`` good intervals are the
complete affine preimages of the time-``n-1`` ones through single branches.
Every structural claim above is re-verified on the enumerated family, so a
broken niceness certificate cannot silently corrupt downstream measures.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Literal, Sequence

from .exact import (
    AffineQ,
    IntervalQ,
    OpenIntervalUnion,
    Rat,
    digit_size,
    open_interval,
    rat,
    rat_str,
)
from .nice import NiceNbhd
from .pamap import BudgetError, PAMap


class ForestInvariantError(RuntimeError):
    """Two enumerated good intervals are neither disjoint nor nested."""


@dataclass(frozen=True)
class GoodInterval:
    """An open interval carried affinely onto a neighborhood component."""

    interval: IntervalQ
    time: int
    target: Rat  # critical point owning the image component
    data: AffineQ  # the iterate restricted to this interval
    depth: int  # number of enumerated good intervals strictly containing it

    def to_json(self) -> dict:
        return {
            "interval": self.interval.to_json(),
            "time": self.time,
            "target": rat_str(self.target),
            "map": self.data.to_json(),
            "depth": self.depth,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "GoodInterval":
        return cls(
            interval=IntervalQ.from_json(doc["interval"]),
            time=int(doc["time"]),
            target=rat(doc["target"]),
            data=AffineQ.from_json(doc["map"]),
            depth=int(doc["depth"]),
        )


@dataclass
class GoodForest:
    """All enumerated good intervals up to a time horizon, nesting-verified.

    ``pruned`` marks cover mode: only good intervals not already covered by
    an earlier one are kept. Cover mode is exact for the union, residuals,
    maximal branches, and the depths of retained members, but nested members
    are deliberately dropped, so depth-indexed statistics over the full
    family must use an unpruned forest.
    """

    map: PAMap
    nice: NiceNbhd
    horizon: int
    goods: list[GoodInterval]
    pruned: bool = False
    budget_hit: bool = False

    @cached_property
    def branches(self) -> list[GoodInterval]:
        """Maximal good intervals of time >= 1: the induced map's domains."""
        maximal: list[GoodInterval] = []
        hi_watermark: Rat | None = None
        for g in self.goods:  # sorted by (lo, -hi); disjoint-or-nested
            if g.time < 1:
                continue
            if hi_watermark is None or g.interval.lo >= hi_watermark:
                maximal.append(g)
                hi_watermark = g.interval.hi
        return maximal

    def domain_union(self) -> OpenIntervalUnion:
        union = OpenIntervalUnion()
        for g in self.branches:
            union.insert(g.interval.lo, g.interval.hi)
        return union

    def to_json(self) -> dict:
        return {
            "horizon": self.horizon,
            "pruned": self.pruned,
            "budget_hit": self.budget_hit,
            "nice": self.nice.to_json(),
            "goods": [g.to_json() for g in self.goods],
        }

    @classmethod
    def from_json(cls, doc: dict, m: PAMap) -> "GoodForest":
        return cls(
            map=m,
            nice=NiceNbhd.from_json(doc["nice"]),
            horizon=int(doc["horizon"]),
            goods=[GoodInterval.from_json(g) for g in doc["goods"]],
            pruned=bool(doc.get("pruned", False)),
            budget_hit=bool(doc.get("budget_hit", False)),
        )


def _sorted_key(iv: IntervalQ) -> tuple[Rat, Rat]:
    return (iv.lo, -iv.hi)


def _assign_depths(intervals: Sequence[IntervalQ]) -> list[int]:
    """Depths for a (lo asc, hi desc)-sorted disjoint-or-nested open family.

    Raises when a crossing pair shows the family is not disjoint-or-nested;
    that means a niceness certificate upstream is broken.
    """
    depths: list[int] = []
    stack: list[IntervalQ] = []
    for iv in intervals:
        while stack and stack[-1].hi <= iv.lo:
            stack.pop()
        if stack:
            parent = stack[-1]
            if iv == parent:
                raise ForestInvariantError(f"duplicate good interval {iv!r}")
            if iv.hi > parent.hi:
                raise ForestInvariantError(
                    f"good intervals cross: {parent!r} and {iv!r}"
                )
        depths.append(len(stack))
        stack.append(iv)
    return depths


def _pullback_generation(
    m: PAMap, gen: list[tuple[IntervalQ, AffineQ, Rat]], digit_budget: int | None
) -> list[tuple[IntervalQ, AffineQ, Rat]]:
    """Complete one-branch preimages of a generation of good intervals."""
    out: list[tuple[IntervalQ, AffineQ, Rat]] = []
    for interval, data, target in gen:
        for lap in m.laps:
            pre = lap.data.preimage(interval)
            if not lap.interval.contains_interval(pre.closure()):
                continue
            if digit_budget is not None and (
                digit_size(pre.lo) > digit_budget or digit_size(pre.hi) > digit_budget
            ):
                raise BudgetError(
                    f"denominator digit budget {digit_budget} exceeded at pullback"
                )
            out.append((pre, data.compose(lap.data), target))
    out.sort(key=lambda item: _sorted_key(item[0]))
    return out


def enumerate_good(
    m: PAMap,
    nbhd: NiceNbhd,
    horizon: int,
    goods_budget: int = 2_000_000,
    digit_budget: int | None = 20_000,
    mode: Literal["full", "cover"] = "full",
) -> GoodForest:
    """Enumerate good intervals of time <= ``horizon``.

    ``full`` keeps every good interval. ``cover`` requires a full-branch map
    and drops intervals already covered by the running union: on full-branch
    maps descendants of covered intervals stay covered, so unions, residuals,
    branches, and retained depths are unaffected while the count collapses.
    On budget exhaustion the forest built so far is returned with
    ``budget_hit`` set.
    """
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    if mode == "cover" and not m.is_full_branch:
        raise ValueError("cover mode is only exact for full-branch maps")

    time0 = [
        (interval, AffineQ.identity(), c) for c, interval in nbhd.sorted_components()
    ]
    raw: list[tuple[IntervalQ, AffineQ, Rat, int]] = [
        (iv, data, c, 0) for iv, data, c in time0
    ]
    union = OpenIntervalUnion()
    budget_hit = False
    gen = time0
    for n in range(1, horizon + 1):
        try:
            nxt = _pullback_generation(m, gen, digit_budget)
        except BudgetError:
            budget_hit = True
            break
        if mode == "cover":
            kept = []
            for interval, data, target in nxt:
                if union.covers(interval.lo, interval.hi):
                    continue
                union.insert(interval.lo, interval.hi)
                kept.append((interval, data, target))
            nxt = kept
        raw.extend((iv, data, c, n) for iv, data, c in nxt)
        if len(raw) > goods_budget:
            budget_hit = True
            break
        gen = nxt

    raw.sort(key=lambda item: (_sorted_key(item[0]), item[3]))
    depths = _assign_depths([item[0] for item in raw])
    goods = [
        GoodInterval(interval=iv, time=t, target=c, data=data, depth=d)
        for (iv, data, c, t), d in zip(raw, depths)
    ]
    return GoodForest(
        map=m,
        nice=nbhd,
        horizon=horizon,
        goods=goods,
        pruned=(mode == "cover"),
        budget_hit=budget_hit,
    )


@dataclass(frozen=True)
class InducedMarkovMap:
    """Branch data of the induced map at a finite horizon.

    ``residual`` is the exact measure of what the enumerated branch domains
    leave uncovered; it over-approximates the measure of the true bad set
    and shrinks monotonically under horizon refinement.
    """

    branches: tuple[GoodInterval, ...]
    domain_measure: Rat
    residual: Rat
    horizon: int
    pruned: bool

    def to_json(self) -> dict:
        return {
            "branches": [g.to_json() for g in self.branches],
            "branch_count": len(self.branches),
            "domain_measure": rat_str(self.domain_measure),
            "residual": rat_str(self.residual),
            "horizon": self.horizon,
            "pruned": self.pruned,
        }


def induced_map(forest: GoodForest) -> InducedMarkovMap:
    """Assemble the induced map from the maximal time->=1 good intervals."""
    branches = tuple(forest.branches)
    domain = sum((g.interval.length for g in branches), Fraction(0))
    residual = forest.map.phase.length - domain
    return InducedMarkovMap(
        branches=branches,
        domain_measure=domain,
        residual=residual,
        horizon=forest.horizon,
        pruned=forest.pruned,
    )


@dataclass(frozen=True)
class ResidualCurve:
    """Exact residual measures by horizon plus a heuristic decay verdict."""

    rows: tuple[tuple[int, Rat], ...]
    verdict: Literal["consistent-with-markov", "inconclusive"]
    fitted_ratio: float | None
    threshold: Rat
    max_ratio: float

    def to_json(self) -> dict:
        return {
            "rows": [
                {"horizon": h, "residual": rat_str(r), "residual_float": float(r)}
                for h, r in self.rows
            ],
            "verdict": self.verdict,
            "fitted_ratio": self.fitted_ratio,
            "threshold": rat_str(self.threshold),
            "max_ratio": self.max_ratio,
        }


def residuals_by_horizon(
    m: PAMap,
    nbhd: NiceNbhd,
    horizon: int,
    goods_budget: int = 2_000_000,
    digit_budget: int | None = 20_000,
) -> list[Rat]:
    """Exact residual measure after each horizon 1..horizon.

    Uses covered-union pruning on full-branch maps; otherwise replays the
    full enumeration generation by generation.
    """
    mode: Literal["full", "cover"] = "cover" if m.is_full_branch else "full"
    time0 = [
        (interval, AffineQ.identity(), c) for c, interval in nbhd.sorted_components()
    ]
    union = OpenIntervalUnion()
    out: list[Rat] = []
    total = m.phase.length
    gen = time0
    count = 0
    for _ in range(horizon):
        nxt = _pullback_generation(m, gen, digit_budget)
        kept = []
        for interval, data, target in nxt:
            if not union.covers(interval.lo, interval.hi):
                union.insert(interval.lo, interval.hi)
                kept.append((interval, data, target))
        count += len(kept)
        if count > goods_budget:
            raise BudgetError(f"good-interval budget {goods_budget} exceeded")
        out.append(total - union.measure)
        gen = kept if mode == "cover" else nxt
    return out


def markov_residual_curve(
    m: PAMap,
    nbhd: NiceNbhd,
    horizons: Sequence[int],
    threshold: Rat = Fraction(1, 8),
    max_ratio: float = 0.95,
    goods_budget: int = 2_000_000,
    digit_budget: int | None = 20_000,
) -> ResidualCurve:
    """Exact residuals at the given horizons with a decay verdict.

    The verdict is evidence, never a limit claim: ``consistent-with-markov``
    needs at least three horizons, strictly decreasing residuals, a fitted
    per-step geometric ratio below ``max_ratio``, and a final residual below
    ``threshold`` times the phase length.
    """
    if not horizons or list(horizons) != sorted(set(horizons)):
        raise ValueError("horizons must be strictly increasing and nonempty")
    if horizons[0] < 1:
        raise ValueError("horizons start at 1")
    table = residuals_by_horizon(
        m, nbhd, horizons[-1], goods_budget=goods_budget, digit_budget=digit_budget
    )
    rows = tuple((h, table[h - 1]) for h in horizons)

    fitted: float | None = None
    verdict: Literal["consistent-with-markov", "inconclusive"] = "inconclusive"
    if len(rows) >= 3 and all(r > 0 for _, r in rows):
        tail = rows[len(rows) // 2 :]
        ratios = []
        for (h0, r0), (h1, r1) in zip(tail, tail[1:]):
            ratios.append((float(r1) / float(r0)) ** (1.0 / (h1 - h0)))
        if ratios:
            prod = 1.0
            for r in ratios:
                prod *= r
            fitted = prod ** (1.0 / len(ratios))
        decreasing = all(r1 < r0 for (_, r0), (_, r1) in zip(rows, rows[1:]))
        small_enough = rows[-1][1] < threshold * m.phase.length
        if decreasing and fitted is not None and fitted < max_ratio and small_enough:
            verdict = "consistent-with-markov"
    return ResidualCurve(rows, verdict, fitted, threshold, max_ratio)


# ---------------------------------------------------------------------------
# Critical chains: the nested good intervals around each critical value.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CriticalChain:
    """Nested good intervals containing a critical value, indexed by depth.

    ``finite-type-witness`` certifies the chain can never grow at any
    horizon: every iterate of the critical value that could seed a deeper
    member has been excluded exactly (the forward orbit closes into a cycle
    avoiding the neighborhood, or hits a breakpoint, past which no interval
    can stay affine). Otherwise growth is merely unobserved so far.
    """

    critical: Rat
    chain: tuple[GoodInterval, ...]
    classification: Literal["finite-type-witness", "infinite-type-up-to-horizon"]
    horizon: int

    def to_json(self) -> dict:
        return {
            "critical": rat_str(self.critical),
            "chain": [g.to_json() for g in self.chain],
            "classification": self.classification,
            "horizon": self.horizon,
        }


def point_chain(
    m: PAMap, nbhd: NiceNbhd, v: Rat, horizon: int
) -> list[tuple[IntervalQ, int, Rat, AffineQ]]:
    """All good intervals containing ``v``, by direct pullback along its orbit.

    A good interval of time ``n`` contains ``v`` exactly when ``f^n(v)``
    lies in a component, no earlier orbit point sits on a breakpoint, and
    the backward affine pullback of the component along the orbit is never
    cut by a lap boundary. This needs no forest and stays cheap at any
    horizon.
    """
    out: list[tuple[IntervalQ, int, Rat, AffineQ]] = []
    x = v
    prefix: list = []  # laps traversed by the orbit of v
    cumulative = [AffineQ.identity()]
    for n in range(horizon + 1):
        hit = nbhd.component_containing(x)
        if hit is not None:
            c, comp = hit
            pulled: IntervalQ | None = comp
            for lap in reversed(prefix):
                pulled = lap.data.preimage(pulled)
                if not lap.interval.contains_interval(pulled.closure()):
                    pulled = None
                    break
            if pulled is not None:
                out.append((pulled, n, c, cumulative[n]))
        if n == horizon or m.is_breakpoint(x):
            break
        lap = m.laps[m.branch_index(x)]
        prefix.append(lap)
        cumulative.append(lap.data.compose(cumulative[-1]))
        x = m(x)
    out.sort(key=lambda item: -item[0].length)
    return out


def critical_type(forest: GoodForest, c: Rat, orbit_cap: int = 10_000) -> CriticalChain:
    """The chain of good intervals around the critical value of ``c``."""
    m = forest.map
    if c not in m.critical_points:
        raise ValueError(f"{rat_str(c)} is not a critical point")
    v = m(c)
    entries = point_chain(m, forest.nice, v, forest.horizon)
    chain = tuple(
        GoodInterval(interval=iv, time=t, target=target, data=data, depth=d)
        for d, (iv, t, target, data) in enumerate(entries)
    )

    classification: Literal["finite-type-witness", "infinite-type-up-to-horizon"]
    classification = "infinite-type-up-to-horizon"
    rec = m.orbit(v, cap=orbit_cap)
    barrier: int | None = None  # first step whose point sits on a breakpoint
    for i, p in enumerate(rec.points):
        if m.is_breakpoint(p):
            barrier = i
            break
    inside = forest.nice.contains_point
    if barrier is not None:
        feasible = [n for n, p in enumerate(rec.points[: barrier + 1]) if inside(p)]
        if all(n <= forest.horizon for n in feasible):
            classification = "finite-type-witness"
    elif rec.closed:
        if not any(inside(p) for p in rec.cycle()):
            feasible = [n for n, p in enumerate(rec.points) if inside(p)]
            if all(n <= forest.horizon for n in feasible):
                classification = "finite-type-witness"
    return CriticalChain(
        critical=c, chain=chain, classification=classification, horizon=forest.horizon
    )


def branch_density_probe(forest: GoodForest, probes: int = 100) -> Rat:
    """Fraction of mesh-length probe windows that meet some branch domain.

    Dense branch domains should make this 1 at large horizons; used as the
    observable shadow of density of the induced domain.
    """
    phase = forest.map.phase
    width = forest.nice.mesh
    if width >= phase.length:
        return Fraction(1)
    hits = 0
    span = phase.length - width
    branches = forest.branches
    for i in range(probes):
        lo = phase.lo + span * Fraction(i, probes - 1 if probes > 1 else 1)
        window = IntervalQ(lo, lo + width)
        if any(g.interval.intersects(window) for g in branches):
            hits += 1
    return Fraction(hits, probes)
