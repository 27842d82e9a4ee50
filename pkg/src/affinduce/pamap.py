"""Continuous piecewise affine self-maps of an interval, with exact data.

A map is stored as breakpoints ``q_0 < ... < q_k`` spanning the phase
interval plus one affine branch per lap. Validation is strict: continuity
must hold exactly at every interior breakpoint, every branch must map its
lap back into the phase interval, and no two adjacent branches may coincide
(a coinciding pair would be a spurious breakpoint and would silently break
lap bookkeeping).
"""
from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Iterator, Sequence

from .exact import (
    AffineQ,
    IntervalQ,
    Rat,
    closed_interval,
    digit_size,
    rat,
    rat_str,
)


class MapSpecError(ValueError):
    """A map document or constructor argument violates a named invariant."""


class BudgetError(RuntimeError):
    """A lap-count, step, or denominator-digit budget was exhausted."""


@dataclass(frozen=True)
class Lap:
    """A maximal interval on which an iterate is affine, with its data."""

    interval: IntervalQ  # closed
    data: AffineQ


@dataclass(frozen=True)
class OrbitRecord:
    """A finite orbit with exact repeat detection.

    ``points[i+1] == f(points[i])`` exactly. When a repeat was found,
    ``points[preperiod + period] == points[preperiod]`` and the record
    certifies eventual periodicity; otherwise both fields are ``None`` and
    preperiodicity is unknown at this budget.
    """

    start: Rat
    points: tuple[Rat, ...]
    preperiod: int | None
    period: int | None
    digits_exceeded: bool = False

    @property
    def closed(self) -> bool:
        return self.period is not None

    def cycle(self) -> tuple[Rat, ...]:
        if self.period is None:
            raise ValueError("orbit did not close")
        return self.points[self.preperiod : self.preperiod + self.period]

    def to_json(self) -> dict:
        return {
            "start": rat_str(self.start),
            "points": [rat_str(p) for p in self.points],
            "preperiod": self.preperiod,
            "period": self.period,
            "digits_exceeded": self.digits_exceeded,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "OrbitRecord":
        return cls(
            start=rat(doc["start"]),
            points=tuple(rat(p) for p in doc["points"]),
            preperiod=doc["preperiod"],
            period=doc["period"],
            digits_exceeded=bool(doc.get("digits_exceeded", False)),
        )


@dataclass(frozen=True)
class PAMap:
    """Continuous piecewise affine map ``f: N -> N`` with rational data."""

    phase: IntervalQ
    breakpoints: tuple[Rat, ...]
    branches: tuple[AffineQ, ...]

    def __post_init__(self) -> None:
        if self.phase.lo_open or self.phase.hi_open or self.phase.is_point:
            raise MapSpecError("phase must be a nondegenerate closed interval")
        bps = self.breakpoints
        if len(bps) < 2 or len(self.branches) != len(bps) - 1:
            raise MapSpecError("need k+1 breakpoints for k branches, k >= 1")
        if bps[0] != self.phase.lo or bps[-1] != self.phase.hi:
            raise MapSpecError("breakpoints must span the phase interval")
        for a, b in zip(bps, bps[1:]):
            if not a < b:
                raise MapSpecError(f"breakpoints not strictly increasing at {a}")
        for i, branch in enumerate(self.branches):
            if branch.slope == 0:
                raise MapSpecError(f"branch {i} has zero slope")
        for i in range(len(self.branches) - 1):
            q = bps[i + 1]
            left = self.branches[i](q)
            right = self.branches[i + 1](q)
            if left != right:
                raise MapSpecError(
                    f"continuity violated at breakpoint {rat_str(q)}: "
                    f"left value {rat_str(left)}, right value {rat_str(right)}"
                )
            if self.branches[i] == self.branches[i + 1]:
                raise MapSpecError(f"spurious breakpoint at {rat_str(q)}: adjacent branches coincide")
        for i, branch in enumerate(self.branches):
            img = branch.image(closed_interval(bps[i], bps[i + 1]))
            if not self.phase.contains_interval(img):
                raise MapSpecError(
                    f"branch {i} maps its lap outside the phase interval: image {img!r}"
                )

    # -- structure -----------------------------------------------------------

    @cached_property
    def laps(self) -> tuple[Lap, ...]:
        return tuple(
            Lap(closed_interval(a, b), branch)
            for a, b, branch in zip(self.breakpoints, self.breakpoints[1:], self.branches)
        )

    @cached_property
    def critical_points(self) -> tuple[Rat, ...]:
        out = []
        for i in range(len(self.branches) - 1):
            if (self.branches[i].slope > 0) != (self.branches[i + 1].slope > 0):
                out.append(self.breakpoints[i + 1])
        return tuple(out)

    @cached_property
    def is_full_branch(self) -> bool:
        """Every branch maps its lap onto the whole phase interval."""
        return all(lap.data.image(lap.interval).closure() == self.phase for lap in self.laps)

    def branch_index(self, x: Rat) -> int:
        if not self.phase.contains(x):
            raise MapSpecError(f"point {rat_str(x)} outside phase interval")
        idx = bisect_right(self.breakpoints, x) - 1
        return min(idx, len(self.branches) - 1)

    def is_breakpoint(self, x: Rat) -> bool:
        return x in self._breakpoint_set

    @cached_property
    def _breakpoint_set(self) -> frozenset[Rat]:
        return frozenset(self.breakpoints)

    # -- dynamics ------------------------------------------------------------

    def __call__(self, x: Rat) -> Rat:
        return self.branches[self.branch_index(x)](x)

    def iterate(self, x: Rat, n: int) -> Rat:
        for _ in range(n):
            x = self(x)
        return x

    def preimages(self, y: Rat) -> list[Rat]:
        """All exact solutions of ``f(x) == y``, sorted."""
        out = set()
        for lap in self.laps:
            x = lap.data.invert()(y)
            if lap.interval.contains(x):
                out.add(x)
        return sorted(out)

    def orbit(self, x: Rat, cap: int = 10_000, digit_budget: int | None = None) -> OrbitRecord:
        """Iterate until an exact repeat (hash lookup) or the cap is reached."""
        start = x
        seen: dict[Rat, int] = {x: 0}
        points = [x]
        digits_exceeded = False
        for i in range(1, cap + 1):
            x = self(x)
            points.append(x)
            prev = seen.get(x)
            if prev is not None:
                return OrbitRecord(start, tuple(points), prev, i - prev)
            if digit_budget is not None and digit_size(x) > digit_budget:
                digits_exceeded = True
                break
            seen[x] = i
        return OrbitRecord(start, tuple(points), None, None, digits_exceeded)

    # -- serialization ---------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "phase": self.phase.to_json(),
            "breakpoints": [rat_str(q) for q in self.breakpoints],
            "branches": [b.to_json() for b in self.branches],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "PAMap":
        try:
            phase = IntervalQ.from_json(doc["phase"])
            bps = tuple(rat(q) for q in doc["breakpoints"])
            branches = tuple(AffineQ.from_json(b) for b in doc["branches"])
        except (KeyError, ValueError, TypeError, ZeroDivisionError) as exc:
            raise MapSpecError(f"malformed map document: {exc}") from exc
        return cls(phase=phase.closure(), breakpoints=bps, branches=branches)

    @classmethod
    def from_file(cls, path: str | Path) -> "PAMap":
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise MapSpecError(f"invalid JSON in {path}: {exc}") from exc
        return cls.from_json(doc)

    def to_file(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n")


def _refine_laps(m: PAMap, laps: Sequence[Lap], lap_budget: int) -> list[Lap]:
    """Laps of ``f^(k+1)`` from laps of ``f^k`` by pulling back breakpoints."""
    out: list[Lap] = []
    interior = m.breakpoints[1:-1]
    for lap in laps:
        img = lap.data.image(lap.interval)
        cuts = [q for q in interior if img.lo < q < img.hi]
        points = sorted(lap.data.invert()(q) for q in cuts)
        bounds = [lap.interval.lo, *points, lap.interval.hi]
        for a, b in zip(bounds, bounds[1:]):
            piece = closed_interval(a, b)
            mid_image = lap.data(piece.midpoint())
            branch = m.branches[m.branch_index(mid_image)]
            out.append(Lap(piece, branch.compose(lap.data)))
    if len(out) > lap_budget:
        raise BudgetError(f"lap budget exceeded: {len(out)} > {lap_budget}")
    return out


def iterate_lap_generations(m: PAMap, k_max: int, lap_budget: int = 250_000) -> Iterator[list[Lap]]:
    """Yield the laps of ``f^1, f^2, ..., f^k_max`` by successive refinement."""
    laps = list(m.laps)
    if len(laps) > lap_budget:
        raise BudgetError(f"lap budget exceeded: {len(laps)} > {lap_budget}")
    yield laps
    for _ in range(k_max - 1):
        laps = _refine_laps(m, laps, lap_budget)
        yield laps


def laps_of_iterate(m: PAMap, k: int, lap_budget: int = 250_000) -> list[Lap]:
    """Partition of the phase interval into laps of ``f^k`` with exact data.

    Consecutive laps meet at pullbacks of breakpoints; within each lap the
    iterate is a single exact affine map.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    result: list[Lap] = []
    for result in iterate_lap_generations(m, k, lap_budget):
        pass
    return result


@dataclass(frozen=True)
class ExpansionReport:
    """Per-iterate minima of ``|Df^k|`` over laps, with the expansion verdict."""

    rows: tuple[tuple[int, int, Rat], ...]  # (k, lap count, min |slope|)
    verdict_k: int | None
    verdict_min: Rat | None
    truncated: bool = False

    def to_json(self) -> dict:
        return {
            "rows": [
                {"k": k, "laps": n, "min_abs_slope": rat_str(s)} for k, n, s in self.rows
            ],
            "verdict_k": self.verdict_k,
            "verdict_min": rat_str(self.verdict_min) if self.verdict_min is not None else None,
            "truncated": self.truncated,
        }


def expansion_report(m: PAMap, k_max: int, lap_budget: int = 250_000) -> ExpansionReport:
    """Exact minima of branch-slope magnitude for each iterate up to ``k_max``."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    rows: list[tuple[int, int, Rat]] = []
    verdict_k: int | None = None
    verdict_min: Rat | None = None
    truncated = False
    try:
        for k, laps in enumerate(iterate_lap_generations(m, k_max, lap_budget), start=1):
            mn = min(abs(lap.data.slope) for lap in laps)
            rows.append((k, len(laps), mn))
            if verdict_k is None and mn > 1:
                verdict_k, verdict_min = k, mn
    except BudgetError:
        truncated = True
    return ExpansionReport(tuple(rows), verdict_k, verdict_min, truncated)


@dataclass(frozen=True)
class Renormalization:
    """A certified restrictive interval: ``f^period(interval) subset interval``."""

    interval: IntervalQ  # closed
    period: int

    def to_json(self) -> dict:
        return {"interval": self.interval.to_json(), "period": self.period}


def _image_through_laps(laps: Sequence[Lap], interval: IntervalQ) -> IntervalQ:
    """Exact image of a closed interval under the iterate the laps describe."""
    lo: Rat | None = None
    hi: Rat | None = None
    for lap in laps:
        piece = lap.interval.intersection(interval)
        if piece is None:
            continue
        img = lap.data.image(piece.closure())
        lo = img.lo if lo is None else min(lo, img.lo)
        hi = img.hi if hi is None else max(hi, img.hi)
    assert lo is not None and hi is not None
    return closed_interval(lo, hi)


def _cycle_interiors_disjoint(m: PAMap, interval: IntervalQ, period: int) -> bool:
    images = [interval]
    cur = interval
    for _ in range(period - 1):
        cur = _image_through_laps(m.laps, cur)
        images.append(cur)
    images.sort(key=lambda iv: (iv.lo, iv.hi))
    return all(a.hi <= b.lo for a, b in zip(images, images[1:]))


def find_renormalization(
    m: PAMap,
    p_max: int,
    lap_budget: int = 250_000,
    hull_steps: int = 64,
) -> Renormalization | None:
    """Search for a restrictive interval around a critical point.

    For each period ``p`` and critical point ``c`` the minimal closed
    ``f^p``-invariant interval containing ``c`` is grown by exact hull
    iteration ``J -> hull(J, f^p(J))``. A stabilized proper interval is
    accepted when it is a genuine renormalization: for ``p == 1`` it must
    miss some critical point (otherwise it is merely the dynamical core),
    and for ``p >= 2`` the interiors of ``J, f(J), ..., f^(p-1)(J)`` must be
    pairwise disjoint. Absence of a hit is evidence only, not a proof.
    """
    if p_max < 1:
        raise ValueError("p_max must be >= 1")
    if not m.critical_points:
        return None
    for p, laps in enumerate(iterate_lap_generations(m, p_max, lap_budget), start=1):
        for c in m.critical_points:
            fpc = m.iterate(c, p)
            seeds = []
            if fpc != c:
                seeds.append(IntervalQ.hull(c, fpc))
            idx = bisect_right([lap.interval.lo for lap in laps], c) - 1
            left = laps[max(idx - 1, 0)].interval.lo
            right = laps[min(idx, len(laps) - 1)].interval.hi
            if left < right:
                seeds.append(closed_interval(left, right))
            for seed in seeds:
                hit = _stabilize_hull(m, laps, seed, p, hull_steps)
                if hit is not None:
                    return hit
    return None


def _stabilize_hull(
    m: PAMap, laps: Sequence[Lap], seed: IntervalQ, period: int, hull_steps: int
) -> Renormalization | None:
    J = seed
    for _ in range(hull_steps):
        img = _image_through_laps(laps, J)
        grown = closed_interval(min(J.lo, img.lo), max(J.hi, img.hi))
        if grown == J:
            break
        if grown.contains_interval(m.phase):
            return None
        J = grown
    else:
        return None
    if J == m.phase or J.is_point:
        return None
    img = _image_through_laps(laps, J)
    if not J.contains_interval(img):
        return None
    if period == 1:
        if all(J.contains(c) for c in m.critical_points):
            return None
    else:
        if not _cycle_interiors_disjoint(m, J, period):
            return None
    return Renormalization(J, period)
