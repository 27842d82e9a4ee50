"""Exact rational scalars, intervals, and affine maps.

Everything in this module is pure ``fractions.Fraction`` arithmetic: no
floats, no rounding. All geometric predicates (containment, disjointness,
measure) downstream rely on these being exact decisions, so nothing here is
allowed to approximate.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

Rat = Fraction


def rat(value: int | str | Fraction) -> Rat:
    """Coerce ints, Fractions, or strings like ``"3/4"`` to an exact rational."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot interpret {value!r} as a rational")


def rat_str(value: Rat) -> str:
    """Canonical ``p/q`` form used in every file format."""
    return f"{value.numerator}/{value.denominator}"


def digit_size(value: Rat) -> int:
    """Decimal-digit size of the larger of numerator and denominator.

    Cheap bound via bit length; used to cap denominator blow-up in pullback
    compositions before they get out of hand.
    """
    bits = max(abs(value.numerator).bit_length(), value.denominator.bit_length())
    return max(1, (bits * 30103) // 100000 + 1)


@dataclass(frozen=True)
class IntervalQ:
    """An interval with exact rational endpoints and per-end openness.

    ``lo == hi`` is permitted only with both ends closed and represents a
    single point; bad-set complements genuinely contain such isolated points
    and dropping them would break outer approximation guarantees.
    """

    lo: Rat
    hi: Rat
    lo_open: bool = False
    hi_open: bool = False

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise ValueError(f"interval endpoints out of order: {self.lo} > {self.hi}")
        if self.lo == self.hi and (self.lo_open or self.hi_open):
            raise ValueError("degenerate interval must be closed on both ends")

    # -- basic geometry ----------------------------------------------------

    @property
    def length(self) -> Rat:
        return self.hi - self.lo

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    def midpoint(self) -> Rat:
        return (self.lo + self.hi) / 2

    def contains(self, x: Rat) -> bool:
        if x < self.lo or x > self.hi:
            return False
        if x == self.lo and self.lo_open:
            return False
        if x == self.hi and self.hi_open:
            return False
        return True

    def closure(self) -> "IntervalQ":
        if not (self.lo_open or self.hi_open):
            return self
        return IntervalQ(self.lo, self.hi)

    def contains_interval(self, other: "IntervalQ") -> bool:
        """Set containment ``other setminus self == empty``, openness-aware."""
        if other.lo < self.lo or (other.lo == self.lo and self.lo_open and not other.lo_open):
            return False
        if other.hi > self.hi or (other.hi == self.hi and self.hi_open and not other.hi_open):
            return False
        return True

    def strictly_contains(self, other: "IntervalQ") -> bool:
        return self.contains_interval(other) and self != other

    def intersects(self, other: "IntervalQ") -> bool:
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        if lo > hi:
            return False
        if lo < hi:
            return True
        # Single shared point: both sides must actually include it.
        return self.contains(lo) and other.contains(lo)

    def intersection(self, other: "IntervalQ") -> "IntervalQ | None":
        if self.lo > other.lo:
            lo, lo_open = self.lo, self.lo_open
        elif self.lo < other.lo:
            lo, lo_open = other.lo, other.lo_open
        else:
            lo, lo_open = self.lo, self.lo_open or other.lo_open
        if self.hi < other.hi:
            hi, hi_open = self.hi, self.hi_open
        elif self.hi > other.hi:
            hi, hi_open = other.hi, other.hi_open
        else:
            hi, hi_open = self.hi, self.hi_open or other.hi_open
        if lo > hi or (lo == hi and (lo_open or hi_open)):
            return None
        return IntervalQ(lo, hi, lo_open, hi_open)

    @staticmethod
    def hull(a: Rat, b: Rat) -> "IntervalQ":
        """Closed hull of two rationals in either order."""
        return IntervalQ(min(a, b), max(a, b))

    # -- serialization -----------------------------------------------------

    def to_json(self) -> dict:
        return {
            "lo": rat_str(self.lo),
            "hi": rat_str(self.hi),
            "open": [self.lo_open, self.hi_open],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "IntervalQ":
        opens = doc.get("open", [False, False])
        return cls(rat(doc["lo"]), rat(doc["hi"]), bool(opens[0]), bool(opens[1]))

    def __repr__(self) -> str:
        left = "(" if self.lo_open else "["
        right = ")" if self.hi_open else "]"
        return f"{left}{self.lo}, {self.hi}{right}"


def open_interval(lo: Rat, hi: Rat) -> IntervalQ:
    return IntervalQ(lo, hi, True, True)


def closed_interval(lo: Rat, hi: Rat) -> IntervalQ:
    return IntervalQ(lo, hi)


@dataclass(frozen=True)
class AffineQ:
    """The affine map ``x -> slope * x + offset`` with nonzero rational slope."""

    slope: Rat
    offset: Rat

    def __post_init__(self) -> None:
        if self.slope == 0:
            raise ValueError("affine map must have nonzero slope")

    def __call__(self, x: Rat) -> Rat:
        return self.slope * x + self.offset

    def compose(self, inner: "AffineQ") -> "AffineQ":
        """``self after inner``: apply ``inner`` first."""
        return AffineQ(self.slope * inner.slope, self.slope * inner.offset + self.offset)

    def invert(self) -> "AffineQ":
        return AffineQ(1 / self.slope, -self.offset / self.slope)

    def image(self, interval: IntervalQ) -> IntervalQ:
        a = self(interval.lo)
        b = self(interval.hi)
        if self.slope > 0:
            return IntervalQ(a, b, interval.lo_open, interval.hi_open)
        return IntervalQ(b, a, interval.hi_open, interval.lo_open)

    def preimage(self, interval: IntervalQ) -> IntervalQ:
        return self.invert().image(interval)

    @classmethod
    def identity(cls) -> "AffineQ":
        return cls(Fraction(1), Fraction(0))

    def to_json(self) -> dict:
        return {"slope": rat_str(self.slope), "offset": rat_str(self.offset)}

    @classmethod
    def from_json(cls, doc: dict) -> "AffineQ":
        return cls(rat(doc["slope"]), rat(doc["offset"]))


def interval_image(a: AffineQ, interval: IntervalQ) -> IntervalQ:
    """Exact affine image; endpoints swap when the slope is negative."""
    return a.image(interval)


def interval_union_measure(intervals: Iterable[IntervalQ]) -> Rat:
    """Exact Lebesgue measure of a finite union (sweep over sorted endpoints)."""
    spans = sorted((iv.lo, iv.hi) for iv in intervals)
    total = Fraction(0)
    cur_lo: Rat | None = None
    cur_hi: Rat | None = None
    for lo, hi in spans:
        if cur_hi is None or lo > cur_hi:
            if cur_hi is not None:
                total += cur_hi - cur_lo  # type: ignore[operator]
            cur_lo, cur_hi = lo, hi
        elif hi > cur_hi:
            cur_hi = hi
    if cur_hi is not None:
        total += cur_hi - cur_lo  # type: ignore[operator]
    return total


# ---------------------------------------------------------------------------
# Closed-piece set algebra.
#
# Bad-set machinery works with finite unions of closed intervals (points
# allowed). These helpers keep pieces sorted and disjoint and implement
# measure-exact union / intersection / difference / complement as linear
# sweeps, since piece counts reach tens of thousands at deep horizons.
# ---------------------------------------------------------------------------


def merge_closed(pieces: Iterable[IntervalQ]) -> list[IntervalQ]:
    """Normalize closed pieces: sorted, overlapping/touching pieces merged."""
    items = sorted(((p.lo, p.hi) for p in pieces))
    out: list[IntervalQ] = []
    cur: tuple[Rat, Rat] | None = None
    for lo, hi in items:
        if cur is None:
            cur = (lo, hi)
        elif lo <= cur[1]:
            if hi > cur[1]:
                cur = (cur[0], hi)
        else:
            out.append(IntervalQ(cur[0], cur[1]))
            cur = (lo, hi)
    if cur is not None:
        out.append(IntervalQ(cur[0], cur[1]))
    return out


def closed_measure(pieces: Sequence[IntervalQ]) -> Rat:
    return sum((p.hi - p.lo for p in pieces), Fraction(0))


def closed_intersection(a: Sequence[IntervalQ], b: Sequence[IntervalQ]) -> list[IntervalQ]:
    """Intersection of two normalized closed-piece lists (two-pointer sweep)."""
    out: list[IntervalQ] = []
    i = j = 0
    while i < len(a) and j < len(b):
        lo = max(a[i].lo, b[j].lo)
        hi = min(a[i].hi, b[j].hi)
        if lo <= hi:
            out.append(IntervalQ(lo, hi))
        if a[i].hi < b[j].hi:
            i += 1
        else:
            j += 1
    return out


def closed_difference(a: Sequence[IntervalQ], b: Sequence[IntervalQ]) -> list[IntervalQ]:
    """Closed outer hulls of ``a setminus b``; measures are exact.

    A piece fully covered by ``b`` vanishes; a leftover sliver keeps its
    closed hull even when its boundary point lies in ``b``.
    """
    out: list[IntervalQ] = []
    j = 0
    for piece in a:
        while j < len(b) and b[j].hi < piece.lo:
            j += 1
        cursor = piece.lo
        touched = False
        covered = False
        k = j
        while k < len(b) and b[k].lo <= piece.hi:
            touched = True
            if b[k].lo > cursor:
                out.append(IntervalQ(cursor, b[k].lo))
            if b[k].hi > cursor:
                cursor = b[k].hi
            if cursor >= piece.hi:
                covered = True
                break
            k += 1
        if not covered:
            if cursor < piece.hi:
                out.append(IntervalQ(cursor, piece.hi))
            elif not touched and piece.is_point:
                out.append(piece)
    return merge_closed(out)


def pieces_min_gap(pieces: Sequence[IntervalQ]) -> Rat | None:
    """Smallest positive gap between consecutive normalized pieces."""
    best: Rat | None = None
    for prev, nxt in zip(pieces, pieces[1:]):
        gap = nxt.lo - prev.hi
        if gap > 0 and (best is None or gap < best):
            best = gap
    return best


def fatten_closed(pieces: Sequence[IntervalQ], eps: Rat, within: IntervalQ) -> list[IntervalQ]:
    """Closed eps-neighborhood of the pieces clipped to ``within``."""
    grown = [
        IntervalQ(max(within.lo, p.lo - eps), min(within.hi, p.hi + eps)) for p in pieces
    ]
    return merge_closed(grown)


class OpenIntervalUnion:
    """A sorted union of disjoint open intervals (touching components kept apart).

    This is the running union of good-interval domains: open components must
    not be glued across a shared endpoint because that endpoint is a genuine
    bad point and has to survive into complements.
    """

    def __init__(self) -> None:
        self._los: list[Rat] = []
        self._his: list[Rat] = []
        self._measure = Fraction(0)

    def __len__(self) -> int:
        return len(self._los)

    @property
    def measure(self) -> Rat:
        return self._measure

    def covers(self, lo: Rat, hi: Rat) -> bool:
        """Is the open interval (lo, hi) contained in a single component?"""
        idx = bisect.bisect_right(self._los, lo) - 1
        if idx < 0:
            return False
        return self._his[idx] >= hi and self._los[idx] <= lo

    def insert(self, lo: Rat, hi: Rat) -> None:
        """Insert an open interval, merging strict overlaps only."""
        left = bisect.bisect_left(self._his, lo)
        # skip components that merely touch on the left (his == lo)
        while left < len(self._los) and self._his[left] == lo:
            left += 1
        right = bisect.bisect_right(self._los, hi)
        while right > left and self._los[right - 1] == hi:
            right -= 1
        if left == right:
            self._los.insert(left, lo)
            self._his.insert(left, hi)
            self._measure += hi - lo
        else:
            new_lo = min(lo, self._los[left])
            new_hi = max(hi, self._his[right - 1])
            removed = sum(
                (self._his[k] - self._los[k] for k in range(left, right)), Fraction(0)
            )
            del self._los[left:right]
            del self._his[left:right]
            self._los.insert(left, new_lo)
            self._his.insert(left, new_hi)
            self._measure += (new_hi - new_lo) - removed

    def components(self) -> Iterator[IntervalQ]:
        for lo, hi in zip(self._los, self._his):
            yield open_interval(lo, hi)

    def complement_within(self, phase: IntervalQ) -> list[IntervalQ]:
        """Closed complement pieces inside ``phase``, degenerate points kept."""
        out: list[IntervalQ] = []
        cursor = phase.lo
        for lo, hi in zip(self._los, self._his):
            if cursor <= lo:
                out.append(IntervalQ(cursor, lo))
            cursor = hi
        if cursor <= phase.hi:
            out.append(IntervalQ(cursor, phase.hi))
        return out
