"""Construction and certification of nice neighborhoods of the critical set.

A neighborhood ``U`` is one disjoint open interval per critical point.
Niceness here means: the forward orbit of every component boundary point
never enters the open set ``U``. Boundary points are chosen preperiodic so
each boundary orbit closes into a cycle and the check is finite and exact;
the certificates (orbit records) ship with the neighborhood so third
parties can re-verify without re-searching.
"""
from __future__ import annotations

import heapq
import itertools
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Literal

from .exact import IntervalQ, Rat, open_interval, rat, rat_str
from .pamap import MapSpecError, OrbitRecord, PAMap, iterate_lap_generations


class ConstructionFailure(RuntimeError):
    """No certified candidate neighborhood found within the given budgets."""


@dataclass
class NiceNbhd:
    """A certified nice neighborhood: component per critical point + proofs."""

    components: dict[Rat, IntervalQ]  # critical point -> open interval
    certificates: dict[Rat, OrbitRecord]  # boundary point -> closing orbit

    @property
    def mesh(self) -> Rat:
        return max(iv.length for iv in self.components.values())

    def sorted_components(self) -> list[tuple[Rat, IntervalQ]]:
        return sorted(self.components.items())

    def boundary_points(self) -> list[Rat]:
        out = []
        for _, iv in self.sorted_components():
            out.extend((iv.lo, iv.hi))
        return out

    def component_containing(self, x: Rat) -> tuple[Rat, IntervalQ] | None:
        for c, iv in self.components.items():
            if iv.contains(x):
                return c, iv
        return None

    def contains_point(self, x: Rat) -> bool:
        return self.component_containing(x) is not None

    def to_json(self) -> dict:
        return {
            "components": {
                rat_str(c): iv.to_json() for c, iv in self.sorted_components()
            },
            "mesh": rat_str(self.mesh),
            "certificates": {
                rat_str(b): rec.to_json() for b, rec in sorted(self.certificates.items())
            },
        }

    @classmethod
    def from_json(cls, doc: dict) -> "NiceNbhd":
        components = {
            rat(c): IntervalQ.from_json(iv) for c, iv in doc["components"].items()
        }
        certificates = {
            rat(b): OrbitRecord.from_json(rec)
            for b, rec in doc.get("certificates", {}).items()
        }
        return cls(components, certificates)


@dataclass(frozen=True)
class CertifyOutcome:
    status: Literal["certified", "counterexample", "unknown"]
    certificates: dict[Rat, OrbitRecord] = field(default_factory=dict)
    # (boundary point, step index >= 1, landing point inside U)
    witness: tuple[Rat, int, Rat] | None = None


def _validate_candidate(m: PAMap, components: dict[Rat, IntervalQ]) -> None:
    criticals = set(m.critical_points)
    if set(components) != criticals:
        raise MapSpecError("candidate must have exactly one component per critical point")
    for c, iv in components.items():
        if not (iv.lo_open and iv.hi_open) or iv.is_point:
            raise MapSpecError(f"component at {rat_str(c)} must be a nondegenerate open interval")
        if not (iv.lo < c < iv.hi):
            raise MapSpecError(f"component {iv!r} does not contain its critical point {rat_str(c)}")
        if not m.phase.contains_interval(iv):
            raise MapSpecError(f"component {iv!r} leaves the phase interval")
        for q in m.breakpoints:
            if q != c and iv.lo < q < iv.hi:
                raise MapSpecError(
                    f"component {iv!r} contains the extra breakpoint {rat_str(q)}"
                )
    ordered = sorted(components.values(), key=lambda iv: iv.lo)
    for a, b in zip(ordered, ordered[1:]):
        if a.hi > b.lo:
            raise MapSpecError(f"components {a!r} and {b!r} overlap")


def certify_nice(
    m: PAMap, components: dict[Rat, IntervalQ], cap: int = 10_000
) -> CertifyOutcome:
    """Certify or refute niceness of a candidate neighborhood.

    Returns full orbit certificates when every boundary orbit closes into a
    cycle without entering ``U``; a witness (boundary point, step, landing
    point) when some iterate lands inside; ``unknown`` when an orbit fails
    to close within ``cap`` steps.
    """
    _validate_candidate(m, components)
    intervals = list(components.values())

    def inside(x: Rat) -> bool:
        return any(iv.contains(x) for iv in intervals)

    certificates: dict[Rat, OrbitRecord] = {}
    boundary = []
    for _, iv in sorted(components.items()):
        boundary.extend((iv.lo, iv.hi))
    for b in boundary:
        rec = m.orbit(b, cap=cap)
        for step, point in enumerate(rec.points[1:], start=1):
            if inside(point):
                return CertifyOutcome("counterexample", witness=(b, step, point))
        if not rec.closed:
            return CertifyOutcome("unknown")
        certificates[b] = rec
    return CertifyOutcome("certified", certificates=certificates)


def _branch_fixed_points(m: PAMap, iterates: int, lap_budget: int) -> set[Rat]:
    """Exact fixed points of every lap of ``f^k`` for ``k <= iterates``."""
    out: set[Rat] = set()
    for laps in iterate_lap_generations(m, iterates, lap_budget):
        for lap in laps:
            if lap.data.slope == 1:
                continue
            x = lap.data.offset / (1 - lap.data.slope)
            if lap.interval.contains(x):
                out.add(x)
    return out


def _preimage_pool(m: PAMap, seeds: set[Rat], depth: int) -> set[Rat]:
    pool = set(seeds)
    frontier = set(seeds)
    for _ in range(depth):
        nxt: set[Rat] = set()
        for y in frontier:
            for x in m.preimages(y):
                if x not in pool:
                    nxt.add(x)
        pool |= nxt
        frontier = nxt
        if not frontier:
            break
    return pool


def _pairs_by_width(
    lefts: list[Rat], rights: list[Rat], center: Rat, mesh_target: Rat
) -> Iterable[tuple[Rat, Rat]]:
    """Yield (a, b) with a < center < b and b - a <= mesh_target, widest first.

    Lazy heap merge over the per-left staircases; never materializes the
    full pair grid (pools get large on multi-branch maps).
    """
    heap: list[tuple[Rat, Rat, Rat, int, int]] = []
    for i, a in enumerate(lefts):
        j = bisect_right(rights, a + mesh_target) - 1
        if j >= 0:
            b = rights[j]
            heapq.heappush(heap, (a - b, a, b, i, j))
    while heap:
        _, a, b, i, j = heapq.heappop(heap)
        yield a, b
        if j > 0:
            nb = rights[j - 1]
            heapq.heappush(heap, (a - nb, a, nb, i, j - 1))


def build_nice(
    m: PAMap,
    mesh_target: Rat,
    cap: int,
    orbit_cap: int = 10_000,
    per_point_candidates: int = 24,
    max_joint_attempts: int = 4096,
    seed_iterates: int = 2,
    lap_budget: int = 250_000,
) -> NiceNbhd:
    """Build a certified nice neighborhood with mesh at most ``mesh_target``.

    Candidate boundary points are preperiodic by construction: exact fixed
    points of the branches of low iterates, expanded by preimages up to
    depth ``cap``. Each boundary orbit is computed once; around each
    critical point the widest admissible pairs whose own boundary orbits
    avoid them are collected first (wide components keep induced-map
    residuals decaying fast), then combinations are certified jointly.
    """
    if mesh_target <= 0:
        raise ValueError("mesh_target must be positive")
    criticals = m.critical_points
    if not criticals:
        raise ConstructionFailure("map has no critical points")
    seeds = _branch_fixed_points(m, seed_iterates, lap_budget)
    pool = sorted(_preimage_pool(m, seeds, cap))

    records: dict[Rat, OrbitRecord] = {}

    def forward_points(p: Rat) -> tuple[Rat, ...] | None:
        rec = records.get(p)
        if rec is None:
            rec = m.orbit(p, cap=orbit_cap)
            records[p] = rec
        return rec.points[1:] if rec.closed else None

    per_critical: list[list[IntervalQ]] = []
    bps = sorted(m.breakpoints)
    for c in criticals:
        left_wall = max(q for q in bps if q < c)
        right_wall = min(q for q in bps if q > c)
        lefts = [p for p in pool if left_wall <= p < c]
        rights = [p for p in pool if c < p <= right_wall]
        kept: list[IntervalQ] = []
        examined = 0
        for a, b in _pairs_by_width(lefts, rights, c, mesh_target):
            examined += 1
            if examined > 20 * max_joint_attempts:
                break
            iv = open_interval(a, b)
            orbits = (forward_points(a), forward_points(b))
            if any(o is None for o in orbits):
                continue
            if any(iv.contains(x) for o in orbits for x in o):  # type: ignore[union-attr]
                continue
            kept.append(iv)
            if len(kept) >= per_point_candidates:
                break
        if not kept:
            raise ConstructionFailure(
                f"no self-avoiding boundary pair near critical point {rat_str(c)}; "
                "raise the preimage depth or mesh target"
            )
        per_critical.append(kept)

    attempts = 0
    for combo in itertools.product(*per_critical):
        attempts += 1
        if attempts > max_joint_attempts:
            break
        ordered = sorted(combo, key=lambda iv: iv.lo)
        if any(a.hi > b.lo for a, b in zip(ordered, ordered[1:])):
            continue
        clear = True
        for iv in combo:
            for b in (iv.lo, iv.hi):
                for x in records[b].points[1:]:
                    if any(other.contains(x) for other in combo):
                        clear = False
                        break
                if not clear:
                    break
            if not clear:
                break
        if not clear:
            continue
        candidate = dict(zip(criticals, combo))
        outcome = certify_nice(m, candidate, cap=orbit_cap)
        if outcome.status == "certified":
            return NiceNbhd(candidate, outcome.certificates)
    raise ConstructionFailure(
        "no candidate neighborhood certified; raise the preimage depth or mesh target"
    )
