"""Deterministic orbit sampling with exact or denominator-capped arithmetic.

Orbit statistics need many iterates of many starts. Floating point is a
trap here: maps with dyadic slopes collapse binary floats onto short exact
orbits (the full tent sends every double to 0 within ~53 steps). Instead
orbits run in raw integer numerator/denominator arithmetic; when a map's
slopes grow denominators, they are projected back below a bit cap by
continued fractions. With large odd start denominators this keeps orbits
exact for integer-slope maps and faithfully pseudo-rounded otherwise, and
every result is reproducible from the seed alone.
"""
from __future__ import annotations

import random
from fractions import Fraction
from math import gcd
from typing import Sequence

from .exact import IntervalQ, Rat, digit_size
from .pamap import PAMap

_DEN_BITS = 64


def derive_seed(seed: int, index: int) -> int:
    return seed * 1_000_003 + 7919 * index + 12345


def sample_start(m: PAMap, seed: int, index: int) -> Rat:
    """Deterministic rational start in the phase interior, off the breakpoints.

    Denominators are large random odd integers so that integer-slope maps
    get long exact orbits instead of short accidental cycles.
    """
    rng = random.Random(derive_seed(seed, index))
    span = m.phase.length
    while True:
        den = rng.getrandbits(45) | 1
        if den < 3:
            continue
        num = rng.randrange(1, den)
        x = m.phase.lo + span * Fraction(num, den)
        if not m.is_breakpoint(x):
            return x


def _limit_denominator(p: int, q: int, max_den: int) -> tuple[int, int]:
    """Closest fraction to p/q with denominator <= max_den (continued fractions)."""
    if q <= max_den:
        return p, q
    p0, q0, p1, q1 = 0, 1, 1, 0
    n, d = p, q
    while True:
        a = n // d
        q2 = q0 + a * q1
        if q2 > max_den:
            break
        p0, q0, p1, q1 = p1, q1, p0 + a * p1, q2
        n, d = d, n - a * d
    k = (max_den - q0) // q1
    # candidates: (p0 + k*p1)/(q0 + k*q1) and p1/q1
    c1n, c1d = p0 + k * p1, q0 + k * q1
    c2n, c2d = p1, q1
    # compare |c1 - p/q| vs |c2 - p/q| via cross multiplication
    d1 = abs(c1n * q - p * c1d) * c2d
    d2 = abs(c2n * q - p * c2d) * c1d
    if d2 <= d1:
        g = gcd(c2n, c2d)
        return c2n // g, c2d // g
    g = gcd(c1n, c1d)
    return c1n // g, c1d // g


class _Engine:
    """Raw-integer stepping tables for one map."""

    def __init__(self, m: PAMap, den_bits: int | None = _DEN_BITS):
        self.interior = [(q.numerator, q.denominator) for q in m.breakpoints[1:-1]]
        self.branches = [
            (b.slope.numerator, b.slope.denominator, b.offset.numerator, b.offset.denominator)
            for b in m.branches
        ]
        self.lo = (m.phase.lo.numerator, m.phase.lo.denominator)
        self.hi = (m.phase.hi.numerator, m.phase.hi.denominator)
        self.den_bits = den_bits

    def step(self, p: int, q: int) -> tuple[int, int]:
        idx = 0
        for bn, bd in self.interior:
            if p * bd > bn * q:
                idx += 1
            else:
                break
        sn, sd, on, od = self.branches[idx]
        num = sn * p * od + on * sd * q
        den = sd * q * od
        g = gcd(num, den)
        if g > 1:
            num //= g
            den //= g
        if self.den_bits is not None and den.bit_length() > self.den_bits:
            num, den = _limit_denominator(num, den, 1 << self.den_bits)
            lon, lod = self.lo
            hin, hid = self.hi
            if num * lod < lon * den:
                num, den = lon, lod
            elif num * hid > hin * den:
                num, den = hin, hid
        return num, den


def cell_counts(
    m: PAMap, x0: Rat, steps: int, cells: int, den_bits: int | None = _DEN_BITS
) -> list[int]:
    """Visit counts of ``x0, f(x0), ..., f^(steps-1)(x0)`` over an equal grid."""
    eng = _Engine(m, den_bits)
    lon, lod = m.phase.lo.numerator, m.phase.lo.denominator
    spann, spand = m.phase.length.numerator, m.phase.length.denominator
    counts = [0] * cells
    p, q = x0.numerator, x0.denominator
    for _ in range(steps):
        # cell index = floor((x - lo) * cells / span), clamped
        rel_n = (p * lod - lon * q) * cells * spand
        rel_d = q * lod * spann
        idx = rel_n // rel_d
        if idx >= cells:
            idx = cells - 1
        elif idx < 0:
            idx = 0
        counts[idx] += 1
        p, q = eng.step(p, q)
    return counts


def first_hit_time(
    m: PAMap,
    x0: Rat,
    target: IntervalQ,
    horizon: int,
    den_bits: int | None = _DEN_BITS,
) -> int | None:
    """Least step index in ``0..horizon`` whose orbit point lies in the target."""
    eng = _Engine(m, den_bits)
    tlon, tlod = target.lo.numerator, target.lo.denominator
    thin, thid = target.hi.numerator, target.hi.denominator
    lo_open, hi_open = target.lo_open, target.hi_open
    p, q = x0.numerator, x0.denominator
    for step in range(horizon + 1):
        left = p * tlod - tlon * q
        right = p * thid - thin * q
        if (left > 0 or (left == 0 and not lo_open)) and (
            right < 0 or (right == 0 and not hi_open)
        ):
            return step
        p, q = eng.step(p, q)
    return None


def capped_orbit_tail(
    m: PAMap, x0: Rat, burn: int, tail: int, den_bits: int | None = _DEN_BITS
) -> list[Rat]:
    """The orbit points ``f^burn(x0) .. f^(burn+tail-1)(x0)`` under the cap."""
    eng = _Engine(m, den_bits)
    p, q = x0.numerator, x0.denominator
    for _ in range(burn):
        p, q = eng.step(p, q)
    out = []
    for _ in range(tail):
        out.append(Fraction(p, q))
        p, q = eng.step(p, q)
    return out


def exact_orbit_tail(
    m: PAMap, x0: Rat, burn: int, tail: int, digit_budget: int
) -> list[Rat] | None:
    """Exact (uncapped) orbit tail; ``None`` when denominators blow the budget."""
    eng = _Engine(m, den_bits=None)
    p, q = x0.numerator, x0.denominator
    checkpoint = max(1, (burn + tail) // 16)
    out: list[Rat] = []
    for i in range(burn + tail):
        if i % checkpoint == 0 and digit_size(Fraction(p, q)) > digit_budget:
            return None
        if i >= burn:
            out.append(Fraction(p, q))
        p, q = eng.step(p, q)
    return out
