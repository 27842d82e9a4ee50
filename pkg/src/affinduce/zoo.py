"""Reference maps used across tests, scripts, and docs."""
from __future__ import annotations

from fractions import Fraction

from .exact import AffineQ, Rat, closed_interval, rat
from .pamap import PAMap


def tent(slope: Rat | int | str = 2) -> PAMap:
    """Symmetric tent on [0, 1] with peak ``slope / 2`` at ``1/2``."""
    s = rat(slope)
    if not 0 < s <= 2:
        raise ValueError("tent slope must lie in (0, 2]")
    return PAMap(
        phase=closed_interval(Fraction(0), Fraction(1)),
        breakpoints=(Fraction(0), Fraction(1, 2), Fraction(1)),
        branches=(AffineQ(s, Fraction(0)), AffineQ(-s, s)),
    )


def full_tent() -> PAMap:
    return tent(2)


def skew_tent(up: Rat | int | str, down: Rat | int | str) -> PAMap:
    """Skew tent on [0, 1] through (0,0) and (1,0) with the given slopes."""
    a = rat(up)
    b = rat(down)
    if a <= 0 or b >= 0:
        raise ValueError("need an increasing first slope and decreasing second")
    q = -b / (a - b)  # continuity point of a*x and b*(x-1)
    return PAMap(
        phase=closed_interval(Fraction(0), Fraction(1)),
        breakpoints=(Fraction(0), q, Fraction(1)),
        branches=(AffineQ(a, Fraction(0)), AffineQ(b, -b)),
    )


def bimodal_cubiclike() -> PAMap:
    """Full three-branch map with slopes (3, -3, 3) and criticals 1/3, 2/3."""
    return PAMap(
        phase=closed_interval(Fraction(0), Fraction(1)),
        breakpoints=(Fraction(0), Fraction(1, 3), Fraction(2, 3), Fraction(1)),
        branches=(
            AffineQ(Fraction(3), Fraction(0)),
            AffineQ(Fraction(-3), Fraction(2)),
            AffineQ(Fraction(3), Fraction(-2)),
        ),
    )


def funnel_with_flat_branches() -> PAMap:
    """Two expanding branches feeding two gentle ones; expanding only at k=2.

    min |Df| = 1/2 but both contracting branches exit into the slope-4
    region in one step, so min |Df^2| = 2.
    """
    return PAMap(
        phase=closed_interval(Fraction(0), Fraction(1)),
        breakpoints=(
            Fraction(0),
            Fraction(1, 4),
            Fraction(1, 2),
            Fraction(3, 4),
            Fraction(1),
        ),
        branches=(
            AffineQ(Fraction(4), Fraction(0)),
            AffineQ(Fraction(-4), Fraction(2)),
            AffineQ(Fraction(1, 2), Fraction(-1, 4)),
            AffineQ(Fraction(2, 3), Fraction(-3, 8)),
        ),
    )


def zoo() -> dict[str, PAMap]:
    """The reference family the acceptance suite runs end to end."""
    return {
        "full_tent": full_tent(),
        "skew_tent_3_neg32": skew_tent(3, Fraction(-3, 2)),
        "skew_tent_52_neg53": skew_tent(Fraction(5, 2), Fraction(-5, 3)),
        "bimodal": bimodal_cubiclike(),
    }
