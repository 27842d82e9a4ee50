from __future__ import annotations

from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from affinduce.exact import AffineQ, IntervalQ, closed_interval
from affinduce.pamap import (
    BudgetError,
    MapSpecError,
    PAMap,
    expansion_report,
    find_renormalization,
    laps_of_iterate,
)
from affinduce.zoo import bimodal_cubiclike, full_tent, funnel_with_flat_branches, skew_tent, tent


@st.composite
def pa_maps(draw):
    """Random continuous maps of [0,1]: piecewise linear through value nodes."""
    k = draw(st.integers(min_value=1, max_value=4))
    if k > 1:
        cuts = draw(
            st.lists(
                st.fractions(min_value=F(1, 20), max_value=F(19, 20), max_denominator=40),
                min_size=k - 1,
                max_size=k - 1,
                unique=True,
            )
        )
    else:
        cuts = []
    bps = [F(0), *sorted(cuts), F(1)]
    ys = draw(
        st.lists(
            st.fractions(min_value=0, max_value=1, max_denominator=40),
            min_size=k + 1,
            max_size=k + 1,
        )
    )
    slopes = []
    for i in range(k):
        dx = bps[i + 1] - bps[i]
        dy = ys[i + 1] - ys[i]
        slopes.append(dy / dx if dx else F(0))
    ok = all(s != 0 for s in slopes) and all(a != b for a, b in zip(slopes, slopes[1:]))
    if not ok:
        # nudge into a valid map rather than rejecting: fall back to a tent
        return full_tent()
    branches = tuple(
        AffineQ(s, ys[i] - s * bps[i]) for i, s in enumerate(slopes)
    )
    return PAMap(closed_interval(F(0), F(1)), tuple(bps), branches)


class TestValidation:
    def test_continuity_violation_named(self):
        with pytest.raises(MapSpecError, match="continuity"):
            PAMap(
                closed_interval(F(0), F(1)),
                (F(0), F(1, 2), F(1)),
                (AffineQ(F(2), F(0)), AffineQ(F(-2), F(19, 10))),
            )

    def test_zero_slope_named(self):
        with pytest.raises(ValueError, match="slope"):
            PAMap(
                closed_interval(F(0), F(1)),
                (F(0), F(1, 2), F(1)),
                (AffineQ(F(0), F(1, 2)), AffineQ(F(1), F(0))),
            )

    def test_image_outside_phase(self):
        with pytest.raises(MapSpecError, match="outside"):
            PAMap(
                closed_interval(F(0), F(1)),
                (F(0), F(1, 2), F(1)),
                (AffineQ(F(3), F(0)), AffineQ(F(-3), F(3))),
            )

    def test_spurious_breakpoint(self):
        with pytest.raises(MapSpecError, match="spurious"):
            PAMap(
                closed_interval(F(0), F(1)),
                (F(0), F(1, 2), F(1)),
                (AffineQ(F(1, 2), F(0)), AffineQ(F(1, 2), F(0))),
            )

    def test_json_round_trip(self, tent):
        assert PAMap.from_json(tent.to_json()) == tent

    @given(pa_maps())
    @settings(max_examples=60)
    def test_generated_maps_validate(self, m):
        for q in m.breakpoints[1:-1]:
            i = m.breakpoints.index(q)
            assert m.branches[i - 1](q) == m.branches[i](q)


class TestEval:
    def test_tent_values(self, tent):
        assert tent(F(1, 4)) == F(1, 2)
        assert tent(F(1, 2)) == F(1)
        assert tent(F(2, 5)) == F(4, 5)

    def test_out_of_phase(self, tent):
        with pytest.raises(MapSpecError):
            tent(F(3, 2))


class TestOrbit:
    def test_period_two(self, tent):
        rec = tent.orbit(F(2, 5))
        assert (rec.preperiod, rec.period) == (0, 2)
        assert set(rec.cycle()) == {F(2, 5), F(4, 5)}

    def test_fixed_point(self, tent):
        rec = tent.orbit(F(0))
        assert (rec.preperiod, rec.period) == (0, 1)

    def test_preperiodic(self, tent):
        rec = tent.orbit(F(1, 7))
        assert (rec.preperiod, rec.period) == (1, 3)
        assert rec.points[:5] == (F(1, 7), F(2, 7), F(4, 7), F(6, 7), F(2, 7))

    def test_points_consistent(self, tent):
        rec = tent.orbit(F(3, 11))
        for a, b in zip(rec.points, rec.points[1:]):
            assert tent(a) == b
        assert rec.points[rec.preperiod + rec.period] == rec.points[rec.preperiod]

    def test_cap_reached(self):
        m = skew_tent(3, F(-3, 2))
        rec = m.orbit(F(100003, 2**31 + 1), cap=50)
        assert rec.period is None and len(rec.points) == 51


class TestLaps:
    def test_counts(self, tent):
        assert len(laps_of_iterate(tent, 1)) == 2
        laps2 = laps_of_iterate(tent, 2)
        assert len(laps2) == 4
        assert sorted(abs(l.data.slope) for l in laps2) == [4, 4, 4, 4]
        assert len(laps_of_iterate(tent, 3)) == 8

    def test_budget(self, tent):
        with pytest.raises(BudgetError):
            laps_of_iterate(tent, 6, lap_budget=10)

    @given(pa_maps(), st.integers(min_value=1, max_value=4))
    @settings(max_examples=25, deadline=None)
    def test_refinement_and_data(self, m, k):
        coarse = laps_of_iterate(m, k)
        fine = laps_of_iterate(m, k + 1)
        for lap in fine:
            parents = [c for c in coarse if c.interval.contains_interval(lap.interval)]
            assert parents, f"lap {lap.interval!r} not inside any lap of the previous iterate"
        for lap in coarse:
            for t in (F(1, 3), F(1, 2), F(2, 3)):
                x = lap.interval.lo + lap.interval.length * t
                assert lap.data(x) == m.iterate(x, k)

    @given(pa_maps())
    @settings(max_examples=25, deadline=None)
    def test_minima_submultiplicative(self, m):
        rep = expansion_report(m, 4)
        mins = {k: s for k, _, s in rep.rows}
        for a in (1, 2):
            for b in (1, 2):
                assert mins[a + b] >= mins[a] * mins[b]

    @given(pa_maps())
    @settings(max_examples=25, deadline=None)
    def test_lap_counts_nondecreasing(self, m):
        rep = expansion_report(m, 4)
        counts = [n for _, n, _ in rep.rows]
        assert counts == sorted(counts)


class TestExpansion:
    def test_full_tent(self, tent):
        rep = expansion_report(tent, 3)
        assert rep.verdict_k == 1
        assert rep.verdict_min == 2

    def test_slow_tent(self):
        rep = expansion_report(tent(F(6, 5)), 2)
        assert rep.verdict_k == 1
        assert rep.verdict_min == F(6, 5)

    def test_contracting_branch_expands_at_two(self):
        m = funnel_with_flat_branches()
        rep = expansion_report(m, 3)
        assert rep.rows[0][2] == F(1, 2)
        assert rep.verdict_k == 2
        assert rep.verdict_min == 2


class TestRenormalization:
    def test_full_tent_none(self, tent):
        assert find_renormalization(tent, 8) is None

    def test_tent_13_10_period_two(self):
        m = tent(F(13, 10))
        hit = find_renormalization(m, 2)
        assert hit is not None
        assert hit.period == 2
        J = hit.interval
        assert J.contains(F(1, 2))
        assert J != m.phase
        # exact invariance recheck through the laps of the second iterate
        img_lo = min(m.iterate(x, 2) for x in (J.lo, F(1, 2), J.hi))
        img_hi = max(m.iterate(x, 2) for x in (J.lo, F(1, 2), J.hi))
        assert J.lo <= img_lo and img_hi <= J.hi

    def test_restriction_is_terminal(self):
        # the tent(13/10) renormalization, rescaled to [0, 1]: a valley map
        # with slope magnitude 169/100; it has no further renormalization
        g = PAMap(
            closed_interval(F(0), F(1)),
            (F(0), F(100, 169), F(1)),
            (AffineQ(F(-169, 100), F(1)), AffineQ(F(169, 100), F(-1))),
        )
        assert find_renormalization(g, 8) is None

    def test_other_zoo_maps_pass_gate(self, zoo_maps):
        for name, m in zoo_maps.items():
            assert find_renormalization(m, 6) is None, name
