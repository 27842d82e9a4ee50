from __future__ import annotations

from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from affinduce.exact import (
    AffineQ,
    IntervalQ,
    OpenIntervalUnion,
    closed_difference,
    closed_intersection,
    closed_measure,
    digit_size,
    interval_image,
    interval_union_measure,
    merge_closed,
    open_interval,
    rat,
    rat_str,
)

rationals = st.fractions(min_value=-100, max_value=100, max_denominator=10**4)
nonzero_rationals = rationals.filter(lambda q: q != 0)


class TestRat:
    def test_parse_and_format(self):
        assert rat("3/4") == F(3, 4)
        assert rat("-7/2") == F(-7, 2)
        assert rat(5) == F(5)
        assert rat_str(F(3, 4)) == "3/4"
        assert rat_str(F(-2)) == "-2/1"
        assert rat(rat_str(F(22, 7))) == F(22, 7)

    @given(rationals, rationals)
    def test_add_cancel(self, a, b):
        assert (a + b) - b == a

    @given(rationals, nonzero_rationals)
    def test_mul_cancel(self, a, b):
        assert (a * b) / b == a

    @given(rationals, rationals)
    def test_trichotomy(self, a, b):
        assert sum([a < b, a == b, a > b]) == 1

    def test_digit_size_grows(self):
        assert digit_size(F(1, 2)) == 1
        assert digit_size(F(1, 10**50)) >= 50


class TestIntervalQ:
    def test_validation(self):
        with pytest.raises(ValueError):
            IntervalQ(F(1), F(0))
        with pytest.raises(ValueError):
            IntervalQ(F(1), F(1), True, False)
        assert IntervalQ(F(1), F(1)).is_point

    def test_openness_membership(self):
        iv = open_interval(F(0), F(1))
        assert not iv.contains(F(0)) and not iv.contains(F(1))
        assert iv.contains(F(1, 2))
        closed = IntervalQ(F(0), F(1))
        assert closed.contains(F(0)) and closed.contains(F(1))

    def test_containment_openness(self):
        outer_open = open_interval(F(0), F(1))
        inner_closed = IntervalQ(F(0), F(1))
        assert inner_closed.contains_interval(outer_open)
        assert not outer_open.contains_interval(inner_closed)
        assert outer_open.contains_interval(open_interval(F(0), F(1, 2)))

    def test_touching_open_intervals_disjoint(self):
        a = open_interval(F(0), F(1, 3))
        b = open_interval(F(1, 3), F(2, 3))
        assert not a.intersects(b)
        c = IntervalQ(F(0), F(1, 3))
        d = IntervalQ(F(1, 3), F(1))
        assert c.intersects(d)

    def test_json_round_trip(self):
        iv = open_interval(F(2, 5), F(3, 5))
        assert IntervalQ.from_json(iv.to_json()) == iv


class TestAffine:
    def test_image_positive_slope(self):
        a = AffineQ(F(2), F(0))
        assert a.image(open_interval(F(1, 5), F(3, 10))) == open_interval(F(2, 5), F(3, 5))

    def test_image_negative_slope_swaps(self):
        a = AffineQ(F(-2), F(2))
        assert a.image(open_interval(F(7, 10), F(4, 5))) == open_interval(F(2, 5), F(3, 5))

    def test_image_identity(self):
        ident = AffineQ.identity()
        iv = open_interval(F(1, 7), F(5, 7))
        assert ident.image(iv) == iv

    @given(nonzero_rationals, rationals, rationals)
    def test_invert_round_trip(self, slope, offset, x):
        a = AffineQ(slope, offset)
        assert a.invert()(a(x)) == x

    @given(nonzero_rationals, rationals, rationals, rationals)
    def test_interval_image_round_trip(self, slope, offset, p, q):
        if p == q:
            return
        a = AffineQ(slope, offset)
        iv = IntervalQ(min(p, q), max(p, q), True, False)
        assert a.invert().image(a.image(iv)) == iv

    def test_compose_order(self):
        g = AffineQ(F(2), F(1))
        h = AffineQ(F(-3), F(5))
        x = F(7, 11)
        assert g.compose(h)(x) == g(h(x))

    def test_zero_slope_rejected(self):
        with pytest.raises(ValueError):
            AffineQ(F(0), F(1))


intervals = st.tuples(rationals, rationals).filter(lambda t: t[0] != t[1]).map(
    lambda t: IntervalQ(min(t), max(t), True, True)
)


class TestUnionMeasure:
    def test_merged_overlap(self):
        s = [open_interval(F(0), F(1, 2)), open_interval(F(1, 4), F(3, 4))]
        assert interval_union_measure(s) == F(3, 4)

    def test_empty(self):
        assert interval_union_measure([]) == 0

    def test_touching_open(self):
        s = [open_interval(F(0), F(1, 3)), open_interval(F(1, 3), F(2, 3))]
        assert interval_union_measure(s) == F(2, 3)

    @given(st.lists(intervals, max_size=8), intervals)
    def test_monotone_under_adding(self, items, extra):
        assert interval_union_measure(items) <= interval_union_measure([*items, extra])

    @given(st.lists(intervals, min_size=1, max_size=8))
    def test_bounded_by_hull(self, items):
        hull = max(i.hi for i in items) - min(i.lo for i in items)
        assert interval_union_measure(items) <= hull


class TestClosedPieces:
    def test_merge_and_measure(self):
        pieces = [IntervalQ(F(0), F(1, 2)), IntervalQ(F(1, 2), F(3, 4)), IntervalQ(F(9, 10), F(9, 10))]
        merged = merge_closed(pieces)
        assert [str(p) for p in merged] == ["[0, 3/4]", "[9/10, 9/10]"]
        assert closed_measure(merged) == F(3, 4)

    def test_intersection(self):
        a = [IntervalQ(F(0), F(1, 2)), IntervalQ(F(3, 4), F(1))]
        b = [IntervalQ(F(1, 4), F(7, 8))]
        got = closed_intersection(a, b)
        assert got == [IntervalQ(F(1, 4), F(1, 2)), IntervalQ(F(3, 4), F(7, 8))]

    def test_difference(self):
        a = [IntervalQ(F(0), F(1))]
        b = [IntervalQ(F(1, 4), F(1, 2))]
        got = closed_difference(a, b)
        assert got == [IntervalQ(F(0), F(1, 4)), IntervalQ(F(1, 2), F(1))]
        assert closed_difference(a, a) == []
        assert closed_difference([IntervalQ(F(1, 3), F(1, 3))], a) == []
        kept = closed_difference([IntervalQ(F(2), F(2))], a)
        assert kept == [IntervalQ(F(2), F(2))]

    @given(st.lists(intervals, max_size=6), st.lists(intervals, max_size=6))
    def test_difference_measure_identity(self, xs, ys):
        a = merge_closed(i.closure() for i in xs)
        b = merge_closed(i.closure() for i in ys)
        diff = closed_difference(a, b)
        inter = closed_intersection(a, b)
        assert closed_measure(diff) + closed_measure(inter) == closed_measure(a)


class TestOpenUnion:
    def test_touching_components_stay_separate(self):
        u = OpenIntervalUnion()
        u.insert(F(0), F(1, 3))
        u.insert(F(1, 3), F(2, 3))
        assert len(u) == 2
        assert u.measure == F(2, 3)
        comp = u.complement_within(IntervalQ(F(0), F(1)))
        assert [str(p) for p in comp] == ["[0, 0]", "[1/3, 1/3]", "[2/3, 1]"]

    def test_overlap_merges(self):
        u = OpenIntervalUnion()
        u.insert(F(0), F(1, 2))
        u.insert(F(1, 4), F(3, 4))
        assert len(u) == 1
        assert u.measure == F(3, 4)

    def test_covers(self):
        u = OpenIntervalUnion()
        u.insert(F(0), F(1, 2))
        assert u.covers(F(1, 8), F(1, 4))
        assert u.covers(F(0), F(1, 2))
        assert not u.covers(F(1, 4), F(3, 4))

    @given(st.lists(st.tuples(rationals, rationals).filter(lambda t: t[0] != t[1]), max_size=10))
    def test_measure_matches_reference(self, spans):
        u = OpenIntervalUnion()
        ivs = []
        for a, b in spans:
            lo, hi = min(a, b), max(a, b)
            u.insert(lo, hi)
            ivs.append(open_interval(lo, hi))
        assert u.measure == interval_union_measure(ivs)
