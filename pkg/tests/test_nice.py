from __future__ import annotations

from fractions import Fraction as F

import pytest

from affinduce.exact import open_interval
from affinduce.nice import ConstructionFailure, NiceNbhd, build_nice, certify_nice
from affinduce.pamap import MapSpecError
from affinduce.zoo import full_tent, skew_tent


class TestCertify:
    def test_certified_boundary_cycle(self, tent):
        out = certify_nice(tent, {F(1, 2): open_interval(F(2, 5), F(3, 5))})
        assert out.status == "certified"
        rec = out.certificates[F(2, 5)]
        assert set(rec.cycle()) == {F(2, 5), F(4, 5)}
        rec = out.certificates[F(3, 5)]
        assert (rec.preperiod, rec.period) == (1, 2)

    def test_counterexample_first_step(self, tent):
        out = certify_nice(tent, {F(1, 2): open_interval(F(1, 4), F(3, 4))})
        assert out.status == "counterexample"
        assert out.witness == (F(1, 4), 1, F(1, 2))

    def test_certified_narrow(self, tent):
        out = certify_nice(tent, {F(1, 2): open_interval(F(9, 20), F(11, 20))})
        assert out.status == "certified"

    def test_unknown_until_orbit_closes(self, tent):
        # boundary orbits with period 50 cannot close within a cap of 40
        components = {F(1, 2): open_interval(F(499, 1000), F(501, 1000))}
        assert certify_nice(tent, components, cap=40).status == "unknown"
        assert certify_nice(tent, components, cap=500).status == "certified"

    def test_precondition_violations(self, tent):
        with pytest.raises(MapSpecError):
            certify_nice(tent, {F(1, 2): open_interval(F(3, 5), F(7, 10))})  # misses c
        with pytest.raises(MapSpecError):
            certify_nice(tent, {})  # wrong component set


class TestBuild:
    def test_mesh_respected(self, tent):
        nbhd = build_nice(tent, F(1, 4), cap=6)
        assert nbhd.mesh <= F(1, 4)
        iv = nbhd.components[F(1, 2)]
        assert iv.lo < F(1, 2) < iv.hi

    def test_failure_without_preimage_search(self, tent):
        with pytest.raises(ConstructionFailure):
            build_nice(tent, F(1, 5), cap=0)

    def test_slack_mesh_returns_quickly(self, tent):
        nbhd = build_nice(tent, F(2), cap=3)
        assert set(nbhd.components) == {F(1, 2)}

    def test_built_neighborhoods_recertify(self, zoo_maps, zoo_nbhds):
        for name, nbhd in zoo_nbhds.items():
            out = certify_nice(zoo_maps[name], nbhd.components)
            assert out.status == "certified", name

    def test_certificates_round_trip(self, zoo_nbhds):
        for nbhd in zoo_nbhds.values():
            again = NiceNbhd.from_json(nbhd.to_json())
            assert again.components == nbhd.components
            assert set(again.certificates) == set(nbhd.certificates)

    def test_shrinking_spot_check(self, tent):
        # a certified neighborhood stays certified after shrinking to a
        # sub-interval whose boundary orbits also avoid it
        big = certify_nice(tent, {F(1, 2): open_interval(F(2, 5), F(3, 5))})
        small = certify_nice(tent, {F(1, 2): open_interval(F(9, 20), F(11, 20))})
        assert big.status == "certified" and small.status == "certified"

    def test_components_carry_only_their_critical_point(self, zoo_maps, zoo_nbhds):
        for name, nbhd in zoo_nbhds.items():
            m = zoo_maps[name]
            for c, iv in nbhd.components.items():
                inside = [q for q in m.breakpoints if iv.lo < q < iv.hi]
                assert inside == [c], name
