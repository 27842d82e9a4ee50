from __future__ import annotations

import sys
from fractions import Fraction
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from affinduce.exact import open_interval
from affinduce.nice import NiceNbhd, build_nice, certify_nice
from affinduce.zoo import bimodal_cubiclike, full_tent, skew_tent, zoo


@pytest.fixture(scope="session")
def tent():
    return full_tent()


@pytest.fixture(scope="session")
def tent_nbhd(tent):
    """The hand-checked neighborhood (2/5, 3/5) with its certificates."""
    components = {Fraction(1, 2): open_interval(Fraction(2, 5), Fraction(3, 5))}
    outcome = certify_nice(tent, components)
    assert outcome.status == "certified"
    return NiceNbhd(components, outcome.certificates)


@pytest.fixture(scope="session")
def zoo_maps():
    return zoo()


@pytest.fixture(scope="session")
def zoo_nbhds(zoo_maps):
    return {name: build_nice(m, Fraction(1, 4), cap=6) for name, m in zoo_maps.items()}
