import pytest

from frogsim.distributions import FrogInit, OffspringDistribution
from frogsim.gw_trees import sample_tree

# Every test runs at a fixed seed; statistical tests use 3-sigma bands at that seed.
SEED = 1234


@pytest.fixture
def t5():
    """Every vertex has four children: the root has degree 4, every other vertex degree 5."""
    return sample_tree(OffspringDistribution.point(4), seed=SEED, depth_horizon=60)


@pytest.fixture
def binary():
    return sample_tree(OffspringDistribution.point(2), seed=SEED, depth_horizon=60)


@pytest.fixture
def no_sleepers():
    return FrogInit.point(0)


@pytest.fixture
def quarter():
    """p0 = 1/4, p2 = 3/4: extinction probability 1/3, bushes with mean offspring 1/2."""
    return OffspringDistribution.from_mapping({0: 0.25, 2: 0.75})
