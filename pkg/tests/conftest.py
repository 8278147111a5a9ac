import sys
from pathlib import Path

import numpy as np
import pytest

# make the sibling oracles module importable from every test file
sys.path.insert(0, str(Path(__file__).resolve().parent))

from topowalk.lattice import CoinProfile, LatticeSpec, WalkSpec


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def make_spec(protocol="split_step", length=16, theta1=np.pi / 2, theta2=np.pi / 4,
              boundary="periodic", extent2=None):
    """Small helper so tests stay terse."""
    if protocol == "split_step_2d":
        lat = LatticeSpec(2, extent2 or (length, length), boundary)
    else:
        lat = LatticeSpec(1, length, boundary)
    coins = CoinProfile.build(lat, theta1, theta2)
    return WalkSpec(lat, coins, protocol)


@pytest.fixture
def spec_factory():
    return make_spec


def random_walk_spec(rng, periodic_only=False, max_sites_1d=64, max_axis_2d=8):
    """Random spec generator shared by unit and acceptance tests."""
    protocol = rng.choice(["simple", "split_step", "split_step_2d"])
    boundary = "periodic" if periodic_only else rng.choice(["periodic", "open"])
    if protocol == "split_step_2d":
        lx = int(rng.integers(2, max_axis_2d + 1))
        ly = int(rng.integers(2, max_axis_2d + 1))
        lat = LatticeSpec(2, (lx, ly), boundary)
    else:
        lat = LatticeSpec(1, int(rng.integers(3, max_sites_1d + 1)), boundary)
    theta1 = rng.uniform(-np.pi, np.pi, size=lat.shape)
    theta2 = rng.uniform(-np.pi, np.pi, size=lat.shape)
    coins = CoinProfile.build(lat, theta1, theta2)
    return WalkSpec(lat, coins, protocol)


@pytest.fixture
def random_spec():
    return random_walk_spec
