import numpy as np
import pytest

from rismaestro import build_stats, desk_scenario


@pytest.fixture(scope="session")
def desk():
    return desk_scenario()


@pytest.fixture(scope="session")
def desk_stats(desk):
    return build_stats(desk.system, desk.geometry)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
