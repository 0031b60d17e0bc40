import numpy as np
import pytest

from wfscope import Grid, SampledSignal, WindowSpec
from wfscope.corpus import get_member, sample


@pytest.fixture(scope="session")
def small_grid():
    return Grid.centered(1, 2**12, 2.0**-7)


@pytest.fixture(scope="session")
def corpus_signal():
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = sample(get_member(name))
        return cache[name]
    return get


def random_signal(grid, seed, support=4.0):
    """Seeded complex noise times a bump, so it stays away from the grid edge."""
    rng = np.random.default_rng(seed)
    env = WindowSpec("bump", support).evaluate(grid.axis(0))
    z = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)
    return SampledSignal(grid, z * env, f"noise{seed}")
