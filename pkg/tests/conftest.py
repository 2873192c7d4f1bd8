import numpy as np
import pytest

from maxentnet import solver, synth
from maxentnet.graph import WeightedGraph, degree, strength


@pytest.fixture(scope="session")
def trade_net():
    """Synthetic trade-like network shared by the slower test modules."""
    g, attrs, z = synth.generate(162, seed=7, density=0.55)
    return g, attrs


@pytest.fixture(scope="session")
def trade_fits(trade_net):
    g, _ = trade_net
    k = degree(g)
    s = strength(g)
    return {
        "er": solver.solve_er(g),
        "bcm": solver.solve_bcm(k),
        "wcm": solver.solve_wcm(s),
        "mixed": solver.solve_mixed(k, s),
    }


@pytest.fixture
def square_graph():
    """4-cycle: every node has degree 2."""
    w = np.zeros((4, 4), dtype=np.int64)
    for i, j in [(0, 1), (1, 2), (2, 3), (3, 0)]:
        w[i, j] = w[j, i] = 1
    return WeightedGraph(("a", "b", "c", "d"), w)


@pytest.fixture
def small_weighted_graph():
    w = np.array(
        [
            [0, 3, 1, 0, 0],
            [3, 0, 2, 5, 0],
            [1, 2, 0, 0, 0],
            [0, 5, 0, 0, 4],
            [0, 0, 0, 4, 0],
        ],
        dtype=np.int64,
    )
    return WeightedGraph(("v0", "v1", "v2", "v3", "v4"), w)
