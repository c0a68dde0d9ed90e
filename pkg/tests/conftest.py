import numpy as np
import pytest
from hypothesis import strategies as st

from netdet.graph import build_graph, build_track_graph


@st.composite
def graphs(draw, max_n=12, min_n=1):
    n = draw(st.integers(min_n, max_n))
    pairs = st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)).filter(lambda p: p[0] != p[1])
    edges = draw(st.lists(pairs, max_size=3 * n)) if n > 1 else []
    return build_graph(n, edges)


def random_graph(rng, n, p):
    iu = np.triu_indices(n, 1)
    keep = rng.random(iu[0].size) < p
    return build_graph(n, np.column_stack([iu[0][keep], iu[1][keep]]))


def random_connected_graph(rng, n, p):
    """Random spanning tree plus independent extra edges."""
    perm = rng.permutation(n)
    tree = [(perm[i], perm[rng.integers(i)]) for i in range(1, n)]
    extra = random_graph(rng, n, p).edges.tolist()
    return build_graph(n, tree + extra)


def random_tracks(rng, n, m, horizon=100.0):
    src = rng.integers(0, n, m)
    dst = (src + rng.integers(1, n, m)) % n
    a = rng.uniform(0, horizon, m)
    b = np.minimum(horizon, a + rng.exponential(horizon / 20, m))
    return build_track_graph(n, src, dst, a, b, horizon=horizon)


@pytest.fixture
def p3():
    return build_graph(3, [(0, 1), (1, 2)])
