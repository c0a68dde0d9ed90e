import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netdet.exceptions import ValidationError
from netdet.graph import (
    adjacency,
    asymmetric_laplacian,
    build_graph,
    build_track_graph,
    connected_components,
    degree,
    diameter,
    incidence,
    kirchhoff,
    normalized_laplacian,
)

from .conftest import graphs

R = 2**-0.5


def test_p3_has_order_three_and_size_two(p3):
    assert p3.n == 3 and p3.size == 2


def test_duplicates_collapse(p3):
    assert build_graph(3, [(0, 1), (0, 1), (1, 2)]) == p3
    assert build_graph(3, [(1, 0), (2, 1)]) == p3


def test_empty_edge_set_gives_isolated_vertices():
    G = build_graph(4, [])
    assert G.size == 0
    assert adjacency(G).nnz == 0
    assert len(connected_components(G)) == 4


@pytest.mark.parametrize("edges, fragment", [([(0, 3)], "(0, 3)"), ([(1, 1)], "self-loop"), ([(-1, 0)], "(-1, 0)")])
def test_bad_edges_are_rejected_by_name(edges, fragment):
    with pytest.raises(ValidationError, match=fragment.replace("(", r"\(").replace(")", r"\)")):
        build_graph(3, edges)


def test_p3_matrices(p3):
    assert np.array_equal(adjacency(p3).toarray(), [[0, 1, 0], [1, 0, 1], [0, 1, 0]])
    assert np.array_equal(degree(p3).toarray(), np.diag([1, 2, 1]))
    assert np.array_equal(kirchhoff(p3).toarray(), [[1, -1, 0], [-1, 2, -1], [0, -1, 1]])
    assert np.array_equal(incidence(p3).toarray(), [[-1, 0], [1, -1], [0, 1]])
    L = np.array([[1, -R, 0], [-R, 1, -R], [0, -R, 1]])
    assert np.allclose(normalized_laplacian(p3).toarray(), L, rtol=0, atol=1e-12)
    LL = np.array([[1, -1, 0], [-0.5, 1, -0.5], [0, -1, 1]])
    assert np.allclose(asymmetric_laplacian(p3).toarray(), LL, rtol=0, atol=1e-12)


def test_complete_graph_k3():
    K3 = build_graph(3, [(0, 1), (1, 2), (0, 2)])
    assert np.array_equal(adjacency(K3).toarray(), 1 - np.eye(3))
    assert np.array_equal(degree(K3).toarray(), 2 * np.eye(3))


def test_isolated_vertices_give_identity_rows():
    G = build_graph(4, [(0, 1)])
    for M in (normalized_laplacian(G), asymmetric_laplacian(G)):
        A = M.toarray()
        assert np.array_equal(A[2:], np.eye(4)[2:])
    assert np.array_equal(degree(G).toarray()[2:], np.zeros((2, 4)))


def test_incidence_orientation_flips_column_sign(p3):
    B = incidence(p3, [(1, 0), (1, 2)]).toarray()
    assert np.array_equal(B, [[1, 0], [-1, -1], [0, 1]])


def test_incidence_orientation_must_cover_edges(p3):
    with pytest.raises(ValidationError, match="missing edge"):
        incidence(p3, [(0, 1)])
    with pytest.raises(ValidationError, match="non-edges"):
        incidence(p3, [(0, 1), (1, 2), (0, 2)])


@settings(max_examples=60, deadline=None)
@given(graphs(), st.randoms(use_true_random=False))
def test_incidence_factorizes_kirchhoff(G, rnd):
    orient = [(a, b) if rnd.random() < 0.5 else (b, a) for a, b in G.edges.tolist()]
    B = incidence(G, orient)
    Q = kirchhoff(G)
    assert np.array_equal((B @ B.T).toarray(), Q.toarray())
    assert np.array_equal(Q.toarray(), (degree(G) - adjacency(G)).toarray())


@settings(max_examples=60, deadline=None)
@given(graphs())
def test_laplacians_annihilate_constants(G):
    one = np.ones(G.n)
    assert np.abs(kirchhoff(G) @ one).max(initial=0) == 0
    assert np.abs(asymmetric_laplacian(G) @ one)[adjacency(G).getnnz(axis=1) > 0].max(initial=0) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(graphs(max_n=10))
def test_kernel_dimension_counts_components(G):
    ev = np.linalg.eigvalsh(kirchhoff(G).toarray())
    assert int(np.sum(np.abs(ev) < 1e-9)) == len(connected_components(G))


@settings(max_examples=40, deadline=None)
@given(graphs(max_n=10))
def test_components_and_diameter_agree_with_networkx(G):
    H = nx.Graph()
    H.add_nodes_from(range(G.n))
    H.add_edges_from(G.edges.tolist())
    ours = sorted(tuple(c.tolist()) for c in connected_components(G))
    theirs = sorted(tuple(sorted(c)) for c in nx.connected_components(H))
    assert ours == theirs
    expected = nx.diameter(H) if nx.is_connected(H) else np.inf
    assert diameter(G) == expected


def test_normalized_laplacian_spectrum_lies_in_0_2():
    rng = np.random.default_rng(1)
    for _ in range(10):
        n = int(rng.integers(2, 15))
        iu = np.triu_indices(n, 1)
        G = build_graph(n, np.column_stack(iu)[rng.random(iu[0].size) < 0.4])
        ev = np.linalg.eigvalsh(normalized_laplacian(G).toarray())
        assert ev.min() > -1e-12 and ev.max() < 2 + 1e-12


class TestTrackGraph:
    def test_incident_counts_and_collapse(self):
        tg = build_track_graph(4, [0, 1, 1], [1, 0, 2], [0, 1, 2], [1, 2, 3])
        assert np.array_equal(tg.incident_counts(), [2, 3, 1, 0])
        assert tg.to_graph() == build_graph(4, [(0, 1), (1, 2)])
        assert tg.horizon == 3.0

    def test_vertex_times(self):
        tg = build_track_graph(3, [0, 1], [1, 2], [0.5, 2.0], [1.0, 3.0], horizon=5)
        assert sorted(tg.vertex_times(1).tolist()) == [1.0, 2.0]

    @pytest.mark.parametrize(
        "args, fragment",
        [
            (([0], [0], [0], [1]), "self-loop"),
            (([0], [5], [0], [1]), "outside 0..2"),
            (([0], [1], [2], [1]), "before it departs"),
            (([0], [1], [0], [9]), "horizon"),
            (([0], [1], [np.nan], [1]), "finite"),
        ],
    )
    def test_invalid_tracks(self, args, fragment):
        with pytest.raises(ValidationError, match=fragment):
            build_track_graph(3, *args, horizon=5.0)

    def test_empty_track_list_is_allowed(self):
        tg = build_track_graph(3, [], [], [], [])
        assert len(tg) == 0 and tg.to_graph().size == 0
