import warnings

import networkx as nx
import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from netdet.exceptions import ValidationError
from netdet.graph import build_graph, connected_components, kirchhoff
from netdet.spectral import (
    FiedlerDetector,
    ModularityDetector,
    fiedler,
    fix_sign,
    largest_eigenpairs,
    modularity_detect,
    modularity_matrix,
    smallest_eigenpairs,
    spectral_detect,
)

from .conftest import random_connected_graph, random_graph


def barbell():
    k4 = [(i, j) for i in range(4) for j in range(i + 1, 4)]
    return build_graph(8, k4 + [(a + 4, b + 4) for a, b in k4] + [(3, 4)])


def test_p3_fiedler_pair(p3):
    pair = fiedler(p3)
    assert pair.value == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(pair.vector, [2**-0.5, 0, -(2**-0.5)], atol=1e-12)


def test_p3_spectral_detect_threshold_zero(p3):
    assert spectral_detect(p3, 0.0).tolist() == [0, 1]


def test_positive_threshold_rejected(p3):
    with pytest.raises(ValidationError, match="nonpositive"):
        spectral_detect(p3, 0.1)


def test_disconnected_graph_warns():
    G = build_graph(4, [(0, 1), (2, 3)])
    with pytest.warns(UserWarning, match="disconnected"):
        pair = fiedler(G)
    assert abs(pair.value) < 1e-12


def test_fix_sign_prefers_first_of_tied_maxima():
    assert fix_sign([-1.0, 1.0]).tolist() == [1.0, -1.0]
    assert fix_sign([0.1, -0.9]).tolist() == [-0.1, 0.9]
    assert fix_sign([0.0, 0.0]).tolist() == [0.0, 0.0]


@pytest.mark.parametrize("method", ["dense", "lanczos"])
def test_eigenpairs_match_dense_oracle(method):
    rng = np.random.default_rng(3)
    G = random_connected_graph(rng, 40, 0.1)
    Q = kirchhoff(G)
    ev = np.linalg.eigvalsh(Q.toarray())
    small = smallest_eigenpairs(Q, 3, method=method)
    large = largest_eigenpairs(Q, 3, method=method)
    assert np.allclose([p.value for p in small], ev[:3], atol=1e-8)
    assert np.allclose([p.value for p in large], ev[::-1][:3], atol=1e-8)
    for p in small + large:
        assert np.linalg.norm(Q @ p.vector - p.value * p.vector) <= 1e-8 * max(1, abs(Q).sum(axis=0).max())
        assert np.linalg.norm(p.vector) == pytest.approx(1.0)


def test_eigenpairs_reject_asymmetric_and_bad_k():
    with pytest.raises(ValidationError, match="symmetric"):
        smallest_eigenpairs(np.array([[0.0, 1.0], [0.0, 0.0]]), 1)
    with pytest.raises(ValidationError, match="k <= n"):
        smallest_eigenpairs(sp.identity(3, format="csr"), 4)


def test_lanczos_agrees_with_dense_on_large_graph():
    rng = np.random.default_rng(4)
    G = random_connected_graph(rng, 600, 0.01)
    a = fiedler(G, method="lanczos")
    b = fiedler(G, method="dense")
    assert a.value == pytest.approx(b.value, abs=1e-7)
    assert min(np.linalg.norm(a.vector - b.vector), np.linalg.norm(a.vector + b.vector)) < 1e-5


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 25), st.floats(0.0, 0.5), st.integers(0, 2**32 - 1))
def test_fiedler_bounds_and_connected_selection(n, p, seed):
    G = random_connected_graph(np.random.default_rng(seed), n, p)
    lam = fiedler(G).value
    H = nx.Graph(G.edges.tolist())
    D = nx.diameter(H)
    dmin = min(d for _, d in H.degree())
    assert 4 / (n * D) - 1e-9 <= lam <= n / (n - 1) * dmin + 1e-9
    for c in (0.0, -0.05, -0.2):
        sel = spectral_detect(G, c)
        assert sel.size > 0
        assert nx.is_connected(H.subgraph(sel.tolist()))


def test_modularity_matrix_rows_sum_to_zero():
    M = modularity_matrix(barbell())
    assert np.allclose(M.sum(axis=1), 0, atol=1e-12)
    assert np.allclose(M, M.T)


def test_modularity_requires_edges():
    with pytest.raises(ValidationError, match="without edges"):
        modularity_matrix(build_graph(3, []))


def test_barbell_cliques_get_opposite_signs():
    s = modularity_detect(barbell()).values
    ev, vec = np.linalg.eigh(modularity_matrix(barbell()))
    oracle = fix_sign(vec[:, -1])
    assert np.allclose(s, oracle, atol=1e-8)
    assert np.all(np.sign(s[:4]) == -np.sign(s[4:]))


def test_p3_modularity_is_degenerate(p3):
    out = modularity_detect(p3)
    assert out.metadata["multiplicity"] == 2
    assert out.metadata["eigenvalue"] == pytest.approx(0.0, abs=1e-12)
    # the middle vertex is always the mean of the two ends
    assert out.values[1] == pytest.approx(0.5 * (out.values[0] + out.values[2]), abs=1e-10)


def test_magnitude_scores_are_absolute():
    a = modularity_detect(barbell()).values
    b = modularity_detect(barbell(), magnitude=True).values
    assert np.allclose(b, np.abs(a))


class TestEstimators:
    def test_fiedler_detector(self, p3):
        det = FiedlerDetector(c=0.0).fit(p3)
        assert det.predict().tolist() == [True, True, False]
        assert det.fiedler_value_ == pytest.approx(1.0)
        assert det.get_params()["c"] == 0.0

    def test_modularity_detector(self):
        det = ModularityDetector()
        mask = det.fit_predict(barbell())
        assert mask.sum() == 4
        assert det.decision_function().shape == (8,)

    def test_unfitted_raises(self):
        from sklearn.exceptions import NotFittedError

        with pytest.raises(NotFittedError):
            ModularityDetector().predict()

    def test_accepts_dense_adjacency(self, p3):
        A = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]])
        assert FiedlerDetector().fit(A).fiedler_value_ == pytest.approx(1.0)


def test_k2_modularity_has_no_signal():
    out = modularity_detect(build_graph(2, [(0, 1)]))
    assert out.metadata["eigenvalue"] == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(out.values, [2**-0.5, 2**-0.5])


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 30), st.floats(0.0, 0.3), st.integers(0, 2**32 - 1))
def test_fiedler_value_positive_iff_connected(n, p, seed):
    G = random_graph(np.random.default_rng(seed), n, p)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lam = fiedler(G).value
    assert (lam > 1e-9) == (len(connected_components(G)) == 1)


def test_sign_rule_makes_output_independent_of_solver_sign():
    rng = np.random.default_rng(6)
    G = random_connected_graph(rng, 30, 0.2)
    M = modularity_matrix(G)
    _, vec = np.linalg.eigh(M)
    v = vec[:, -1]
    assert np.array_equal(fix_sign(v), fix_sign(-v))
    assert np.allclose(modularity_detect(G).values, fix_sign(v), atol=1e-8)
