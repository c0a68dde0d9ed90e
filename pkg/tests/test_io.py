import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netdet import io
from netdet.evaluation import AveragedRoc
from netdet.exceptions import ValidationError
from netdet.graph import build_track_graph
from netdet.threat import Cue


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1e6, allow_nan=False), min_size=1, max_size=20))
def test_tracks_round_trip_bit_exact(tmp_path_factory, times):
    t = np.array(times)
    m = t.size
    tg = build_track_graph(5, np.zeros(m, int), np.ones(m, int), t, t, horizon=1e6)
    path = tmp_path_factory.mktemp("t") / "tracks.csv"
    io.write_tracks(path, tg)
    back = io.read_tracks(path, n=5, horizon=1e6)
    assert np.array_equal(back.depart, tg.depart) and np.array_equal(back.arrive, tg.arrive)
    assert np.array_equal(back.track_id, tg.track_id)


def test_scores_labels_cues_round_trip(tmp_path):
    s = np.array([0.1, 1 / 3, 2.0**-30])
    io.write_scores(tmp_path / "s.csv", s, "sttp")
    back, method = io.read_scores(tmp_path / "s.csv")
    assert np.array_equal(back, s) and method == "sttp"
    io.write_labels(tmp_path / "l.csv", [0, 1, 1])
    assert io.read_labels(tmp_path / "l.csv").tolist() == [0, 1, 1]
    cues = [Cue(2, 1 / 7, 0.5)]
    io.write_cues(tmp_path / "c.csv", cues)
    assert io.read_cues(tmp_path / "c.csv") == cues


def test_missing_header_column(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("src,to\n0,1\n")
    with pytest.raises(ValidationError, match="dst"):
        io.read_edges(p)


def test_ragged_row(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("src,dst\n0,1,2\n")
    with pytest.raises(ValidationError, match=":2"):
        io.read_edges(p)


def test_non_numeric_field(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("vertex,time,value\n0,soon,1\n")
    with pytest.raises(ValidationError, match="time"):
        io.read_cues(p)


def test_edges_keep_file_orientation(tmp_path):
    p = tmp_path / "e.csv"
    p.write_text("src,dst\n2,1\n0,1\n")
    G, pairs = io.read_edges(p)
    assert G.edges.tolist() == [[0, 1], [1, 2]]
    assert pairs.tolist() == [[2, 1], [0, 1]]


def test_roc_and_matrix_round_trip(tmp_path):
    grid = np.linspace(0, 1, 5)
    curve = AveragedRoc("sttp", grid, grid**0.5, grid * 0.1, grid * 3, np.array([0.7]))
    io.write_roc(tmp_path / "r.csv", [curve])
    back = io.read_roc(tmp_path / "r.csv")
    assert np.array_equal(back["sttp"]["pd_mean"], curve.pd_mean)
    assert open(tmp_path / "r.csv").readline().startswith("pfa,pd_mean,pd_stderr,detector")
    M = np.array([[1.0, -(2**-0.5)], [0.0, 3.0]])
    io.write_matrix(tmp_path / "m.csv", M)
    assert np.array_equal(io.read_matrix(tmp_path / "m.csv"), M)


def test_sidecar(tmp_path):
    target = tmp_path / "x.csv"
    meta = io.write_sidecar(target, 7, "model.N = 3\n", {"method": "spec"})
    items, config = io.read_sidecar(meta)
    assert items == {"seed": "7", "method": "spec"}
    assert config == "model.N = 3\n"
