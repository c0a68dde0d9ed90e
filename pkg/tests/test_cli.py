import subprocess
import sys
from importlib import resources

import numpy as np
import pytest

from netdet import io
from netdet.cli import run_command
from netdet.config import parse_config_text
from netdet.threat import Cue


@pytest.fixture
def p3_file(tmp_path):
    p = tmp_path / "p3.csv"
    p.write_text("src,dst\n0,1\n1,2\n")
    return p


@pytest.fixture
def small_cfg(tmp_path):
    p = tmp_path / "small.cfg"
    p.write_text("model.N = 64\nmodel.K = 4\nmodel.L = 5\nmc.trials = 3\nsttp.bins = 16\n")
    return p


def test_laplacian_kirchhoff(p3_file, tmp_path):
    out = tmp_path / "q.csv"
    assert run_command(["laplacian", "--graph", str(p3_file), "--kind", "kirchhoff", "--out", str(out)]) == 0
    assert io.read_matrix(out).tolist() == [[1, -1, 0], [-1, 2, -1], [0, -1, 1]]
    assert (tmp_path / "q.csv.meta").exists()


@pytest.mark.parametrize(
    "kind, expected",
    [
        ("adjacency", [[0, 1, 0], [1, 0, 1], [0, 1, 0]]),
        ("degree", [[1, 0, 0], [0, 2, 0], [0, 0, 1]]),
        ("incidence", [[-1, 0], [1, -1], [0, 1]]),
        ("asymmetric", [[1, -1, 0], [-0.5, 1, -0.5], [0, -1, 1]]),
    ],
)
def test_laplacian_kinds(p3_file, tmp_path, kind, expected):
    out = tmp_path / "m.csv"
    assert run_command(["laplacian", "--graph", str(p3_file), "--kind", kind, "--out", str(out)]) == 0
    assert np.allclose(io.read_matrix(out), expected, atol=1e-12)


def test_laplacian_to_stdout(p3_file, capsys):
    assert run_command(["laplacian", "--graph", str(p3_file)]) == 0
    assert capsys.readouterr().out.splitlines() == ["1,-1,0", "-1,2,-1", "0,-1,1"]


def test_exit_codes(tmp_path, capsys):
    assert run_command(["detect", "--method", "nope", "--tracks", "x", "--out", "y"]) == 1
    assert run_command([]) == 1
    assert run_command(["laplacian", "--graph", str(tmp_path / "missing.csv")]) == 2
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 3


def test_detect_on_empty_tracks(tmp_path, capsys):
    t = tmp_path / "t.csv"
    t.write_text("track_id,src,dst,depart,arrive\n")
    code = run_command(["detect", "--method", "spec", "--tracks", str(t), "--out", str(tmp_path / "s.csv")])
    assert code != 0
    err = capsys.readouterr().err
    assert "empty track list" in err and err.count("\n") == 1


def test_generate_detect_roc_pipeline(tmp_path, small_cfg):
    gen = tmp_path / "gen"
    assert run_command(["generate", "--config", str(small_cfg), "--seed", "3", "--out", str(gen)]) == 0
    labels = io.read_labels(gen / "labels.csv")
    tg = io.read_tracks(gen / "tracks.csv", n=64, horizon=86400.0)
    v = int(np.flatnonzero((labels == 1) & (tg.incident_counts() > 0))[0])
    io.write_cues(tmp_path / "cue.csv", [Cue(v, float(tg.vertex_times(v)[0]), 1.0)])
    for method in ("sttp", "spec"):
        scores = tmp_path / f"{method}.csv"
        argv = ["detect", "--method", method, "--tracks", str(gen / "tracks.csv"), "--config", str(small_cfg), "--out", str(scores)]
        if method == "sttp":
            argv += ["--cues", str(tmp_path / "cue.csv")]
        assert run_command(argv) == 0
        s, m = io.read_scores(scores)
        assert s.size == 64 and m == method
        rocf = tmp_path / f"roc_{method}.csv"
        assert run_command(["roc", "--scores", str(scores), "--labels", str(gen / "labels.csv"), "--exclude", str(v), "--out", str(rocf)]) == 0
        assert open(rocf).readline().strip() == "pfa,pd_mean,pd_stderr,detector,fa_count"
    items, echo = io.read_sidecar(gen / "tracks.csv.meta")
    assert items["seed"] == "3"
    assert parse_config_text(echo, {})["model.N"] == 64


def test_sttp_needs_cues(tmp_path):
    t = tmp_path / "t.csv"
    t.write_text("track_id,src,dst,depart,arrive\n0,0,1,0,1\n")
    assert run_command(["detect", "--method", "sttp", "--tracks", str(t), "--out", str(tmp_path / "s.csv")]) == 1


def test_reruns_are_byte_identical(tmp_path, small_cfg):
    for d in ("a", "b"):
        assert run_command(["generate", "--config", str(small_cfg), "--out", str(tmp_path / d)]) == 0
        assert run_command(["mc", "--config", str(small_cfg), "--out", str(tmp_path / d)]) == 0
    for name in ("tracks.csv", "labels.csv", "tracks.csv.meta", "roc.csv", "roc.csv.meta", "summary.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_mc_fig4_writes_one_csv_per_sweep_value(tmp_path):
    cfg = resources.files("netdet") / "configs" / "fig4.cfg"
    out = tmp_path / "mc"
    argv = ["mc", "--config", str(cfg), "--trials", "2", "--out", str(out)]
    assert run_command(argv) == 0
    files = sorted(p.name for p in out.glob("roc_*.csv"))
    assert files == ["roc_model.psi_fg=1.5.csv", "roc_model.psi_fg=20.csv"]
    for f in files:
        assert set(io.read_roc(out / f)) == {"sttp", "spec"}


def test_seed_env_reaches_mc(tmp_path, small_cfg, monkeypatch):
    monkeypatch.setenv("NETDET_SEED", "99")
    assert run_command(["mc", "--config", str(small_cfg), "--out", str(tmp_path)]) == 0
    items, _ = io.read_sidecar(tmp_path / "roc.csv.meta")
    assert items["seed"] == "99"


def test_module_entry_point(p3_file):
    out = subprocess.run(
        [sys.executable, "-m", "netdet", "laplacian", "--graph", str(p3_file)], capture_output=True, text=True
    )
    assert out.returncode == 0 and out.stdout.startswith("1,-1,0")
