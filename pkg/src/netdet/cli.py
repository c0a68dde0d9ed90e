"""``netdet`` command line.

Subcommands
-----------
generate   config -> tracks.csv, labels.csv
detect     tracks (+ cues) -> scores CSV, ``--method sttp|spec``
roc        scores + labels -> ROC CSV
mc         config -> averaged ROC CSV per sweep value, summary.txt
laplacian  edge list -> matrix dump

Exit status is 0 on success, 1 for usage errors, 2 for invalid input and
3 for solver or other runtime failures; errors print one line to stderr.
"""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .blockmodel import generate
from .config import experiment_from_config, params_from_config, parse_config
from .evaluation import monte_carlo, roc
from .exceptions import NetDetError, ValidationError
from .graph import (
    adjacency,
    asymmetric_laplacian,
    degree,
    incidence,
    kirchhoff,
    normalized_laplacian,
)
from .spectral import modularity_detect, modularity_matrix
from .threat import ThreatKernelParams, TimeGrid, sttp_scores

__all__ = ["main", "run_command", "build_parser"]

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2, 3

MATRIX_KINDS = ("adjacency", "degree", "incidence", "kirchhoff", "normalized", "asymmetric", "modularity")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _load_config(args):
    return parse_config(getattr(args, "config", None))


def _sidecar(path, cfg, **extra):
    io.write_sidecar(Path(path), cfg["mc.seed"], cfg.echo(), extra)


def _seeded(cfg, seed):
    return cfg if seed is None else cfg.replace(**{"mc.seed": seed})


def cmd_generate(args):
    cfg = _seeded(_load_config(args), args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    net = generate(params_from_config(cfg), cfg["mc.seed"])
    io.write_tracks(out / "tracks.csv", net.tracks)
    io.write_labels(out / "labels.csv", net.labels)
    (out / "config.cfg").write_text(cfg.echo(), encoding="utf-8")
    for name in ("tracks.csv", "labels.csv"):
        _sidecar(out / name, cfg, n=net.params.N, horizon=io.format_float(net.params.horizon))
    print(f"{len(net.tracks)} tracks on {net.params.N} vertices, {int(net.labels.sum())} foreground -> {out}")


def cmd_detect(args):
    cfg = _load_config(args)
    horizon = args.horizon
    if horizon is None and args.config is not None:
        horizon = cfg["model.horizon"]
    n = args.n if args.n is not None else (cfg["model.N"] if args.config is not None else None)
    tg = io.read_tracks(args.tracks, n=n, horizon=horizon)
    if len(tg) == 0:
        raise ValidationError(f"empty track list in {args.tracks}")
    if args.method == "sttp":
        if args.cues is None:
            raise UsageError("detect --method sttp needs --cues")
        cues = io.read_cues(args.cues)
        grid = TimeGrid(tg.horizon, cfg["sttp.bins"])
        rate = cfg["sttp.lambda"]
        kp = ThreatKernelParams.default(tg.horizon, tg.n) if rate is None else ThreatKernelParams.uniform(rate, tg.n)
        scores = sttp_scores(
            tg,
            grid,
            kp,
            cues,
            tol=cfg["sttp.tol"],
            max_iter=cfg["sttp.max_iter"],
            aggregate=cfg["sttp.aggregate"],
            cue_mode=cfg["sttp.cue_mode"],
        )
    else:
        scores = modularity_detect(
            tg.to_graph(), eigvec_index=cfg["spec.eigvec_index"], magnitude=cfg["spec.magnitude"]
        )
    io.write_scores(args.out, scores, args.method)
    _sidecar(args.out, cfg, method=args.method, tracks=Path(args.tracks).name)
    print(f"{args.method}: scored {scores.values.size} vertices -> {args.out}")


def cmd_roc(args):
    cfg = _load_config(args)
    scores, method = io.read_scores(args.scores)
    labels = io.read_labels(args.labels)
    if labels.size != scores.size:
        raise ValidationError(f"{args.scores} has {scores.size} vertices but {args.labels} has {labels.size}")
    curve = roc(scores, labels, exclude=args.exclude)
    rows = [
        (float(p), float(d), 0.0, method, float(fa))
        for p, d, fa in zip(curve.pfa.tolist(), curve.pd.tolist(), curve.false_alarms.tolist())
    ]
    io.write_table(args.out, io.ROC_HEADER, rows)
    _sidecar(args.out, cfg, auc=io.format_float(curve.auc))
    print(f"{method}: AUC {curve.auc:.4f} over {curve.pfa.size} points -> {args.out}")


def cmd_mc(args):
    cfg = _load_config(args)
    changes = {}
    if args.trials is not None:
        changes["mc.trials"] = args.trials
    if args.workers is not None:
        changes["mc.workers"] = args.workers
    if args.seed is not None:
        changes["mc.seed"] = args.seed
    cfg = cfg.replace(**changes)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.cfg").write_text(cfg.echo(), encoding="utf-8")
    key = cfg["sweep.key"]
    summary = []
    for value, sub in cfg.sweep():
        result = monte_carlo(experiment_from_config(sub))
        name = f"roc_{key}={value}.csv" if key else "roc.csv"
        path = out / name
        io.write_roc(path, list(result.curves.values()))
        _sidecar(path, sub, trials=result.trials, aborted=result.aborted)
        for det, c in result.curves.items():
            tag = f"{key}={value} " if key else ""
            summary.append(f"{tag}{det} auc_mean = {c.auc_mean:.6f} auc_stderr = {c.auc_stderr:.6f}")
        print(f"{name}: " + ", ".join(f"{d} AUC {c.auc_mean:.3f}" for d, c in result.curves.items()))
    (out / "summary.txt").write_text("\n".join(summary) + "\n", encoding="utf-8")


def cmd_laplacian(args):
    cfg = _load_config(args)
    G, pairs = io.read_edges(args.graph, n=args.n)
    kind = args.kind
    if kind == "incidence":
        if len(np.unique(np.sort(pairs, axis=1), axis=0)) != len(pairs):
            raise ValidationError(f"{args.graph}: incidence needs each edge listed once")
        # orientation follows the file: row u,v means u -> v; columns follow G.edges
        M = incidence(G, pairs)
    else:
        M = {
            "adjacency": adjacency,
            "degree": degree,
            "kirchhoff": kirchhoff,
            "normalized": normalized_laplacian,
            "asymmetric": asymmetric_laplacian,
            "modularity": modularity_matrix,
        }[kind](G)
    if args.out is None:
        A = M.toarray() if hasattr(M, "toarray") else np.asarray(M)
        for row in A.tolist():
            print(",".join(io.format_float(x) for x in row))
        return
    io.write_matrix(args.out, M)
    _sidecar(args.out, cfg, kind=kind, graph=Path(args.graph).name)


def build_parser():
    p = _Parser(prog="netdet", description="Network detection on space-time track graphs.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="sample a covert network from the blockmodel")
    g.add_argument("--config", help="config file (defaults if omitted)")
    g.add_argument("--seed", type=int, help="network seed (default: mc.seed)")
    g.add_argument("--out", required=True, help="output directory")
    g.set_defaults(func=cmd_generate)

    d = sub.add_parser("detect", help="score vertices of a track graph")
    d.add_argument("--method", choices=("sttp", "spec"), required=True)
    d.add_argument("--tracks", required=True, help="track CSV")
    d.add_argument("--cues", help="cue CSV (sttp only)")
    d.add_argument("--config", help="config file for solver settings")
    d.add_argument("--n", type=int, help="vertex count (default: model.N with --config, else inferred)")
    d.add_argument("--horizon", type=float, help="time horizon (default: model.horizon with --config, else last arrival)")
    d.add_argument("--out", required=True, help="scores CSV")
    d.set_defaults(func=cmd_detect)

    r = sub.add_parser("roc", help="ROC of a score file against labels")
    r.add_argument("--scores", required=True)
    r.add_argument("--labels", required=True)
    r.add_argument("--exclude", type=int, nargs="*", default=[], help="vertices left out, e.g. the cue")
    r.add_argument("--config", help="config echoed into the sidecar")
    r.add_argument("--out", required=True, help="ROC CSV")
    r.set_defaults(func=cmd_roc)

    m = sub.add_parser("mc", help="Monte-Carlo ROC experiment")
    m.add_argument("--config", help="config file (defaults if omitted)")
    m.add_argument("--trials", type=int)
    m.add_argument("--workers", type=int)
    m.add_argument("--seed", type=int)
    m.add_argument("--out", default=".", help="output directory")
    m.set_defaults(func=cmd_mc)

    lap = sub.add_parser("laplacian", help="dump a graph matrix")
    lap.add_argument("--graph", required=True, help="edge-list CSV")
    lap.add_argument("--kind", choices=MATRIX_KINDS, default="kirchhoff")
    lap.add_argument("--n", type=int, help="vertex count (default: inferred)")
    lap.add_argument("--config", help="config echoed into the sidecar")
    lap.add_argument("--out", help="matrix CSV (stdout if omitted)")
    lap.set_defaults(func=cmd_laplacian)
    return p


def run_command(argv=None):
    """Run one command and return its exit status."""
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
        args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as exc:
        print(f"netdet: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"netdet: {exc.filename or ''}: {exc.strerror}", file=sys.stderr)
        return EXIT_INVALID
    except NetDetError as exc:
        print(f"netdet: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - report anything else as a runtime failure
        print(f"netdet: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def main(argv=None):
    sys.exit(run_command(argv))
