"""CSV readers and writers plus provenance sidecars.

Every CSV has a mandatory header. Floats are written with 17 significant
digits so values survive a write/read round trip bit for bit. A sidecar
``<file>.meta`` next to each artifact holds the seed and the config echo
in the same ``key = value`` format as config files; nothing in it depends
on the clock.
"""

import csv

import numpy as np

from .exceptions import ValidationError
from .graph import build_graph, build_track_graph
from .threat import Cue

__all__ = [
    "format_float",
    "read_table",
    "write_table",
    "read_edges",
    "write_edges",
    "read_tracks",
    "write_tracks",
    "read_cues",
    "write_cues",
    "read_scores",
    "write_scores",
    "read_labels",
    "write_labels",
    "write_roc",
    "read_roc",
    "write_matrix",
    "read_matrix",
    "write_sidecar",
    "read_sidecar",
]

EDGE_HEADER = ("src", "dst")
TRACK_HEADER = ("track_id", "src", "dst", "depart", "arrive")
CUE_HEADER = ("vertex", "time", "value")
SCORE_HEADER = ("vertex", "score", "method")
LABEL_HEADER = ("vertex", "label")
ROC_HEADER = ("pfa", "pd_mean", "pd_stderr", "detector", "fa_count")


def format_float(x):
    return "%.17g" % x


def _cell(x):
    if isinstance(x, (float, np.floating)):
        return format_float(x)
    return str(x)


def write_table(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(x) for x in row])


def read_table(path, header, required=None):
    """Rows of ``path`` as a dict of string columns.

    The first line must be a header containing every column of
    ``required`` (default: all of ``header``); extra columns are ignored.
    """
    required = header if required is None else required
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None
    if not rows:
        raise ValidationError(f"{path}: missing header {','.join(required)}")
    head = [h.strip() for h in rows[0]]
    missing = [c for c in required if c not in head]
    if missing:
        raise ValidationError(f"{path}: header lacks column(s) {','.join(missing)}")
    cols = {c: [] for c in header if c in head}
    idx = {c: head.index(c) for c in cols}
    for lineno, row in enumerate(rows[1:], 2):
        if not row or all(not x.strip() for x in row):
            continue
        if len(row) != len(head):
            raise ValidationError(f"{path}:{lineno}: expected {len(head)} fields, got {len(row)}")
        for c, i in idx.items():
            cols[c].append(row[i].strip())
    return cols


def _numbers(path, col, values, kind):
    try:
        return np.array([kind(v) for v in values], dtype=kind)
    except ValueError as exc:
        raise ValidationError(f"{path}: column {col}: {exc}") from None


def read_edges(path, n=None):
    """Graph from an edge list; ``n`` defaults to one past the largest index.

    Also returns the orientation implied by row order (``src -> dst``).
    """
    t = read_table(path, EDGE_HEADER)
    src = _numbers(path, "src", t["src"], int)
    dst = _numbers(path, "dst", t["dst"], int)
    if n is None:
        n = int(max(src.max(initial=-1), dst.max(initial=-1))) + 1
    pairs = np.column_stack([src, dst]).astype(np.int64)
    return build_graph(n, pairs), pairs


def write_edges(path, G):
    write_table(path, EDGE_HEADER, G.edges.tolist())


def read_tracks(path, n=None, horizon=None):
    t = read_table(path, TRACK_HEADER)
    src = _numbers(path, "src", t["src"], int)
    dst = _numbers(path, "dst", t["dst"], int)
    if n is None:
        n = int(max(src.max(initial=-1), dst.max(initial=-1))) + 1
    return build_track_graph(
        n,
        src,
        dst,
        _numbers(path, "depart", t["depart"], float),
        _numbers(path, "arrive", t["arrive"], float),
        horizon=horizon,
        track_id=_numbers(path, "track_id", t["track_id"], int),
    )


def write_tracks(path, tg):
    rows = zip(
        tg.track_id.tolist(),
        tg.src.tolist(),
        tg.dst.tolist(),
        tg.depart.astype(float).tolist(),
        tg.arrive.astype(float).tolist(),
    )
    write_table(path, TRACK_HEADER, rows)


def read_cues(path):
    t = read_table(path, CUE_HEADER)
    v = _numbers(path, "vertex", t["vertex"], int)
    tm = _numbers(path, "time", t["time"], float)
    val = _numbers(path, "value", t["value"], float)
    return [Cue(int(a), float(b), float(c)) for a, b, c in zip(v, tm, val)]


def write_cues(path, cues):
    write_table(path, CUE_HEADER, [(c.vertex, float(c.time), float(c.value)) for c in cues])


def read_scores(path):
    """``(scores, method)`` with scores indexed by vertex."""
    t = read_table(path, SCORE_HEADER)
    v = _numbers(path, "vertex", t["vertex"], int)
    s = _numbers(path, "score", t["score"], float)
    if not np.array_equal(np.sort(v), np.arange(v.size)):
        raise ValidationError(f"{path}: vertices must be 0..n-1, each once")
    out = np.empty(v.size)
    out[v] = s
    methods = set(t["method"])
    return out, (methods.pop() if len(methods) == 1 else ",".join(sorted(methods)))


def write_scores(path, scores, method):
    values = np.asarray(getattr(scores, "values", scores), dtype=float)
    write_table(path, SCORE_HEADER, [(i, float(s), method) for i, s in enumerate(values.tolist())])


def read_labels(path):
    t = read_table(path, LABEL_HEADER)
    v = _numbers(path, "vertex", t["vertex"], int)
    y = _numbers(path, "label", t["label"], int)
    if not np.array_equal(np.sort(v), np.arange(v.size)):
        raise ValidationError(f"{path}: vertices must be 0..n-1, each once")
    out = np.empty(v.size, dtype=np.int64)
    out[v] = y
    return out


def write_labels(path, labels):
    write_table(path, LABEL_HEADER, list(enumerate(np.asarray(labels).astype(int).tolist())))


def write_roc(path, curves):
    """Write averaged ROC curves (one block of rows per detector)."""
    rows = []
    for c in curves:
        for p, m, e, fa in zip(c.pfa.tolist(), c.pd_mean.tolist(), c.pd_stderr.tolist(), c.fa_count_mean.tolist()):
            rows.append((float(p), float(m), float(e), c.detector, float(fa)))
    write_table(path, ROC_HEADER, rows)


def read_roc(path):
    """``{detector: {column: array}}`` from an averaged ROC CSV."""
    t = read_table(path, ROC_HEADER, required=ROC_HEADER[:4])
    out = {}
    det = np.array(t["detector"])
    for name in dict.fromkeys(t["detector"]):
        mask = det == name
        out[name] = {
            c: _numbers(path, c, np.array(t[c])[mask].tolist(), float) for c in ROC_HEADER if c in t and c != "detector"
        }
    return out


def write_matrix(path, M):
    """Dense dump with header ``row,0,1,...``."""
    A = M.toarray() if hasattr(M, "toarray") else np.asarray(M, dtype=float)
    header = ["row"] + [str(j) for j in range(A.shape[1])]
    write_table(path, header, [[i] + [float(x) for x in r] for i, r in enumerate(A.tolist())])


def read_matrix(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "row":
        raise ValidationError(f"{path}: not a matrix dump")
    return np.array([[float(x) for x in r[1:]] for r in rows[1:]], dtype=float).reshape(len(rows) - 1, len(rows[0]) - 1)


def write_sidecar(path, seed, config_echo, extra=None):
    """Write ``<path>.meta`` with the seed, any ``extra`` items and the config echo."""
    lines = [f"# provenance of {path.name if hasattr(path, 'name') else path}\n", f"seed = {seed}\n"]
    for k, v in (extra or {}).items():
        lines.append(f"{k} = {v}\n")
    lines.append("# config\n")
    lines.append(config_echo)
    meta = f"{path}.meta"
    with open(meta, "w", encoding="utf-8") as fh:
        fh.writelines(lines)
    return meta


def read_sidecar(path):
    """``(header_items, config_text)`` of a sidecar written by :func:`write_sidecar`."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    head, _, config = text.partition("# config\n")
    items = {}
    for line in head.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            k, _, v = line.partition("=")
            items[k.strip()] = v.strip()
    return items, config
