"""Input coercion helpers used by the estimators and public functions."""

from collections.abc import Mapping

import numpy as np
import scipy.sparse as sp

from .exceptions import ValidationError
from .graph import Graph, TrackGraph, build_graph, build_track_graph

__all__ = [
    "check_graph",
    "check_track_graph",
    "check_scores",
    "check_labels",
    "check_positive",
    "check_probability_vector",
]


def check_graph(X, n=None):
    """Coerce ``X`` into a :class:`Graph`.

    Accepts a ``Graph``, a ``TrackGraph`` (collapsed to its simple graph),
    a square symmetric adjacency matrix (dense or sparse), or an ``(m, 2)``
    edge array together with ``n``.
    """
    if isinstance(X, Graph):
        return X
    if isinstance(X, TrackGraph):
        return X.to_graph()
    if sp.issparse(X):
        X = X.tocoo()
        if X.shape[0] != X.shape[1]:
            raise ValidationError(f"adjacency matrix must be square, got {X.shape}")
        if (abs(X - X.T) > 0).nnz:
            raise ValidationError("adjacency matrix must be symmetric")
        mask = (X.row < X.col) & (X.data != 0)
        return build_graph(X.shape[0], np.column_stack([X.row[mask], X.col[mask]]))
    arr = np.asarray(X)
    if n is None:
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValidationError("pass n together with an edge list, or a square adjacency matrix")
        if not np.array_equal(arr, arr.T):
            raise ValidationError("adjacency matrix must be symmetric")
        if np.any(np.diag(arr) != 0):
            raise ValidationError("adjacency matrix has self-loops")
        i, j = np.nonzero(np.triu(arr, 1))
        return build_graph(arr.shape[0], np.column_stack([i, j]))
    return build_graph(n, arr.reshape(-1, 2) if arr.size else [])


def check_track_graph(X, n=None, horizon=None):
    """Coerce ``X`` into a :class:`TrackGraph`.

    ``X`` is either a ``TrackGraph`` or a mapping with columns
    ``src, dst, depart, arrive`` (and optionally ``track_id``).
    """
    if isinstance(X, TrackGraph):
        return X
    if isinstance(X, Mapping) or hasattr(X, "columns"):
        try:
            src, dst = np.asarray(X["src"]), np.asarray(X["dst"])
            depart, arrive = X["depart"], X["arrive"]
        except KeyError as exc:
            raise ValidationError(f"track table lacks column {exc}") from None
        tid = X["track_id"] if "track_id" in X else None
        if n is None:
            n = int(max(src.max(initial=-1), dst.max(initial=-1))) + 1
        return build_track_graph(n, src, dst, depart, arrive, horizon=horizon, track_id=tid)
    raise ValidationError(f"cannot interpret {type(X).__name__} as a track graph")


def check_scores(scores, n=None):
    s = np.asarray(getattr(scores, "values", scores), dtype=float).ravel()
    if n is not None and s.size != n:
        raise ValidationError(f"expected {n} scores, got {s.size}")
    if not np.all(np.isfinite(s)):
        raise ValidationError("scores must be finite")
    return s


def check_labels(labels, n=None):
    y = np.asarray(labels).ravel()
    if n is not None and y.size != n:
        raise ValidationError(f"expected {n} labels, got {y.size}")
    if not np.all(np.isin(y, (0, 1))):
        raise ValidationError("labels must be 0 or 1")
    return y.astype(np.int8)


def check_positive(value, name):
    value = float(value)
    if not (np.isfinite(value) and value > 0):
        raise ValidationError(f"{name} must be positive and finite, got {value}")
    return value


def check_probability_vector(p, name, atol=1e-9):
    p = np.asarray(p, dtype=float).ravel()
    if p.size == 0 or np.any(p < 0) or not np.all(np.isfinite(p)):
        raise ValidationError(f"{name} must be a nonempty nonnegative vector")
    if abs(p.sum() - 1.0) > atol:
        raise ValidationError(f"{name} must sum to 1, sums to {p.sum():.12g}")
    return p
