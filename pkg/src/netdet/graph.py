"""Static graphs, timestamped track graphs and their algebraic matrices.

Vertices are integers ``0..n-1``. Every matrix is returned as a
``scipy.sparse.csr_matrix``; call ``.toarray()`` for the dense form.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

from .exceptions import ValidationError

__all__ = [
    "Graph",
    "TrackGraph",
    "build_graph",
    "build_track_graph",
    "adjacency",
    "degree",
    "degree_vector",
    "incidence",
    "kirchhoff",
    "normalized_laplacian",
    "asymmetric_laplacian",
    "connected_components",
    "component_labels",
    "diameter",
]


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected simple graph.

    Attributes
    ----------
    n : int
        Number of vertices.
    edges : ndarray of shape (m, 2)
        Unique unordered edges stored as ``(i, j)`` with ``i < j``,
        sorted lexicographically.
    """

    n: int
    edges: np.ndarray = field(repr=False)

    @property
    def size(self):
        return int(self.edges.shape[0])

    def __repr__(self):
        return f"Graph(n={self.n}, size={self.size})"

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.edges, other.edges)

    def __hash__(self):
        return hash((self.n, self.edges.tobytes()))


def build_graph(n, edges):
    """Build a simple graph from an edge list.

    Duplicate edges (in either direction) collapse to one.

    Raises
    ------
    ValidationError
        On a self-loop or a vertex index outside ``0..n-1``; the message
        names the offending edge.
    """
    n = int(n)
    if n < 0:
        raise ValidationError(f"vertex count must be nonnegative, got {n}")
    e = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges)
    if e.size == 0:
        return Graph(n, _frozen(np.zeros((0, 2), dtype=np.int64)))
    if e.ndim != 2 or e.shape[1] != 2:
        raise ValidationError("edges must be a sequence of (u, v) pairs")
    if not np.issubdtype(e.dtype, np.integer):
        if not np.all(np.equal(np.mod(e, 1), 0)):
            raise ValidationError("edge endpoints must be integers")
    e = e.astype(np.int64)
    bad = np.flatnonzero((e < 0).any(axis=1) | (e >= n).any(axis=1))
    if bad.size:
        u, v = e[bad[0]]
        raise ValidationError(f"edge ({u}, {v}) has a vertex outside 0..{n - 1}")
    loops = np.flatnonzero(e[:, 0] == e[:, 1])
    if loops.size:
        u, v = e[loops[0]]
        raise ValidationError(f"edge ({u}, {v}) is a self-loop")
    e = np.sort(e, axis=1)
    e = np.unique(e, axis=0)
    return Graph(n, _frozen(e))


def adjacency(G):
    """Symmetric {0,1} adjacency matrix with zero diagonal."""
    i, j = G.edges[:, 0], G.edges[:, 1]
    rows = np.concatenate([i, j])
    cols = np.concatenate([j, i])
    data = np.ones(rows.size)
    return sp.csr_matrix((data, (rows, cols)), shape=(G.n, G.n))


def degree_vector(G):
    return np.bincount(G.edges.ravel(), minlength=G.n).astype(float)


def degree(G):
    """Diagonal degree matrix ``Diag(A 1)``."""
    return sp.diags(degree_vector(G), format="csr")


def incidence(G, orientation=None):
    """Signed ``n x m`` incidence matrix of an oriented graph.

    Column ``e`` follows the order of ``G.edges`` and holds -1 at the
    initial vertex and +1 at the terminal vertex.

    Parameters
    ----------
    orientation : sequence of (initial, terminal) pairs, optional
        One ordered pair per edge, in any order. Defaults to orienting
        every edge from its lower to its higher endpoint.
    """
    m = G.size
    if orientation is None:
        initial, terminal = G.edges[:, 0], G.edges[:, 1]
    else:
        o = np.asarray(list(orientation), dtype=np.int64).reshape(-1, 2)
        lookup = {}
        for a, b in o:
            key = (min(a, b), max(a, b))
            lookup[key] = (a, b)
        initial = np.empty(m, dtype=np.int64)
        terminal = np.empty(m, dtype=np.int64)
        for k, (a, b) in enumerate(G.edges):
            try:
                initial[k], terminal[k] = lookup[(int(a), int(b))]
            except KeyError:
                raise ValidationError(f"orientation is missing edge ({a}, {b})") from None
        if len(lookup) != m:
            extra = set(lookup) - {(int(a), int(b)) for a, b in G.edges}
            raise ValidationError(f"orientation names non-edges {sorted(extra)}")
    cols = np.arange(m)
    rows = np.concatenate([initial, terminal])
    data = np.concatenate([-np.ones(m), np.ones(m)])
    return sp.csr_matrix((data, (rows, np.concatenate([cols, cols]))), shape=(G.n, m))


def kirchhoff(G):
    """Unnormalized Laplacian ``Q = D - A``."""
    return (degree(G) - adjacency(G)).tocsr()


def _inverse_power(d, p):
    out = np.zeros_like(d)
    nz = d > 0
    out[nz] = d[nz] ** p
    return out


def normalized_laplacian(G):
    """Symmetric normalized Laplacian ``I - D^-1/2 A D^-1/2``.

    Isolated vertices get an identity row and column.
    """
    s = sp.diags(_inverse_power(degree_vector(G), -0.5))
    return (sp.identity(G.n, format="csr") - s @ adjacency(G) @ s).tocsr()


def asymmetric_laplacian(G):
    """Random-walk Laplacian ``I - D^-1 A``; isolated vertices get identity rows."""
    s = sp.diags(_inverse_power(degree_vector(G), -1.0))
    return (sp.identity(G.n, format="csr") - s @ adjacency(G)).tocsr()


def component_labels(G):
    """Component index for each vertex (components numbered by first vertex)."""
    _, labels = csgraph.connected_components(adjacency(G), directed=False)
    return labels


def connected_components(G):
    """Partition of the vertices into connected components.

    Returns a list of sorted vertex arrays ordered by smallest member.
    """
    labels = component_labels(G)
    order = np.argsort(labels, kind="stable")
    splits = np.flatnonzero(np.diff(labels[order])) + 1
    return [np.sort(c) for c in np.split(order, splits)] if G.n else []


def diameter(G):
    """Longest shortest-path length; ``inf`` for a disconnected graph."""
    if G.n <= 1:
        return 0.0
    dist = csgraph.shortest_path(adjacency(G), unweighted=True, directed=False)
    return float(dist.max())


@dataclass(frozen=True, eq=False)
class TrackGraph:
    """Directed multigraph of timestamped tracks over a horizon ``[0, T]``.

    Track ``k`` leaves ``src[k]`` at ``depart[k]`` and reaches ``dst[k]``
    at ``arrive[k]`` (seconds).
    """

    n: int
    horizon: float
    track_id: np.ndarray = field(repr=False)
    src: np.ndarray = field(repr=False)
    dst: np.ndarray = field(repr=False)
    depart: np.ndarray = field(repr=False)
    arrive: np.ndarray = field(repr=False)

    def __len__(self):
        return int(self.src.size)

    def __repr__(self):
        return f"TrackGraph(n={self.n}, tracks={len(self)}, horizon={self.horizon})"

    def incident_counts(self):
        """Number of tracks touching each vertex."""
        return np.bincount(np.concatenate([self.src, self.dst]), minlength=self.n)

    def vertex_times(self, v):
        """Timestamps of vertex ``v`` on its incident tracks (departures and arrivals)."""
        return np.concatenate([self.depart[self.src == v], self.arrive[self.dst == v]])

    def to_graph(self):
        """Collapse to the static simple graph with an edge per track-connected pair."""
        return build_graph(self.n, np.column_stack([self.src, self.dst]))


def build_track_graph(n, src, dst, depart, arrive, horizon=None, track_id=None):
    """Validate and freeze raw track columns into a :class:`TrackGraph`.

    ``horizon`` defaults to the latest arrival time.
    """
    src = np.asarray(src, dtype=np.int64).ravel()
    dst = np.asarray(dst, dtype=np.int64).ravel()
    depart = np.asarray(depart, dtype=float).ravel()
    arrive = np.asarray(arrive, dtype=float).ravel()
    if not (src.size == dst.size == depart.size == arrive.size):
        raise ValidationError("track columns have different lengths")
    if track_id is None:
        track_id = np.arange(src.size)
    track_id = np.asarray(track_id, dtype=np.int64).ravel()
    if track_id.size != src.size:
        raise ValidationError("track_id length does not match the track columns")
    n = int(n)
    if horizon is None:
        horizon = float(arrive.max()) if arrive.size else 1.0
    horizon = float(horizon)
    if not horizon > 0:
        raise ValidationError(f"horizon must be positive, got {horizon}")
    bad = np.flatnonzero((src < 0) | (src >= n) | (dst < 0) | (dst >= n))
    if bad.size:
        k = bad[0]
        raise ValidationError(
            f"track {track_id[k]} ({src[k]}->{dst[k]}) has a vertex outside 0..{n - 1}"
        )
    bad = np.flatnonzero(src == dst)
    if bad.size:
        raise ValidationError(f"track {track_id[bad[0]]} is a self-loop at vertex {src[bad[0]]}")
    if not (np.all(np.isfinite(depart)) and np.all(np.isfinite(arrive))):
        raise ValidationError("track times must be finite")
    bad = np.flatnonzero(depart > arrive)
    if bad.size:
        raise ValidationError(f"track {track_id[bad[0]]} arrives before it departs")
    bad = np.flatnonzero((depart < 0) | (arrive > horizon))
    if bad.size:
        raise ValidationError(f"track {track_id[bad[0]]} lies outside the horizon [0, {horizon}]")
    return TrackGraph(
        n, horizon, _frozen(track_id), _frozen(src), _frozen(dst), _frozen(depart), _frozen(arrive)
    )
