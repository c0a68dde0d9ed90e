"""Spectral network detection: Fiedler cuts and modularity eigenvectors."""

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .exceptions import ConvergenceError, ValidationError
from .graph import adjacency, component_labels, degree_vector, kirchhoff
from .validation import check_graph

__all__ = [
    "EigenPair",
    "VertexScores",
    "DENSE_LIMIT",
    "smallest_eigenpairs",
    "largest_eigenpairs",
    "fiedler",
    "spectral_detect",
    "modularity_matrix",
    "modularity_detect",
    "FiedlerDetector",
    "ModularityDetector",
]

DENSE_LIMIT = 512
_SIGN_RTOL = 1e-9


@dataclass(frozen=True)
class EigenPair:
    value: float
    vector: np.ndarray = field(repr=False)


@dataclass
class VertexScores:
    """Per-vertex detection scores tagged with the method that made them."""

    values: np.ndarray
    method: str
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(self.values)):
            raise ValidationError(f"{self.method} produced non-finite scores")

    def __len__(self):
        return self.values.size


def fix_sign(v):
    """Flip ``v`` so its largest-magnitude entry is positive.

    Ties within a relative 1e-9 go to the lowest index, so the rule is
    stable under rounding noise.
    """
    v = np.asarray(v, dtype=float)
    mag = np.abs(v)
    top = mag.max(initial=0.0)
    if top == 0:
        return v
    idx = int(np.flatnonzero(mag >= top * (1 - _SIGN_RTOL))[0])
    return -v if v[idx] < 0 else v


def _norm1(M):
    if sp.issparse(M):
        return float(abs(M).sum(axis=0).max()) if M.nnz else 0.0
    if isinstance(M, spla.LinearOperator):
        return float("nan")
    return float(np.abs(M).sum(axis=0).max()) if M.size else 0.0


def _check_symmetric(M):
    if isinstance(M, spla.LinearOperator):
        return
    if M.shape[0] != M.shape[1]:
        raise ValidationError(f"matrix must be square, got {M.shape}")
    if sp.issparse(M):
        diff = (M - M.T).tocoo()
        asym = float(np.abs(diff.data).max(initial=0.0))
    else:
        asym = float(np.abs(M - M.T).max(initial=0.0))
    if asym > 1e-12 * max(1.0, _norm1(M)):
        raise ValidationError("matrix must be symmetric")


def _pairs(M, vals, vecs, tol, scale):
    out = []
    for lam, v in zip(vals, vecs.T):
        v = v / np.linalg.norm(v)
        res = np.linalg.norm(M @ v - lam * v)
        if res > tol * max(scale, 1.0):
            raise ConvergenceError(f"eigenpair {lam:.6g} misses the residual bound", res)
        out.append(EigenPair(float(lam), fix_sign(v)))
    return out


def _eigenpairs(M, k, tol, method, which):
    n = M.shape[0]
    if not 1 <= k <= n:
        raise ValidationError(f"need 1 <= k <= n={n}, got k={k}")
    if not tol > 0:
        raise ValidationError(f"tol must be positive, got {tol}")
    _check_symmetric(M)
    if method not in ("auto", "dense", "lanczos"):
        raise ValidationError(f"unknown eigensolver method {method!r}")
    dense_ok = not isinstance(M, spla.LinearOperator)
    scale = _norm1(M) if dense_ok else None
    if method == "auto":
        method = "dense" if n <= DENSE_LIMIT else "lanczos"
    if method == "lanczos" and k >= n - 1:
        method = "dense"  # ARPACK needs k < n - 1 for a meaningful Krylov space
    if method == "dense":
        if not dense_ok:
            raise ValidationError("dense eigensolve needs an explicit matrix")
        A = M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float)
        vals, vecs = np.linalg.eigh(A)
        if which == "LA":
            vals, vecs = vals[::-1], vecs[:, ::-1]
        return _pairs(A, vals[:k], vecs[:, :k], tol, scale)

    v0 = np.cos(np.arange(n) + 0.5)  # deterministic start vector
    try:
        vals, vecs = spla.eigsh(M, k=k, which=which, tol=tol * 1e-2, v0=v0, maxiter=50 * n)
    except spla.ArpackNoConvergence as exc:
        best = np.nan
        if exc.eigenvalues.size:
            v = exc.eigenvectors[:, 0]
            best = float(np.linalg.norm(M @ v - exc.eigenvalues[0] * v))
        raise ConvergenceError("Lanczos iteration did not converge", best) from None
    order = np.argsort(vals)
    if which == "LA":
        order = order[::-1]
    if scale is None:
        scale = float(np.abs(vals).max())  # lower bound on the operator norm
    return _pairs(M, vals[order], vecs[:, order], tol, scale)


def smallest_eigenpairs(M, k, tol=1e-8, method="auto"):
    """The ``k`` algebraically smallest eigenpairs of a symmetric matrix.

    Parameters
    ----------
    M : ndarray or sparse matrix
        Symmetric ``n x n`` matrix.
    k : int
        Number of pairs, ``1 <= k <= n``.
    tol : float
        Residual bound: ``||M v - value v|| <= tol * max(||M||_1, 1)``.
    method : {"auto", "dense", "lanczos"}
        ``"auto"`` uses a dense solve up to ``DENSE_LIMIT`` vertices and
        implicitly restarted Lanczos above it.

    Returns
    -------
    list of EigenPair
        Ascending by value; unit vectors with sign fixed by :func:`fix_sign`.

    Raises
    ------
    ConvergenceError
        When the iteration stalls or a pair misses the residual bound.
    """
    return _eigenpairs(M, k, tol, method, "SA")


def largest_eigenpairs(M, k, tol=1e-8, method="auto"):
    """Like :func:`smallest_eigenpairs` but for the largest values, descending."""
    return _eigenpairs(M, k, tol, method, "LA")


def fiedler(G, tol=1e-8, method="auto"):
    """Second-smallest eigenpair of the Kirchhoff matrix (the Fiedler pair)."""
    G = check_graph(G)
    if G.n < 2:
        raise ValidationError("the Fiedler pair needs at least two vertices")
    labels = component_labels(G)
    if labels.max() > 0:
        warnings.warn(
            "graph is disconnected; Fiedler value is 0 and its vector is not discriminative",
            stacklevel=2,
        )
    return smallest_eigenpairs(kirchhoff(G), 2, tol=tol, method=method)[1]


def spectral_detect(G, c=0.0, tol=1e-8, method="auto"):
    """Vertices whose Fiedler-vector entry is at least ``c`` (``c <= 0``).

    For a connected graph the selected vertices induce a connected
    subgraph. Entries within ``sqrt(eps)`` of the threshold count as
    reaching it, which only ever lowers the effective threshold.
    """
    c = float(c)
    if not c <= 0:
        raise ValidationError(f"threshold c must be nonpositive, got {c}")
    xi = fiedler(G, tol=tol, method=method).vector
    return np.flatnonzero(xi >= c - np.sqrt(np.finfo(float).eps))


def modularity_matrix(G):
    """Dense modularity matrix ``A - d d^T / V``."""
    G = check_graph(G)
    d = degree_vector(G)
    volume = d.sum()
    if volume == 0:
        raise ValidationError("modularity is undefined for a graph without edges")
    return adjacency(G).toarray() - np.outer(d, d) / volume


def _modularity_operator(G):
    A = adjacency(G)
    d = degree_vector(G)
    volume = d.sum()

    def matvec(x):
        x = np.asarray(x).ravel()
        return A @ x - d * (d @ x) / volume

    return spla.LinearOperator((G.n, G.n), matvec=matvec, rmatvec=matvec, dtype=float)


def modularity_detect(G, tol=1e-8, eigvec_index=0, magnitude=False, method="auto"):
    """Score vertices by an eigenvector of the modularity matrix.

    Parameters
    ----------
    eigvec_index : int
        0 selects the principal eigenvector; larger values select the next
        eigenvectors in descending eigenvalue order.
    magnitude : bool
        Score by absolute entries instead of the signed ones.

    Returns
    -------
    VertexScores
        ``metadata`` holds the eigenvalue and its multiplicity.
    """
    G = check_graph(G)
    if G.size == 0:
        raise ValidationError("modularity is undefined for a graph without edges")
    k = min(G.n, eigvec_index + 2)
    if eigvec_index >= G.n:
        raise ValidationError(f"eigvec_index {eigvec_index} out of range for n={G.n}")
    if method == "auto":
        method = "dense" if G.n <= DENSE_LIMIT else "lanczos"
    M = modularity_matrix(G) if method == "dense" else _modularity_operator(G)
    pairs = largest_eigenpairs(M, k, tol=tol, method=method)
    chosen = pairs[eigvec_index]
    spread = max(1.0, abs(pairs[0].value))
    multiplicity = sum(abs(p.value - chosen.value) <= 1e-8 * spread for p in pairs)
    values = np.abs(chosen.vector) if magnitude else chosen.vector
    return VertexScores(
        values,
        "modularity",
        {"eigenvalue": chosen.value, "multiplicity": int(multiplicity), "eigvec_index": eigvec_index},
    )


class FiedlerDetector(BaseEstimator):
    """Connected-subgraph detector thresholding the Fiedler vector at ``c``.

    Parameters
    ----------
    c : float, default=0.0
        Nonpositive threshold.
    tol : float, default=1e-8
        Eigensolver residual tolerance.

    Attributes
    ----------
    fiedler_value_ : float
    fiedler_vector_ : ndarray of shape (n,)
    detected_ : ndarray of int
        Selected vertex indices.
    """

    def __init__(self, c=0.0, tol=1e-8, method="auto"):
        self.c = c
        self.tol = tol
        self.method = method

    def fit(self, X, y=None):
        G = check_graph(X)
        pair = fiedler(G, tol=self.tol, method=self.method)
        self.fiedler_value_ = pair.value
        self.fiedler_vector_ = pair.vector
        self.detected_ = spectral_detect(G, self.c, tol=self.tol, method=self.method)
        self.n_vertices_ = G.n
        return self

    def predict(self, X=None):
        """Boolean membership mask over the fitted graph's vertices."""
        check_is_fitted(self)
        mask = np.zeros(self.n_vertices_, dtype=bool)
        mask[self.detected_] = True
        return mask

    def fit_predict(self, X, y=None):
        return self.fit(X).predict()


class ModularityDetector(BaseEstimator):
    """Unsupervised community detector on modularity-matrix eigenvectors.

    Attributes
    ----------
    scores_ : VertexScores
    eigenvalue_ : float
    multiplicity_ : int
    """

    def __init__(self, eigvec_index=0, magnitude=False, threshold=0.0, tol=1e-8, method="auto"):
        self.eigvec_index = eigvec_index
        self.magnitude = magnitude
        self.threshold = threshold
        self.tol = tol
        self.method = method

    def fit(self, X, y=None):
        G = check_graph(X)
        self.scores_ = modularity_detect(
            G, tol=self.tol, eigvec_index=self.eigvec_index, magnitude=self.magnitude, method=self.method
        )
        self.eigenvalue_ = self.scores_.metadata["eigenvalue"]
        self.multiplicity_ = self.scores_.metadata["multiplicity"]
        return self

    def decision_function(self, X=None):
        check_is_fitted(self)
        return self.scores_.values

    def predict(self, X=None):
        return self.decision_function() > self.threshold

    def fit_predict(self, X, y=None):
        return self.fit(X).predict()
