"""Space-time threat propagation (STTP).

A track graph is lifted to a space-time graph whose vertices are
(vertex, time-bin) pairs. Cued vertices form the boundary; the threat on
every other space-time vertex is the harmonic extension of the cue
values under the random-walk Laplacian ``I - D^-1 A``.

Space-time vertex ``(v, k)`` has flat index ``v * n_bins + k``.
"""

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse import csgraph
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .exceptions import ConvergenceError, ValidationError
from .spectral import VertexScores
from .validation import check_positive, check_scores, check_track_graph

__all__ = [
    "TimeGrid",
    "Cue",
    "ThreatKernelParams",
    "SpaceTimeSystem",
    "ThreatVector",
    "threat_kernel",
    "build_spacetime_system",
    "boundary_values_from_cues",
    "harmonic_solve",
    "sttp_scores",
    "llr_detect",
    "ThreatPropagationDetector",
]

logger = logging.getLogger(__name__)

DEFAULT_BINS = 64


@dataclass(frozen=True)
class TimeGrid:
    """Uniform partition of ``[0, horizon]`` into ``n_bins`` bins."""

    horizon: float
    n_bins: int = DEFAULT_BINS

    def __post_init__(self):
        check_positive(self.horizon, "horizon")
        if int(self.n_bins) != self.n_bins or self.n_bins < 1:
            raise ValidationError(f"n_bins must be a positive integer, got {self.n_bins}")

    @property
    def width(self):
        return self.horizon / self.n_bins

    @property
    def centers(self):
        return (np.arange(self.n_bins) + 0.5) * self.width

    def bin_of(self, t):
        """Bin index of time(s) ``t``; the right edge belongs to the last bin."""
        k = np.floor(np.asarray(t, dtype=float) / self.width).astype(np.int64)
        return np.clip(k, 0, self.n_bins - 1)


@dataclass(frozen=True)
class Cue:
    """Observed threat ``value`` at ``vertex`` at ``time`` seconds."""

    vertex: int
    time: float
    value: float = 1.0


@dataclass(frozen=True, eq=False)
class ThreatKernelParams:
    """Per-vertex Poisson rates (1/s) of the threat jump process."""

    rates: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rates, dtype=float).ravel()
        if r.size == 0 or not np.all(np.isfinite(r)) or np.any(r <= 0):
            raise ValidationError("threat rates must be positive and finite")
        r.setflags(write=False)
        object.__setattr__(self, "rates", r)

    @classmethod
    def uniform(cls, rate, n):
        return cls(np.full(int(n), check_positive(rate, "rate")))

    @classmethod
    def default(cls, horizon, n):
        """Uniform rate whose e-folding time is a quarter of the horizon."""
        return cls.uniform(4.0 / check_positive(horizon, "horizon"), n)


def threat_kernel(rate, t):
    """Probability that an observed threat persists ``|t|`` seconds: ``exp(-rate |t|)``."""
    rate = np.asarray(rate, dtype=float)
    if np.any(rate <= 0):
        raise ValidationError("rate must be positive")
    return np.exp(-rate * np.abs(t))


@dataclass(frozen=True, eq=False)
class SpaceTimeSystem:
    """Discretized space-time adjacency with its boundary/interior split.

    Attributes
    ----------
    adjacency : csr_matrix
        Nonnegative ``(n * n_bins)`` square matrix; row block ``v``,
        column block ``u`` holds the summed track kernels from ``u`` to ``v``.
    weights : ndarray of shape (n,)
        Incident-track count per vertex.
    boundary, interior : ndarray of int
        Flat space-time indices; the boundary is every bin of every cued vertex.
    """

    n: int
    grid: TimeGrid
    adjacency: sp.csr_matrix = field(repr=False)
    weights: np.ndarray = field(repr=False)
    boundary: np.ndarray = field(repr=False)
    interior: np.ndarray = field(repr=False)
    cued_vertices: np.ndarray = field(repr=False)

    @property
    def size(self):
        return self.n * self.grid.n_bins

    def normalizers(self):
        """Row divisor per space-time vertex, ``max(w(v), row sum)``.

        With unit-bounded kernels ``w(v)`` already dominates the row sum;
        the max guards the sub-stochastic property against rounding.
        """
        rowsum = np.asarray(self.adjacency.sum(axis=1)).ravel()
        w = np.repeat(self.weights.astype(float), self.grid.n_bins)
        return np.maximum(w, rowsum)

    def transition(self):
        """Row-substochastic propagation operator ``D^-1 A``."""
        norm = self.normalizers()
        inv = np.zeros_like(norm)
        inv[norm > 0] = 1.0 / norm[norm > 0]
        P = (sp.diags(inv) @ self.adjacency).tocsr()
        rowsum = np.asarray(P.sum(axis=1)).ravel()
        assert rowsum.max(initial=0.0) <= 1.0 + 1e-12, "D^-1 A is not row-substochastic"
        return P

    def laplacian(self):
        """Space-time random-walk Laplacian ``I - D^-1 A``."""
        return (sp.identity(self.size, format="csr") - self.transition()).tocsr()


@dataclass
class ThreatVector:
    """Harmonic threat on the space-time grid.

    Attributes
    ----------
    theta : ndarray of shape (n, n_bins)
        Threat probability per vertex and bin.
    residual : float
        Final ``||L_ii theta_i + L_ib theta_b||``.
    clamped : float
        Largest amount any entry moved when clamped into ``[0, 1]``.
    """

    theta: np.ndarray
    residual: float = 0.0
    clamped: float = 0.0
    iterations: int = 0

    def aggregate(self, how="max"):
        if how == "max":
            return self.theta.max(axis=1)
        if how == "mean":
            return self.theta.mean(axis=1)
        raise ValidationError(f"unknown aggregate {how!r}; use 'max' or 'mean'")


def _check_cues(cues, n, horizon):
    out = []
    for c in cues:
        if not isinstance(c, Cue):
            c = Cue(*c)
        v, t, val = int(c.vertex), float(c.time), float(c.value)
        if not 0 <= v < n:
            raise ValidationError(f"cue on unknown vertex {v}")
        if not 0 <= t <= horizon:
            raise ValidationError(f"cue time {t} outside [0, {horizon}]")
        if not 0 <= val <= 1:
            raise ValidationError(f"cue value {val} outside [0, 1]")
        out.append(Cue(v, t, val))
    return out


def build_spacetime_system(tg, grid, kp, cues):
    """Assemble the space-time adjacency for a track graph.

    A track ``u -> v`` leaving at ``t_u`` and arriving at ``t_v`` adds the
    column ``K_v(t_k - t_v)`` to block ``(v, u)`` at the bin of ``t_u``,
    and the column ``K_u(t_k - t_u)`` to block ``(u, v)`` at the bin of
    ``t_v``. Repeated tracks sum.
    """
    tg = check_track_graph(tg)
    n, nt = tg.n, grid.n_bins
    rates = kp.rates
    if rates.size == 1:
        rates = np.full(n, rates[0])
    if rates.size != n:
        raise ValidationError(f"expected {n} threat rates, got {rates.size}")
    cues = _check_cues(cues, n, grid.horizon)
    if tg.horizon > grid.horizon * (1 + 1e-12):
        raise ValidationError("time grid is shorter than the track horizon")

    if len(tg) == 0:
        warnings.warn("empty track list: the space-time adjacency is all zero", stacklevel=2)
    t = grid.centers
    k = np.arange(nt)
    src, dst = tg.src, tg.dst
    # rows (dst, k) <- column (src, bin(depart)), kernel of the receiving vertex
    rows_f = (dst[:, None] * nt + k).ravel()
    cols_f = np.repeat(src * nt + grid.bin_of(tg.depart), nt)
    vals_f = np.exp(-rates[dst][:, None] * np.abs(t - tg.arrive[:, None])).ravel()
    # rows (src, k) <- column (dst, bin(arrive))
    rows_b = (src[:, None] * nt + k).ravel()
    cols_b = np.repeat(dst * nt + grid.bin_of(tg.arrive), nt)
    vals_b = np.exp(-rates[src][:, None] * np.abs(t - tg.depart[:, None])).ravel()
    size = n * nt
    A = sp.coo_matrix(
        (np.concatenate([vals_f, vals_b]), (np.concatenate([rows_f, rows_b]), np.concatenate([cols_f, cols_b]))),
        shape=(size, size),
    ).tocsr()
    A.sum_duplicates()

    cued = np.unique(np.array([c.vertex for c in cues], dtype=np.int64))
    is_b = np.zeros(n, dtype=bool)
    is_b[cued] = True
    flat_b = np.repeat(is_b, nt)
    return SpaceTimeSystem(
        n=n,
        grid=grid,
        adjacency=A,
        weights=tg.incident_counts(),
        boundary=np.flatnonzero(flat_b),
        interior=np.flatnonzero(~flat_b),
        cued_vertices=cued,
    )


def boundary_values_from_cues(system, kp, cues, mode="kernel"):
    """Boundary threat per cued (vertex, bin), ordered like ``system.boundary``.

    ``"kernel"`` spreads each cue as ``value * K(t_k - t_cue)``;
    ``"impulse"`` puts ``value`` in the cue's bin only. Several cues on
    one vertex combine by maximum.
    """
    n, nt = system.n, system.grid.n_bins
    cues = _check_cues(cues, n, system.grid.horizon)
    rates = kp.rates if kp.rates.size == n else np.full(n, kp.rates[0])
    theta = np.zeros((n, nt))
    t = system.grid.centers
    for c in cues:
        if mode == "kernel":
            col = c.value * np.exp(-rates[c.vertex] * np.abs(t - c.time))
        elif mode == "impulse":
            col = np.zeros(nt)
            col[system.grid.bin_of(c.time)] = c.value
        else:
            raise ValidationError(f"unknown cue mode {mode!r}; use 'kernel' or 'impulse'")
        np.maximum(theta[c.vertex], col, out=theta[c.vertex])
    return theta.ravel()[system.boundary]


def _reaches_boundary(P, boundary):
    """Mask of space-time vertices with a directed P-path into the boundary."""
    size = P.shape[0]
    # edge j -> i for every P[i, j] > 0, plus a source feeding all boundary nodes
    T = P.T.tocoo()
    rows = np.concatenate([T.row, np.full(boundary.size, size)])
    cols = np.concatenate([T.col, boundary])
    aug = sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(size + 1, size + 1))
    order = csgraph.breadth_first_order(aug, size, directed=True, return_predecessors=False)
    mask = np.zeros(size + 1, dtype=bool)
    mask[order] = True
    return mask[:size]


def harmonic_solve(system, boundary_values, tol=1e-10, max_iter=1000, method="bicgstab", clamp=True):
    """Solve ``L_ii theta_i = -L_ib theta_b`` for the interior threat.

    Interior vertices with no directed path to the boundary receive no
    evidence and are fixed at 0; the remaining block is nonsingular.

    Parameters
    ----------
    boundary_values : array_like
        One value in ``[0, 1]`` per entry of ``system.boundary``.
    tol : float
        Absolute bound on the final residual norm.
    method : {"bicgstab", "direct"}
        Stabilized biconjugate gradient, or a sparse LU solve.
    clamp : bool
        Clip the solution into ``[0, 1]`` and record the largest shift.

    Raises
    ------
    ConvergenceError
        If BiCGSTAB has not met ``tol`` after ``max_iter`` iterations.
    """
    b_idx, i_idx = system.boundary, system.interior
    if b_idx.size == 0:
        raise ValidationError("harmonic solve needs at least one cued vertex")
    theta_b = np.asarray(boundary_values, dtype=float).ravel()
    if theta_b.size != b_idx.size:
        raise ValidationError(f"expected {b_idx.size} boundary values, got {theta_b.size}")
    if np.any(theta_b < 0) or np.any(theta_b > 1) or not np.all(np.isfinite(theta_b)):
        raise ValidationError("boundary values must lie in [0, 1]")
    check_positive(tol, "tol")

    P = system.transition()
    full = np.zeros(system.size)
    full[b_idx] = theta_b
    reach = _reaches_boundary(P, b_idx)
    live = i_idx[reach[i_idx]]
    residual, iterations = 0.0, 0
    if live.size:
        L_ll = sp.identity(live.size, format="csr") - P[live][:, live]
        rhs = P[live][:, b_idx] @ theta_b
        if method == "direct":
            x = spla.spsolve(L_ll.tocsc(), rhs)
        elif method == "bicgstab":
            x, iterations = _bicgstab(L_ll, rhs, tol, max_iter)
        else:
            raise ValidationError(f"unknown solver {method!r}; use 'bicgstab' or 'direct'")
        residual = float(np.linalg.norm(L_ll @ x - rhs))
        full[live] = x

    theta = full.reshape(system.n, system.grid.n_bins)
    shift = 0.0
    if clamp:
        clipped = np.clip(theta, 0.0, 1.0)
        shift = float(np.abs(clipped - theta).max(initial=0.0))
        if shift > 0:
            logger.debug("clamped harmonic threat by up to %.3e", shift)
        theta = clipped
    return ThreatVector(theta, residual=residual, clamped=shift, iterations=iterations)


def _bicgstab(A, b, tol, max_iter):
    if not np.any(b):
        return np.zeros_like(b), 0
    count = [0]

    def tick(_):
        count[0] += 1

    x = np.zeros_like(b)
    # restart from the last iterate while the true residual drifts above tol
    for _ in range(3):
        x, info = spla.bicgstab(
            A, b, x0=x, rtol=0.0, atol=tol, maxiter=max(1, max_iter - count[0]), callback=tick
        )
        res = float(np.linalg.norm(A @ x - b))
        if res <= tol:
            return x, count[0]
        if info < 0 or count[0] >= max_iter:
            break
    raise ConvergenceError(f"BiCGSTAB stopped after {count[0]} iterations", res)


def sttp_scores(
    tg,
    grid=None,
    kp=None,
    cues=(),
    tol=1e-10,
    max_iter=1000,
    aggregate="max",
    cue_mode="kernel",
    method="bicgstab",
    return_details=False,
):
    """Per-vertex harmonic threat scores for a set of cues.

    ``grid`` defaults to 64 bins over the track horizon and ``kp`` to
    :meth:`ThreatKernelParams.default`. A vertex's score aggregates its
    threat over time bins; a cued vertex scores the maximum of its
    boundary values. With ``return_details`` the threat vector and the
    space-time system are returned as well.
    """
    tg = check_track_graph(tg)
    cues = list(cues)
    if not cues:
        raise ValidationError("STTP needs at least one cue")
    grid = grid or TimeGrid(tg.horizon)
    kp = kp or ThreatKernelParams.default(grid.horizon, tg.n)
    system = build_spacetime_system(tg, grid, kp, cues)
    theta_b = boundary_values_from_cues(system, kp, cues, mode=cue_mode)
    tv = harmonic_solve(system, theta_b, tol=tol, max_iter=max_iter, method=method)
    scores = tv.aggregate(aggregate)
    for v in system.cued_vertices:
        scores[v] = tv.theta[v].max()
    meta = {"residual": tv.residual, "clamped": tv.clamped, "iterations": tv.iterations, "n_bins": grid.n_bins}
    out = VertexScores(scores, "sttp", meta)
    return (out, tv, system) if return_details else out


def llr_detect(scores, threshold, null_weights=None):
    """Likelihood-ratio detection: vertices with ``score / null_weight > threshold``.

    ``null_weights`` defaults to all ones. Returns sorted vertex indices.
    """
    s = check_scores(scores)
    threshold = float(threshold)
    if np.isnan(threshold):
        raise ValidationError("threshold must not be NaN")
    if null_weights is None:
        ratio = s
    else:
        w = np.asarray(null_weights, dtype=float).ravel()
        if w.size != s.size:
            raise ValidationError(f"expected {s.size} null weights, got {w.size}")
        if np.any(~(w > 0)) or not np.all(np.isfinite(w)):
            raise ValidationError("null weights must be positive and finite")
        ratio = s / w
    return np.flatnonzero(ratio > threshold)


class ThreatPropagationDetector(BaseEstimator):
    """Neyman-Pearson network detector built on harmonic space-time threat.

    ``fit(tracks, cues)`` solves for the threat; ``predict`` applies the
    likelihood-ratio threshold.

    Parameters
    ----------
    n_bins : int, default=64
    rate : float or None
        Uniform Poisson rate; ``None`` picks ``4 / horizon``.
    horizon : float or None
        Time horizon; ``None`` uses the track graph's.
    aggregate : {"max", "mean"}
    cue_mode : {"kernel", "impulse"}
    threshold : float
        Detection threshold on the (weighted) score.

    Attributes
    ----------
    scores_ : VertexScores
    threat_ : ThreatVector
    system_ : SpaceTimeSystem
    """

    def __init__(
        self,
        n_bins=DEFAULT_BINS,
        rate=None,
        horizon=None,
        tol=1e-10,
        max_iter=1000,
        aggregate="max",
        cue_mode="kernel",
        threshold=0.5,
        null_weights=None,
    ):
        self.n_bins = n_bins
        self.rate = rate
        self.horizon = horizon
        self.tol = tol
        self.max_iter = max_iter
        self.aggregate = aggregate
        self.cue_mode = cue_mode
        self.threshold = threshold
        self.null_weights = null_weights

    def fit(self, X, y):
        """Fit on a track graph ``X`` with cues ``y`` (``Cue`` or ``(vertex, time, value)``)."""
        tg = check_track_graph(X, horizon=self.horizon)
        grid = TimeGrid(self.horizon or tg.horizon, self.n_bins)
        kp = (
            ThreatKernelParams.default(grid.horizon, tg.n)
            if self.rate is None
            else ThreatKernelParams.uniform(self.rate, tg.n)
        )
        self.scores_, self.threat_, self.system_ = sttp_scores(
            tg,
            grid,
            kp,
            list(y),
            tol=self.tol,
            max_iter=self.max_iter,
            aggregate=self.aggregate,
            cue_mode=self.cue_mode,
            return_details=True,
        )
        return self

    def decision_function(self, X=None):
        check_is_fitted(self)
        return self.scores_.values

    def predict(self, X=None):
        s = self.decision_function()
        mask = np.zeros(s.size, dtype=bool)
        mask[llr_detect(s, self.threshold, self.null_weights)] = True
        return mask

    def fit_predict(self, X, y):
        return self.fit(X, y).predict()
