"""Covert-network mixed-membership stochastic blockmodel with meeting times.

Each node draws a lifestyle, a Dirichlet community-membership vector and
a power-law expected degree. Every ordered pair fixes the community each
side acts in; an Erdos-Renyi style indicator gates the pair, and the
pair's interaction count is Poisson with the Chung-Lu times blockmodel
rate. Interactions happen at community meeting times with Gaussian
arrival jitter.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ValidationError
from .graph import TrackGraph, build_track_graph
from .validation import check_probability_vector

__all__ = [
    "BlockmodelParams",
    "GeneratedNetwork",
    "sample_lifestyles",
    "sample_membership",
    "sample_memberships",
    "sample_pair_communities",
    "sample_degrees",
    "interaction_rate",
    "sample_sparsity_indicator",
    "sample_meeting_times",
    "expected_community_sizes",
    "connectivity_threshold",
    "generate",
    "baseline_params",
]

_STAGES = (
    "lifestyles",
    "membership",
    "degrees",
    "pair_communities",
    "sparsity",
    "interactions",
    "meetings",
    "schedule",
    "jitter",
)


@dataclass(frozen=True, eq=False)
class BlockmodelParams:
    """Parameters of the covert-network blockmodel.

    Attributes
    ----------
    N, K, L : int
        Nodes, communities and lifestyles.
    phi : ndarray (L,)
        Lifestyle probabilities.
    X : ndarray (L, K)
        Dirichlet concentration of each lifestyle over communities.
    B : ndarray (K, K)
        Community interaction rates.
    S : ndarray (K, K)
        Pair activation probabilities.
    alpha : float
        Power-law exponent of the expected degrees (> 1).
    psi : ndarray (K,)
        Expected number of meeting times per community (>= 1).
    jitter_sd : float
        Standard deviation (s) of each endpoint's arrival around a meeting.
    horizon : float
        Simulation length T in seconds.
    foreground_lifestyles, foreground_communities : tuple of int
    connected_communities : tuple of int
        Communities whose S diagonal must clear ``log N_k / N_k``.
    degree_bounds : (float, float or None)
        Power-law support; the upper bound defaults to ``sqrt(N)``.
    community_mode : {"pair", "interaction"}
        Whether the hosting community is fixed per pair or redrawn for
        every interaction.
    """

    N: int
    K: int
    L: int
    phi: np.ndarray
    X: np.ndarray
    B: np.ndarray
    S: np.ndarray
    alpha: float = 2.5
    psi: np.ndarray = None
    jitter_sd: float = None
    horizon: float = 86400.0
    foreground_lifestyles: tuple = ()
    foreground_communities: tuple = ()
    connected_communities: tuple = ()
    degree_bounds: tuple = (1.0, None)
    community_mode: str = "pair"

    def __post_init__(self):
        conv = {
            "phi": np.asarray(self.phi, dtype=float).ravel(),
            "X": np.atleast_2d(np.asarray(self.X, dtype=float)),
            "B": np.atleast_2d(np.asarray(self.B, dtype=float)),
            "S": np.atleast_2d(np.asarray(self.S, dtype=float)),
            "psi": np.ones(self.K) if self.psi is None else np.asarray(self.psi, dtype=float).ravel(),
            "jitter_sd": self.horizon / 200.0 if self.jitter_sd is None else float(self.jitter_sd),
            "foreground_lifestyles": tuple(int(i) for i in self.foreground_lifestyles),
            "foreground_communities": tuple(int(i) for i in self.foreground_communities),
            "connected_communities": tuple(int(i) for i in self.connected_communities),
        }
        for k, v in conv.items():
            if isinstance(v, np.ndarray):
                v.setflags(write=False)
            object.__setattr__(self, k, v)
        self.validate()

    @property
    def x_min(self):
        return float(self.degree_bounds[0])

    @property
    def x_max(self):
        hi = self.degree_bounds[1]
        return max(self.x_min, np.sqrt(self.N)) if hi is None else float(hi)

    def validate(self):
        N, K, L = self.N, self.K, self.L
        if N < 0 or K < 1 or L < 1:
            raise ValidationError(f"need N >= 0, K >= 1, L >= 1; got N={N}, K={K}, L={L}")
        if self.phi.shape != (L,):
            raise ValidationError(f"phi must have length L={L}")
        check_probability_vector(self.phi, "phi")
        if self.X.shape != (L, K) or np.any(self.X < 0):
            raise ValidationError(f"X must be a nonnegative {L}x{K} matrix")
        used = self.phi > 0
        if np.any(self.X[used].sum(axis=1) <= 0):
            raise ValidationError("every lifestyle with positive phi needs a positive X entry")
        if self.B.shape != (K, K) or np.any(self.B < 0):
            raise ValidationError(f"B must be a nonnegative {K}x{K} matrix")
        if self.S.shape != (K, K) or np.any(self.S < 0) or np.any(self.S > 1):
            raise ValidationError(f"S must be a {K}x{K} matrix of probabilities")
        if not np.allclose(self.S, self.S.T):
            raise ValidationError("S must be symmetric")
        if self.psi.shape != (K,) or np.any(self.psi < 1):
            raise ValidationError("psi must hold K expected meeting counts, each >= 1")
        if not self.alpha > 1:
            raise ValidationError(f"power-law exponent alpha must exceed 1, got {self.alpha}")
        if not (self.horizon > 0 and self.jitter_sd >= 0):
            raise ValidationError("horizon must be positive and jitter_sd nonnegative")
        if not 0 < self.x_min <= self.x_max:
            raise ValidationError(f"degree bounds must satisfy 0 < x_min <= x_max, got {self.degree_bounds}")
        for name, idx, bound in (
            ("foreground_lifestyles", self.foreground_lifestyles, L),
            ("foreground_communities", self.foreground_communities, K),
            ("connected_communities", self.connected_communities, K),
        ):
            if any(not 0 <= i < bound for i in idx):
                raise ValidationError(f"{name} index out of range 0..{bound - 1}")
        if self.community_mode not in ("pair", "interaction"):
            raise ValidationError(f"community_mode must be 'pair' or 'interaction', got {self.community_mode!r}")
        sizes = expected_community_sizes(self)
        for k in self.connected_communities:
            need = connectivity_threshold(sizes[k])
            if self.S[k, k] < need * (1 - 1e-12):
                raise ValidationError(
                    f"S[{k},{k}]={self.S[k, k]:.4g} is below log N_k/N_k={need:.4g} for a connected community"
                )


def expected_community_sizes(params):
    """Expected membership mass per community, ``N * sum_l phi_l E[pi_lk]``."""
    X = params.X
    tot = X.sum(axis=1, keepdims=True)
    mean_pi = np.divide(X, tot, out=np.zeros_like(X), where=tot > 0)
    return params.N * params.phi @ mean_pi


def connectivity_threshold(size):
    """Erdos-Renyi connectivity threshold ``log n / n``; 1 for ``n <= 1``."""
    size = float(size)
    if size <= 1:
        return 1.0
    return float(np.log(size) / size)


@dataclass(eq=False)
class GeneratedNetwork:
    """A sampled network with its latent variables and ground truth.

    Attributes
    ----------
    tracks : TrackGraph
    lifestyles : ndarray (N,)
    membership : ndarray (N, K)
        Rows on the probability simplex.
    pair_communities : ndarray (N, N) of int
        ``[i, j]`` is the community node ``i`` acts in with node ``j``
        (diagonal is -1).
    degrees : ndarray (N,)
        Expected degrees from the power law.
    labels : ndarray (N,) of {0, 1}
        1 for foreground nodes.
    meeting_times : list of ndarray
        Meeting times per community.
    track_community : ndarray
        Hosting community of every track.
    """

    params: BlockmodelParams
    seed: int
    tracks: TrackGraph
    lifestyles: np.ndarray
    membership: np.ndarray
    pair_communities: np.ndarray
    degrees: np.ndarray
    labels: np.ndarray
    meeting_times: list = field(repr=False)
    track_community: np.ndarray = field(repr=False)
    active_pairs: np.ndarray = field(repr=False, default=None)

    def z(self, i, j):
        """One-hot community indicator of node ``i`` when interacting with ``j``."""
        out = np.zeros(self.params.K)
        out[self.pair_communities[i, j]] = 1.0
        return out


def sample_lifestyles(phi, N, rng):
    """I.i.d. lifestyle draws with probabilities ``phi``."""
    phi = check_probability_vector(phi, "phi")
    if N == 0:
        return np.zeros(0, dtype=np.int64)
    return rng.choice(phi.size, size=int(N), p=phi)


def sample_memberships(lifestyles, X, rng):
    """Dirichlet membership rows, one per node, with concentration ``X[l_i]``.

    Zero concentrations pin the matching community to zero mass.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    conc = X[np.asarray(lifestyles, dtype=np.int64)]
    if np.any(conc.sum(axis=1) <= 0):
        raise ValidationError("a lifestyle has no positive concentration entry")
    g = np.zeros_like(conc)
    pos = conc > 0
    g[pos] = rng.standard_gamma(conc[pos])
    s = g.sum(axis=1, keepdims=True)
    # all-underflow rows (tiny concentrations) fall back to the mean
    bad = s.ravel() <= 0
    if np.any(bad):
        g[bad] = conc[bad]
        s[bad] = conc[bad].sum(axis=1, keepdims=True)
    return g / s


def sample_membership(l_i, X, rng):
    """Membership vector ``pi_i ~ Dirichlet(X[l_i])``."""
    return sample_memberships([l_i], X, rng)[0]


def sample_pair_communities(pi_i, pi_j, rng):
    """One-hot community draws ``(z_i->j, z_j->i)`` from ``pi_i`` and ``pi_j``."""
    pi_i = np.asarray(pi_i, dtype=float)
    pi_j = np.asarray(pi_j, dtype=float)
    K = pi_i.size
    a = rng.choice(K, p=pi_i / pi_i.sum())
    b = rng.choice(K, p=pi_j / pi_j.sum())
    return np.eye(K)[a], np.eye(K)[b]


def _categorical_rows(P, m, rng):
    """Draw ``m`` categories from each row of ``P``; returns (rows, m) ints."""
    cum = np.cumsum(P, axis=1)
    cum[:, -1] = 1.0
    u = rng.random((P.shape[0], m))
    return np.minimum((u[:, :, None] > cum[:, None, :]).sum(axis=2), P.shape[1] - 1)


def sample_degrees(alpha, N, rng, x_min=1.0, x_max=None):
    """Expected degrees from the bounded power law ``p(x) ~ x^-alpha`` on ``[x_min, x_max]``.

    ``x_max`` defaults to ``sqrt(N)`` (at least ``x_min``). Uses the
    closed-form inverse CDF.
    """
    alpha = float(alpha)
    if not alpha > 1:
        raise ValidationError(f"alpha must exceed 1, got {alpha}")
    x_max = max(x_min, np.sqrt(N)) if x_max is None else float(x_max)
    u = rng.random(int(N))
    if x_max == x_min:
        return np.full(int(N), float(x_min))
    e = 1.0 - alpha
    lo, hi = x_min**e, x_max**e
    return (lo - u * (lo - hi)) ** (1.0 / e)


def interaction_rate(I_ij, lam_i, lam_j, lam_total, B, z_ij, z_ji=None):
    """Pair interaction rate ``I * lam_i lam_j / sum(lam) * z_ij^T B z_ji``.

    ``z_ji`` defaults to ``z_ij``, the same-vector quadratic form.
    """
    if not lam_total > 0:
        raise ValidationError("total expected degree must be positive")
    z_ij = np.asarray(z_ij, dtype=float)
    z_ji = z_ij if z_ji is None else np.asarray(z_ji, dtype=float)
    return float(I_ij) * lam_i * lam_j / lam_total * float(z_ij @ np.asarray(B, dtype=float) @ z_ji)


def sample_sparsity_indicator(S, z_ij, z_ji, rng):
    """Bernoulli pair activation with probability ``S[a, b]``."""
    a = int(np.argmax(z_ij))
    b = int(np.argmax(z_ji))
    return int(rng.random() < np.asarray(S)[a, b])


def sample_meeting_times(psi_k, T, rng):
    """Meeting times of one community: ``1 + Poisson(psi_k - 1)`` uniform draws on ``[0, T]``."""
    psi_k = float(psi_k)
    if psi_k < 1:
        raise ValidationError(f"expected meeting count must be >= 1, got {psi_k}")
    count = 1 + rng.poisson(psi_k - 1.0)
    return np.sort(rng.uniform(0.0, T, size=count))


def generate(params, seed):
    """Sample a :class:`GeneratedNetwork`.

    Each sampling stage draws from its own child stream of ``seed``, so
    changing (say) the meeting-time parameters leaves the spatial graph
    untouched.
    """
    p = params
    N, K, T = p.N, p.K, p.horizon
    streams = dict(
        zip(_STAGES, (np.random.default_rng(s) for s in np.random.SeedSequence(int(seed)).spawn(len(_STAGES))))
    )

    life = sample_lifestyles(p.phi, N, streams["lifestyles"])
    pi = sample_memberships(life, p.X, streams["membership"]) if N else np.zeros((0, K))
    lam = sample_degrees(p.alpha, N, streams["degrees"], p.x_min, p.x_max)
    lam_total = lam.sum()

    Z = _categorical_rows(pi, N, streams["pair_communities"]) if N else np.zeros((0, 0), int)
    np.fill_diagonal(Z, -1)
    iu, ju = np.triu_indices(N, k=1)
    a, b = Z[iu, ju], Z[ju, iu]
    active = streams["sparsity"].random(iu.size) < p.S[a, b]

    ia, ja, aa, ba = iu[active], ju[active], a[active], b[active]
    rates = lam[ia] * lam[ja] / lam_total * p.B[aa, ba] if ia.size else np.zeros(0)
    rs = streams["interactions"]
    counts = rs.poisson(rates)
    host_is_i = rs.random(ia.size) < 0.5

    meetings = [sample_meeting_times(p.psi[k], T, streams["meetings"]) for k in range(K)]

    # expand pairs into individual interactions
    ti = np.repeat(ia, counts)
    tj = np.repeat(ja, counts)
    m = ti.size
    sched = streams["schedule"]
    host = np.where(np.repeat(host_is_i, counts), ti, tj)
    if p.community_mode == "pair":
        comm = np.where(np.repeat(host_is_i, counts), np.repeat(aa, counts), np.repeat(ba, counts))
    else:
        comm = _categorical_rows(pi[host], 1, sched)[:, 0] if m else np.zeros(0, int)
    n_meet = np.array([len(mt) for mt in meetings])
    pick = np.floor(sched.random(m) * n_meet[comm]).astype(np.int64) if m else np.zeros(0, int)
    base = np.array([meetings[c][k] for c, k in zip(comm, pick)]) if m else np.zeros(0)
    forward = sched.random(m) < 0.5

    jit = streams["jitter"]
    t1 = np.clip(base + jit.normal(0.0, p.jitter_sd, m), 0.0, T) if p.jitter_sd > 0 else base.copy()
    t2 = np.clip(base + jit.normal(0.0, p.jitter_sd, m), 0.0, T) if p.jitter_sd > 0 else base.copy()
    src = np.where(forward, ti, tj)
    dst = np.where(forward, tj, ti)
    tracks = build_track_graph(N, src, dst, np.minimum(t1, t2), np.maximum(t1, t2), horizon=T)

    labels = np.isin(life, p.foreground_lifestyles).astype(np.int8)
    return GeneratedNetwork(
        params=p,
        seed=int(seed),
        tracks=tracks,
        lifestyles=life,
        membership=pi,
        pair_communities=Z,
        degrees=lam,
        labels=labels,
        meeting_times=meetings,
        track_community=comm,
        active_pairs=np.column_stack([ia, ja]),
    )


def baseline_params(
    N=256,
    K=10,
    L=11,
    alpha=2.5,
    horizon=86400.0,
    jitter_sd=None,
    phi_fg=0.04,
    fg_share=0.85,
    x_scale=2.0,
    psi_bg=20.0,
    psi_fg=20.0,
    S_scale=1.0,
    S_fg_scale=1.0,
    S_offdiag=0.25,
    B_diag=300.0,
    B_offdiag_ratio=0.1,
    B_fg_ratio=1.5,
    community_mode="pair",
):
    """Baseline covert-network configuration.

    Community ``K-1`` is the foreground community and lifestyles
    ``L-2, L-1`` are the foreground lifestyles. Background lifestyle ``l``
    centres on background community ``l mod (K-1)`` with power-law
    decaying concentration on the others. Foreground lifestyle ``L-2``
    spreads its background share uniformly; ``L-1`` concentrates it on
    two background communities. Both put ``fg_share`` of their mass on
    the foreground community.

    The S diagonal is ``S_scale * log N_k / N_k`` (``S_fg_scale`` for the
    foreground community) with ``N_k`` the expected community size;
    off-diagonal entries are ``S_offdiag`` times the geometric mean of
    the two diagonals. B is diagonally dominant: off-diagonal entries
    are ``B_offdiag_ratio * B_diag`` and the foreground diagonal is
    ``B_fg_ratio * B_diag``.
    """
    if K < 2 or L < 3:
        raise ValidationError("the baseline needs K >= 2 communities and L >= 3 lifestyles")
    nbg_c, nbg_l = K - 1, L - 2
    fg_c = K - 1
    if not 0 < 2 * phi_fg < 1:
        raise ValidationError(f"phi_fg must lie in (0, 0.5), got {phi_fg}")
    if not 0 < fg_share <= 1:
        raise ValidationError(f"fg_share must lie in (0, 1], got {fg_share}")

    phi = np.concatenate([np.full(nbg_l, (1 - 2 * phi_fg) / nbg_l), [phi_fg, phi_fg]])
    X = np.zeros((L, K))
    for l in range(nbg_l):
        home = l % nbg_c
        offset = (np.arange(nbg_c) - home) % nbg_c
        X[l, :nbg_c] = x_scale * (1.0 + offset) ** -2.0
    bg_part = (1 - fg_share) * x_scale
    X[L - 2, :nbg_c] = bg_part / nbg_c
    X[L - 1, : min(2, nbg_c)] = bg_part / min(2, nbg_c)
    X[L - 2 :, fg_c] = fg_share * x_scale

    B = np.full((K, K), B_offdiag_ratio * B_diag)
    np.fill_diagonal(B, B_diag)
    B[fg_c, fg_c] = B_fg_ratio * B_diag

    psi = np.full(K, float(psi_bg))
    psi[fg_c] = psi_fg

    # S depends on expected sizes, which depend only on phi and X
    proto = BlockmodelParams(N, K, L, phi, X, B, np.zeros((K, K)), alpha=alpha, psi=psi, horizon=horizon)
    sizes = expected_community_sizes(proto)
    diag = np.array([connectivity_threshold(s) for s in sizes])
    diag[:nbg_c] = np.minimum(1.0, S_scale * diag[:nbg_c])
    diag[fg_c] = min(1.0, S_fg_scale * diag[fg_c])
    S = np.minimum(1.0, S_offdiag * np.sqrt(np.outer(diag, diag)))
    np.fill_diagonal(S, diag)

    connected = tuple(range(nbg_c)) if S_scale >= 1 else ()
    if S_fg_scale >= 1:
        connected = connected + (fg_c,)
    return BlockmodelParams(
        N=N,
        K=K,
        L=L,
        phi=phi,
        X=X,
        B=B,
        S=S,
        alpha=alpha,
        psi=psi,
        jitter_sd=jitter_sd,
        horizon=horizon,
        foreground_lifestyles=(L - 2, L - 1),
        foreground_communities=(fg_c,),
        connected_communities=connected,
        community_mode=community_mode,
    )
