"""ROC curves, randomized cues and Monte-Carlo detection benchmarks."""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .blockmodel import BlockmodelParams, generate
from .exceptions import NetDetError, ValidationError
from .spectral import modularity_detect
from .threat import Cue, ThreatKernelParams, TimeGrid, sttp_scores
from .validation import check_labels, check_scores

__all__ = [
    "RocCurve",
    "AveragedRoc",
    "ExperimentConfig",
    "MonteCarloResult",
    "sample_cue",
    "roc",
    "auc",
    "interpolate_pd",
    "run_trial",
    "monte_carlo",
    "DETECTORS",
]

logger = logging.getLogger(__name__)

DETECTORS = ("sttp", "spec", "random")
MAX_ABORT_FRACTION = 0.10


@dataclass(frozen=True, eq=False)
class RocCurve:
    """ROC points ordered by decreasing threshold.

    ``thresholds[0]`` is ``+inf`` (nothing detected); the last point is
    ``(1, 1)``.
    """

    thresholds: np.ndarray
    pfa: np.ndarray
    pd: np.ndarray
    n_foreground: int
    n_background: int

    @property
    def auc(self):
        return auc(self)

    @property
    def false_alarms(self):
        return np.rint(self.pfa * self.n_background).astype(np.int64)

    def points(self):
        return list(zip(self.pfa.tolist(), self.pd.tolist()))


def roc(scores, labels, exclude=()):
    """ROC of ``scores`` against 0/1 ``labels``.

    Every distinct score is a threshold; vertices scoring at or above it
    are detected, so tied scores enter together. Vertices in ``exclude``
    (e.g. cued ones) are dropped first.

    Raises
    ------
    ValidationError
        If fewer than one foreground or one background vertex remains.
    """
    s = check_scores(scores)
    y = check_labels(labels, s.size)
    keep = np.ones(s.size, dtype=bool)
    ex = np.asarray(list(exclude), dtype=np.int64)
    if ex.size:
        keep[ex] = False
    s, y = s[keep], y[keep]
    n_pos = int(y.sum())
    n_neg = int(y.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("ROC needs both foreground and background vertices")
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    tp = np.cumsum(y)
    fp = np.cumsum(1 - y)
    # last index of each tie group
    ends = np.flatnonzero(np.r_[s[1:] != s[:-1], True])
    thresholds = np.r_[np.inf, s[ends]]
    pd = np.r_[0.0, tp[ends] / n_pos]
    pfa = np.r_[0.0, fp[ends] / n_neg]
    return RocCurve(thresholds, pfa, pd, n_pos, n_neg)


def auc(curve):
    """Trapezoid area under ``(pfa, pd)``."""
    x, y = np.asarray(curve.pfa), np.asarray(curve.pd)
    return float(np.sum(np.diff(x) * (y[1:] + y[:-1]) * 0.5))


def interpolate_pd(curve, grid):
    """PD of ``curve`` at each false-alarm rate in ``grid``.

    Where the curve jumps vertically at a grid value the upper PD is
    taken; between points PD is linearly interpolated.
    """
    grid = np.asarray(grid, dtype=float)
    pfa, pd = curve.pfa, curve.pd
    right = np.searchsorted(pfa, grid, side="right")
    left = np.clip(right - 1, 0, pfa.size - 1)
    right = np.clip(right, 0, pfa.size - 1)
    x0, x1 = pfa[left], pfa[right]
    y0, y1 = pd[left], pd[right]
    span = x1 - x0
    frac = np.divide(grid - x0, span, out=np.zeros_like(grid), where=span > 0)
    return np.clip(y0 + frac * (y1 - y0), 0.0, 1.0)


def sample_cue(net, rng):
    """Cue a uniformly chosen foreground node at one of its track times.

    Only foreground nodes with at least one incident track are eligible.
    """
    tg = net.tracks
    fg = np.flatnonzero(net.labels == 1)
    eligible = fg[tg.incident_counts()[fg] > 0]
    if eligible.size == 0:
        raise ValidationError("no foreground node has an incident track to cue")
    v = int(eligible[rng.integers(eligible.size)])
    times = tg.vertex_times(v)
    return Cue(v, float(times[rng.integers(times.size)]), 1.0)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a Monte-Carlo run needs.

    ``sttp`` and ``spec`` hold keyword settings for the two detectors:
    ``sttp``: bins, rate (None for the default), tol, max_iter,
    aggregate, cue_mode; ``spec``: eigvec_index, magnitude.
    """

    params: BlockmodelParams
    detectors: tuple = ("sttp", "spec")
    trials: int = 1000
    seed: int = 0
    pfa_grid: np.ndarray = field(default_factory=lambda: np.linspace(0.0, 1.0, 101))
    cue_policy: str = "foreground"
    workers: int = 1
    sttp: dict = field(default_factory=dict)
    spec: dict = field(default_factory=dict)

    def __post_init__(self):
        if int(self.trials) < 1:
            raise ValidationError(f"trials must be >= 1, got {self.trials}")
        grid = np.asarray(self.pfa_grid, dtype=float)
        if grid.ndim != 1 or grid.size == 0 or np.any(grid < 0) or np.any(grid > 1) or np.any(np.diff(grid) < 0):
            raise ValidationError("pfa_grid must be a sorted vector inside [0, 1]")
        object.__setattr__(self, "pfa_grid", grid)
        bad = [d for d in self.detectors if d not in DETECTORS]
        if bad or not self.detectors:
            raise ValidationError(f"unknown detector(s) {bad}; choose from {DETECTORS}")
        if self.cue_policy != "foreground":
            raise ValidationError(f"unsupported cue policy {self.cue_policy!r}")
        if int(self.workers) < 1:
            raise ValidationError("workers must be >= 1")


@dataclass
class AveragedRoc:
    detector: str
    pfa: np.ndarray
    pd_mean: np.ndarray
    pd_stderr: np.ndarray
    fa_count_mean: np.ndarray
    aucs: np.ndarray

    @property
    def auc_mean(self):
        return float(self.aucs.mean())

    @property
    def auc_stderr(self):
        n = self.aucs.size
        return float(self.aucs.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0


@dataclass
class MonteCarloResult:
    curves: dict
    trials: int
    aborted: int
    errors: list = field(default_factory=list)


def _detector_scores(name, net, cue, cfg, rng):
    if name == "sttp":
        s = cfg.sttp
        horizon = net.params.horizon
        grid = TimeGrid(horizon, int(s.get("bins", 64)))
        rate = s.get("rate")
        kp = ThreatKernelParams.default(horizon, net.params.N) if rate is None else ThreatKernelParams.uniform(rate, net.params.N)
        return sttp_scores(
            net.tracks,
            grid,
            kp,
            [cue],
            tol=float(s.get("tol", 1e-10)),
            max_iter=int(s.get("max_iter", 1000)),
            aggregate=s.get("aggregate", "max"),
            cue_mode=s.get("cue_mode", "kernel"),
        ).values
    if name == "spec":
        s = cfg.spec
        return modularity_detect(
            net.tracks.to_graph(),
            eigvec_index=int(s.get("eigvec_index", 0)),
            magnitude=bool(s.get("magnitude", False)),
        ).values
    if name == "random":
        return rng.random(net.params.N)
    raise ValidationError(f"unknown detector {name!r}")


def run_trial(cfg, index):
    """One Monte-Carlo trial: returns ``{detector: (pd_on_grid, fa_on_grid, auc)}``."""
    seed = int(cfg.seed) + int(index)
    net = generate(cfg.params, seed)
    rng = np.random.default_rng([seed, 0xC0E])
    cue = sample_cue(net, rng)
    out = {}
    for name in cfg.detectors:
        scores = _detector_scores(name, net, cue, cfg, rng)
        curve = roc(scores, net.labels, exclude=[cue.vertex])
        pd = interpolate_pd(curve, cfg.pfa_grid)
        out[name] = (pd, cfg.pfa_grid * curve.n_background, curve.auc)
    return out


def _safe_trial(args):
    cfg, index = args
    try:
        return index, run_trial(cfg, index), None
    except NetDetError as exc:
        return index, None, f"trial {index}: {exc}"


def monte_carlo(cfg):
    """Average per-trial ROCs vertically on ``cfg.pfa_grid``.

    Trial ``t`` uses network seed ``cfg.seed + t``. Trials that raise a
    netdet error are dropped and counted; more than 10% dropped fails the
    run. Results are merged in trial order whatever ``cfg.workers`` is.
    """
    jobs = [(cfg, t) for t in range(int(cfg.trials))]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=int(cfg.workers)) as pool:
            results = list(pool.map(_safe_trial, jobs, chunksize=max(1, len(jobs) // (4 * cfg.workers))))
    else:
        results = [_safe_trial(j) for j in jobs]
    results.sort(key=lambda r: r[0])
    errors = [err for _, _, err in results if err]
    ok = [res for _, res, err in results if not err]
    for e in errors:
        logger.warning(e)
    if len(errors) > MAX_ABORT_FRACTION * len(jobs):
        raise NetDetError(f"{len(errors)} of {len(jobs)} trials aborted; first: {errors[0]}")
    curves = {}
    for name in cfg.detectors:
        pd = np.array([r[name][0] for r in ok])
        fa = np.array([r[name][1] for r in ok])
        aucs = np.array([r[name][2] for r in ok])
        n = pd.shape[0]
        stderr = pd.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.zeros(cfg.pfa_grid.size)
        curves[name] = AveragedRoc(name, cfg.pfa_grid.copy(), pd.mean(axis=0), stderr, fa.mean(axis=0), aucs)
    return MonteCarloResult(curves, trials=len(jobs), aborted=len(errors), errors=errors)
