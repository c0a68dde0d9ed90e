"""Flat ``key = value`` configuration files.

One setting per line, ``#`` starts a comment, keys are namespaced
(``model.N``, ``sttp.bins``, ``mc.trials`` ...). Every key is declared in
:data:`KEYS`; anything else is rejected. ``Config.echo()`` writes a file
that parses back to an equal config, which is what the provenance
sidecars store.
"""

import os
from dataclasses import dataclass

import numpy as np

from .blockmodel import baseline_params
from .evaluation import DETECTORS, ExperimentConfig
from .exceptions import ValidationError

__all__ = ["KEYS", "Config", "parse_config", "parse_config_text", "params_from_config", "experiment_from_config"]

SEED_ENV = "NETDET_SEED"


@dataclass(frozen=True)
class Key:
    kind: str  # int, float, str, bool, list, auto_float
    default: object
    doc: str
    check: object = None  # callable(value) -> error message or None
    choices: tuple = ()


def _positive(v):
    return None if v > 0 else "must be positive"


def _nonneg(v):
    return None if v >= 0 else "must be nonnegative"


def _unit(v):
    return None if 0 < v <= 1 else "must lie in (0, 1]"


def _at_least(k):
    return lambda v: None if v >= k else f"must be >= {k}"


KEYS = {
    "model.N": Key("int", 256, "number of vertices", _at_least(2)),
    "model.K": Key("int", 10, "number of communities; the last one is the foreground", _at_least(2)),
    "model.L": Key("int", 11, "number of lifestyles; the last two are foreground", _at_least(3)),
    "model.alpha": Key("float", 2.5, "power-law exponent of the expected degrees", lambda v: None if v > 1 else "must exceed 1"),
    "model.horizon": Key("float", 86400.0, "simulation horizon T in seconds", _positive),
    "model.jitter_sd": Key("auto_float", None, "timestamp jitter sd in seconds; auto = horizon / 200", _nonneg),
    "model.phi_fg": Key("float", 0.04, "prior weight of each foreground lifestyle", lambda v: None if 0 < v < 0.5 else "must lie in (0, 0.5)"),
    "model.fg_share": Key("float", 0.85, "share of foreground membership mass on the foreground community", _unit),
    "model.x_scale": Key("float", 2.0, "total Dirichlet concentration of a lifestyle", _positive),
    "model.psi": Key("float", 20.0, "expected meetings per background community", lambda v: None if v >= 1 else "must be >= 1"),
    "model.psi_fg": Key("float", 20.0, "expected meetings of the foreground community", lambda v: None if v >= 1 else "must be >= 1"),
    "model.S_scale": Key("float", 1.0, "background S diagonal in units of log N_k / N_k", _positive),
    "model.S_fg_scale": Key("float", 1.0, "foreground S diagonal in units of log N_k / N_k", _positive),
    "model.S_offdiag": Key("float", 0.25, "off-diagonal S as a fraction of the diagonal geometric mean", _nonneg),
    "model.B_diag": Key("float", 300.0, "expected interactions within a background community", _positive),
    "model.B_offdiag_ratio": Key("float", 0.1, "off-diagonal B as a fraction of B_diag", _nonneg),
    "model.B_fg_ratio": Key("float", 1.5, "foreground B diagonal as a multiple of B_diag", _positive),
    "model.community_mode": Key("str", "pair", "community of an interaction: fixed per pair or redrawn", choices=("pair", "interaction")),
    "sttp.bins": Key("int", 64, "time bins of the space-time grid", _at_least(1)),
    "sttp.lambda": Key("auto_float", None, "kernel decay rate in 1/s; auto = 4 / horizon", _positive),
    "sttp.tol": Key("float", 1e-10, "absolute residual tolerance of the harmonic solve", _positive),
    "sttp.max_iter": Key("int", 1000, "iteration cap of the harmonic solve", _at_least(1)),
    "sttp.aggregate": Key("str", "max", "per-vertex reduction over time bins", choices=("max", "mean")),
    "sttp.cue_mode": Key("str", "kernel", "boundary values of a cued vertex", choices=("kernel", "impulse")),
    "spec.eigvec_index": Key("int", 0, "modularity eigenvector used for scoring, 0 = principal", _at_least(0)),
    "spec.magnitude": Key("bool", False, "score by absolute eigenvector entries"),
    "mc.trials": Key("int", 1000, "Monte-Carlo trials per configuration", _at_least(1)),
    "mc.seed": Key("int", 0, "master seed; trial t uses seed + t (overridden by NETDET_SEED)", _at_least(0)),
    "mc.workers": Key("int", 1, "worker processes", _at_least(1)),
    "mc.pfa_points": Key("int", 101, "points of the uniform false-alarm grid on [0, 1]", _at_least(2)),
    "mc.detectors": Key(
        "list", ("sttp", "spec"), "comma-separated detectors", lambda v: None if v else "must not be empty", DETECTORS
    ),
    "mc.cue_policy": Key("str", "foreground", "how the cue is drawn", choices=("foreground",)),
    "sweep.key": Key("str", "", "config key varied by `mc`; empty for a single run"),
    "sweep.values": Key("list", (), "comma-separated values of sweep.key"),
}


def _parse_value(name, spec, raw):
    raw = raw.strip()
    try:
        if spec.kind == "int":
            value = int(raw)
        elif spec.kind == "float":
            value = float(raw)
        elif spec.kind == "auto_float":
            value = None if raw.lower() == "auto" else float(raw)
        elif spec.kind == "bool":
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            value = low in ("true", "1", "yes")
        elif spec.kind == "list":
            value = tuple(p.strip() for p in raw.split(",") if p.strip())
        else:
            value = raw
    except ValueError:
        raise ValidationError(f"{name}: expected {spec.kind}, got {raw!r}") from None
    _check(name, spec, value)
    return value


def _check(name, spec, value):
    if value is None:
        return
    if spec.kind in ("float", "auto_float") and not np.isfinite(value):
        raise ValidationError(f"{name}: must be finite, got {value}")
    if spec.choices:
        items = value if spec.kind == "list" else (value,)
        bad = [v for v in items if v not in spec.choices]
        if bad:
            raise ValidationError(f"{name}: {bad[0]!r} is not one of {', '.join(spec.choices)}")
    if spec.check is not None:
        msg = spec.check(value)
        if msg:
            raise ValidationError(f"{name}: {msg}, got {value}")


def _format_value(spec, value):
    if spec.kind == "auto_float":
        return "auto" if value is None else repr(float(value))
    if spec.kind == "float":
        return repr(float(value))
    if spec.kind == "bool":
        return "true" if value else "false"
    if spec.kind == "list":
        return ", ".join(value)
    return str(value)


class Config:
    """Validated settings with every key filled in.

    Read values with ``cfg["model.N"]``; :meth:`replace` returns a copy
    with some keys changed (validated like a parsed file).
    """

    def __init__(self, values=None):
        self._values = {k: spec.default for k, spec in KEYS.items()}
        for k, v in (values or {}).items():
            self._set(k, v)
        self._check_sweep()

    def _set(self, key, value):
        if key not in KEYS:
            raise ValidationError(f"unknown config key {key!r}")
        spec = KEYS[key]
        if isinstance(value, str) and spec.kind != "str":
            value = _parse_value(key, spec, value)
        else:
            if spec.kind == "list":
                value = tuple(value)
            elif spec.kind == "int" and not isinstance(value, bool):
                value = int(value)
            elif spec.kind == "float" or (spec.kind == "auto_float" and value is not None):
                value = float(value)
            _check(key, spec, value)
        self._values[key] = value

    def _check_sweep(self):
        key = self._values["sweep.key"]
        vals = self._values["sweep.values"]
        if not key:
            if vals:
                raise ValidationError("sweep.values: set sweep.key as well")
            return
        if key not in KEYS or key.startswith(("sweep.", "mc.")):
            raise ValidationError(f"sweep.key: cannot sweep {key!r}")
        if not vals:
            raise ValidationError("sweep.values: empty sweep")
        for v in vals:
            _parse_value(key, KEYS[key], v)

    def __getitem__(self, key):
        if key not in KEYS:
            raise ValidationError(f"unknown config key {key!r}")
        return self._values[key]

    def get(self, key, default=None):
        return self._values.get(key, default)

    def as_dict(self):
        return dict(self._values)

    def replace(self, **changes):
        """Copy with ``changes`` applied; dotted keys are passed as ``**{"model.N": 64}``."""
        vals = dict(self._values)
        vals.update(changes)
        return Config(vals)

    def sweep(self):
        """Configs for each sweep value, as ``[(label, Config), ...]``."""
        key = self._values["sweep.key"]
        if not key:
            return [("", self)]
        base = self.replace(**{"sweep.key": "", "sweep.values": ()})
        return [(v, base.replace(**{key: v})) for v in self._values["sweep.values"]]

    def echo(self):
        """Config text that parses back to an equal ``Config``."""
        return "".join(f"{k} = {_format_value(KEYS[k], v)}\n" for k, v in self._values.items())

    def __eq__(self, other):
        return isinstance(other, Config) and self._values == other._values

    def __repr__(self):
        changed = {k: v for k, v in self._values.items() if v != KEYS[k].default}
        return f"Config({changed})"


def parse_config_text(text, environ=None):
    """Parse config ``text``; ``environ`` (default ``os.environ``) may set the seed."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ValidationError(f"line {lineno}: unknown config key {key!r}")
        if key in values:
            raise ValidationError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _parse_value(key, KEYS[key], raw)
    env = os.environ if environ is None else environ
    seed = env.get(SEED_ENV)
    if seed not in (None, ""):
        values["mc.seed"] = _parse_value(SEED_ENV, KEYS["mc.seed"], seed)
    return Config(values)


def parse_config(path=None, environ=None):
    """Read a config file; ``None`` gives the defaults (plus any seed override)."""
    if path is None:
        return parse_config_text("", environ)
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config_text(text, environ)


def params_from_config(cfg):
    """Blockmodel parameters described by the ``model.*`` keys."""
    return baseline_params(
        N=cfg["model.N"],
        K=cfg["model.K"],
        L=cfg["model.L"],
        alpha=cfg["model.alpha"],
        horizon=cfg["model.horizon"],
        jitter_sd=cfg["model.jitter_sd"],
        phi_fg=cfg["model.phi_fg"],
        fg_share=cfg["model.fg_share"],
        x_scale=cfg["model.x_scale"],
        psi_bg=cfg["model.psi"],
        psi_fg=cfg["model.psi_fg"],
        S_scale=cfg["model.S_scale"],
        S_fg_scale=cfg["model.S_fg_scale"],
        S_offdiag=cfg["model.S_offdiag"],
        B_diag=cfg["model.B_diag"],
        B_offdiag_ratio=cfg["model.B_offdiag_ratio"],
        B_fg_ratio=cfg["model.B_fg_ratio"],
        community_mode=cfg["model.community_mode"],
    )


def experiment_from_config(cfg):
    """Monte-Carlo experiment described by ``cfg`` (ignores the sweep keys)."""
    return ExperimentConfig(
        params=params_from_config(cfg),
        detectors=tuple(cfg["mc.detectors"]),
        trials=cfg["mc.trials"],
        seed=cfg["mc.seed"],
        pfa_grid=np.linspace(0.0, 1.0, cfg["mc.pfa_points"]),
        cue_policy=cfg["mc.cue_policy"],
        workers=cfg["mc.workers"],
        sttp={
            "bins": cfg["sttp.bins"],
            "rate": cfg["sttp.lambda"],
            "tol": cfg["sttp.tol"],
            "max_iter": cfg["sttp.max_iter"],
            "aggregate": cfg["sttp.aggregate"],
            "cue_mode": cfg["sttp.cue_mode"],
        },
        spec={"eigvec_index": cfg["spec.eigvec_index"], "magnitude": cfg["spec.magnitude"]},
    )
