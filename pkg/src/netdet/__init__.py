"""Network detection: harmonic space-time threat propagation, spectral detectors and ROC tools."""

from .blockmodel import BlockmodelParams, GeneratedNetwork, baseline_params, generate
from .config import Config, experiment_from_config, params_from_config, parse_config
from .evaluation import ExperimentConfig, RocCurve, auc, monte_carlo, roc
from .exceptions import ConvergenceError, NetDetError, ValidationError
from .graph import (
    Graph,
    TrackGraph,
    adjacency,
    asymmetric_laplacian,
    build_graph,
    build_track_graph,
    degree,
    incidence,
    kirchhoff,
    normalized_laplacian,
)
from .spectral import (
    FiedlerDetector,
    ModularityDetector,
    VertexScores,
    fiedler,
    modularity_detect,
    modularity_matrix,
    spectral_detect,
)
from .threat import (
    Cue,
    ThreatKernelParams,
    ThreatPropagationDetector,
    TimeGrid,
    build_spacetime_system,
    harmonic_solve,
    llr_detect,
    sttp_scores,
)

__version__ = "0.1.0"

__all__ = [
    "BlockmodelParams",
    "GeneratedNetwork",
    "baseline_params",
    "generate",
    "Config",
    "parse_config",
    "params_from_config",
    "experiment_from_config",
    "ExperimentConfig",
    "RocCurve",
    "roc",
    "auc",
    "monte_carlo",
    "NetDetError",
    "ValidationError",
    "ConvergenceError",
    "Graph",
    "TrackGraph",
    "build_graph",
    "build_track_graph",
    "adjacency",
    "degree",
    "incidence",
    "kirchhoff",
    "normalized_laplacian",
    "asymmetric_laplacian",
    "VertexScores",
    "fiedler",
    "spectral_detect",
    "modularity_matrix",
    "modularity_detect",
    "FiedlerDetector",
    "ModularityDetector",
    "Cue",
    "TimeGrid",
    "ThreatKernelParams",
    "build_spacetime_system",
    "harmonic_solve",
    "sttp_scores",
    "llr_detect",
    "ThreatPropagationDetector",
]
