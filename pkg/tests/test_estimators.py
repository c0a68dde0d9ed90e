import numpy as np
import pytest
from sklearn.base import clone

from netdet import FiedlerDetector, ModularityDetector, ThreatPropagationDetector
from netdet.graph import build_graph
from netdet.threat import Cue

from .conftest import random_tracks

ESTIMATORS = [FiedlerDetector(c=-0.1), ModularityDetector(magnitude=True), ThreatPropagationDetector(n_bins=4)]


@pytest.mark.parametrize("est", ESTIMATORS, ids=lambda e: type(e).__name__)
def test_params_round_trip_through_clone(est):
    params = est.get_params()
    twin = clone(est)
    assert twin.get_params() == params
    assert twin is not est


@pytest.mark.parametrize("est", ESTIMATORS, ids=lambda e: type(e).__name__)
def test_set_params(est):
    name = next(iter(est.get_params()))
    value = est.get_params()[name]
    assert clone(est).set_params(**{name: value}).get_params()[name] == value


def test_refit_replaces_state():
    det = FiedlerDetector()
    det.fit(build_graph(3, [(0, 1), (1, 2)]))
    det.fit(build_graph(4, [(0, 1), (1, 2), (2, 3)]))
    assert det.predict().shape == (4,)


def test_threat_detector_threshold_only_affects_predict():
    tg = random_tracks(np.random.default_rng(0), 8, 25)
    a = ThreatPropagationDetector(n_bins=4, threshold=0.0).fit(tg, [Cue(1, 10.0)])
    b = ThreatPropagationDetector(n_bins=4, threshold=0.9).fit(tg, [Cue(1, 10.0)])
    assert np.array_equal(a.decision_function(), b.decision_function())
    assert a.predict().sum() >= b.predict().sum()
