import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freqkey.modes import FrequencyBin, ModeLabel, Path, Pol, PureState, make_single_mode_state
from freqkey.readout import (
    ClickOutcome,
    DetectorModel,
    OutcomeDistribution,
    PortWeights,
    distribution,
    sample_detection,
    threshold_outcome,
)

from oracles import enumerate_poisson_clicks, enumerate_single_photon_clicks

S2 = 1 / math.sqrt(2)
DET1 = ModeLabel(FrequencyBin.BASE, Path.DET1, 0, Pol.H)
DET2 = ModeLabel(FrequencyBin.SHIFTED, Path.DET2, 0, Pol.H)


def test_single_port_example():
    d = distribution(make_single_mode_state(DET1))
    assert d.as_tuple() == (1.0, 0.0, 0.0)


def test_even_split_example():
    d = distribution(PureState({DET1: S2, DET2: S2}))
    assert abs(d.p_d1 - 0.5) < 1e-15 and abs(d.p_d2 - 0.5) < 1e-15 and abs(d.p_none) < 1e-15


def test_vacuum_example():
    assert distribution(PureState({})).as_tuple() == (0.0, 0.0, 1.0)


def test_unassigned_path_rejected():
    s = make_single_mode_state(ModeLabel(FrequencyBin.BASE, Path.LONG_ARM, 0, Pol.H))
    with pytest.raises(ValueError, match="not assigned"):
        distribution(s)


def test_distribution_must_sum_to_one():
    with pytest.raises(ValueError):
        OutcomeDistribution(0.5, 0.5, 0.5)


@settings(max_examples=200, deadline=None)
@given(
    st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 0.99), st.floats(0, 0.99),
)
def test_single_photon_dark_counts_match_enumeration(a, b, e1, e2, d1, d2):
    w1, w2 = a * (1 - b), a * b
    got = threshold_outcome(PortWeights(w1, w2), DetectorModel(e1, d1), DetectorModel(e2, d2))
    ref = enumerate_single_photon_clicks(e1 * w1, e2 * w2, d1, d2)
    assert got.p_d1 == pytest.approx(ref["D1"], abs=1e-12)
    assert got.p_d2 == pytest.approx(ref["D2"], abs=1e-12)
    assert got.p_double == pytest.approx(ref["double"], abs=1e-12)
    assert got.p_none == pytest.approx(ref["none"], abs=1e-12)


@pytest.mark.parametrize("mu,w1,w2,d1,d2", [
    (0.1, 1.0, 0.0, 0.0, 0.0),
    (0.1, 0.5, 0.5, 0.0, 0.0),
    (0.5, 0.25, 0.25, 0.01, 0.02),
    (2.0, 0.3, 0.1, 0.05, 0.0),
])
def test_poisson_source_matches_enumeration(mu, w1, w2, d1, d2):
    got = threshold_outcome(PortWeights(w1, w2), DetectorModel(1, d1), DetectorModel(1, d2), mean_photons=mu)
    ref = enumerate_poisson_clicks(mu, w1, w2, d1, d2)
    for key, val in (("D1", got.p_d1), ("D2", got.p_d2), ("double", got.p_double), ("none", got.p_none)):
        assert val == pytest.approx(ref[key], abs=1e-12)


def test_sampling_certain_outcome():
    rng = np.random.default_rng(3)
    dist = OutcomeDistribution(1.0, 0.0, 0.0)
    assert all(sample_detection(dist, rng) is ClickOutcome.D1 for _ in range(1000))


def test_sampling_even_split_within_four_sigma():
    rng = np.random.default_rng(11)
    n = 100_000
    draws = sample_detection(OutcomeDistribution(0.5, 0.5, 0.0), rng, size=n)
    frac = float(np.mean(draws == 0))
    assert abs(frac - 0.5) <= 4 * math.sqrt(0.25 / n)


def test_sampling_deterministic_under_seed():
    dist = OutcomeDistribution(0.3, 0.2, 0.4, 0.1)
    r1, r2 = np.random.default_rng(99), np.random.default_rng(99)
    s1 = [sample_detection(dist, r1) for _ in range(500)]
    s2 = [sample_detection(dist, r2) for _ in range(500)]
    assert s1 == s2
    assert np.array_equal(sample_detection(dist, np.random.default_rng(7), 1000),
                          sample_detection(dist, np.random.default_rng(7), 1000))


def test_detector_model_validation():
    with pytest.raises(ValueError):
        DetectorModel(1.5, 0.0)
    with pytest.raises(ValueError):
        DetectorModel(1.0, -0.1)
