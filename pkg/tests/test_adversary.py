import math

import numpy as np
import pytest

from freqkey.adversary import (
    InterceptResendFreq,
    Leg,
    Location,
    NoEve,
    PassiveTap,
    StrongProbe,
    attack_branches,
    attack_state,
    intensity_side_channel,
    parse_eve,
    probe_alice,
)
from freqkey.bench import round_trip_distribution
from freqkey.modes import FrequencyBin, Path
from freqkey.stations import (
    AliceChoice,
    AliceKitConfig,
    BobKitConfig,
    BobSetting,
    ChannelConfig,
    alice_transform,
    forward_pass,
    return_pass,
)

NF, FO, FD = AliceChoice.NO_FILTER, AliceChoice.FILTER_OMEGA, AliceChoice.FILTER_OMEGA_DELTA
ON, OFF = BobSetting.AOM_ON, BobSetting.AOM_OFF
IR = InterceptResendFreq(Location.RETURN, 1.0)


def reflected(choice=NF, alice=AliceKitConfig()):
    return alice_transform(forward_pass(BobKitConfig(), ChannelConfig()), choice, alice)[0]


def test_no_eve_is_identity():
    s = reflected()
    (b,) = attack_branches(s, NoEve(), Leg.RETURN)
    assert b.prob == 1.0 and b.state == s and not b.entry.attacked


def test_intercept_collapses_with_born_weights():
    branches = attack_branches(reflected(), IR, Leg.RETURN)
    assert [b.prob for b in branches] == pytest.approx([0.5, 0.5], abs=1e-15)
    assert [b.state.frequencies() for b in branches] == [{FrequencyBin.BASE}, {FrequencyBin.SHIFTED}]
    assert all(b.state.norm2() == pytest.approx(1.0, abs=1e-12) for b in branches)


def test_collapsed_state_detected_evenly():
    for b in attack_branches(reflected(), IR, Leg.RETURN):
        d = return_pass(b.state, BobKitConfig(), ON)
        assert np.allclose(d.as_tuple(), (0.5, 0.5, 0.0), atol=1e-12)


def test_intercept_leaves_filtered_rounds_alone():
    for choice in (FO, FD):
        for setting in BobSetting:
            clean = round_trip_distribution(choice, setting)
            hit = round_trip_distribution(choice, setting, eve=IR)
            assert clean.isclose(hit)


def test_intercept_probability_mixes():
    d = round_trip_distribution(NF, ON, eve=InterceptResendFreq(Location.RETURN, 0.1))
    assert d.p_d2 == pytest.approx(0.05, abs=1e-12)


@pytest.mark.parametrize("loc", [Location.FORWARD, Location.BOTH])
def test_forward_intercept_also_breaks_interference(loc):
    d = round_trip_distribution(NF, ON, eve=InterceptResendFreq(loc, 1.0))
    assert d.p_d2 == pytest.approx(0.5, abs=1e-12)


def test_location_filter():
    (b,) = attack_branches(reflected(), InterceptResendFreq(Location.FORWARD, 1.0), Leg.RETURN)
    assert not b.entry.attacked


def test_attack_state_sampling_frequencies():
    rng = np.random.default_rng(0)
    n = 20_000
    base = sum(attack_state(reflected(), IR, Leg.RETURN, rng)[1].measured_freq is FrequencyBin.BASE for _ in range(n))
    assert abs(base / n - 0.5) <= 4 * math.sqrt(0.25 / n)


def test_passive_tap_halves_channel_norm():
    s = reflected()
    (b,) = attack_branches(s, PassiveTap(0.5), Leg.RETURN)
    on_channel = b.state.weight(lambda m: m.path is Path.CHANNEL)
    assert on_channel == pytest.approx(0.5 * s.norm2(), abs=1e-12)
    d = round_trip_distribution(NF, ON, eve=PassiveTap(0.5))
    assert d.as_tuple() == pytest.approx((0.5, 0.0, 0.5), abs=1e-12)


def test_probe_d3_mean():
    alice = AliceKitConfig(tap_ratio=0.5)
    rng = np.random.default_rng(2)
    extras = [probe_alice(StrongProbe(100), NF, alice, rng)[1] for _ in range(4000)]
    assert abs(np.mean(extras) - 50) <= 4 * math.sqrt(50 / 4000)


def test_probe_reads_filter():
    rng = np.random.default_rng(3)
    assert all(probe_alice(StrongProbe(1000), FO, AliceKitConfig(), rng)[0] is FO for _ in range(200))
    assert all(probe_alice(StrongProbe(1000), NF, AliceKitConfig(), rng)[0] is NF for _ in range(200))


def test_dim_probe_is_a_guess():
    rng = np.random.default_rng(4)
    n = 9000
    hits = sum(probe_alice(StrongProbe(1e-12), FD, AliceKitConfig(), rng)[0] is FD for _ in range(n))
    assert abs(hits / n - 1 / 3) <= 4 * math.sqrt((2 / 9) / n)


def test_side_channel_without_and_with_attenuator():
    rng = np.random.default_rng(5)
    choices = [list(AliceChoice)[i % 3] for i in range(10_000)]
    open_kit = AliceKitConfig(filter_amp_transmittance=math.sqrt(0.5))
    res = intensity_side_channel(choices, open_kit, 10.0, rng)
    assert res.analytic_ratio == pytest.approx(4.0, rel=1e-12)
    assert res.z > 5
    closed = AliceKitConfig(filter_amp_transmittance=math.sqrt(0.5), attenuator_enabled=True)
    res = intensity_side_channel(choices, closed, 10.0, rng)
    assert res.analytic_no_filter == pytest.approx(res.analytic_filtered, abs=1e-12)


@pytest.mark.parametrize("text,expected", [
    (None, NoEve()),
    ("none", NoEve()),
    ("intercept", IR),
    ("intercept:forward:0.3", InterceptResendFreq(Location.FORWARD, 0.3)),
    ("tap:0.2", PassiveTap(0.2)),
    ("probe:100", StrongProbe(100.0)),
])
def test_parse_eve(text, expected):
    assert parse_eve(text) == expected


@pytest.mark.parametrize("text", ["ufo", "intercept:sideways", "tap:x", "intercept:return:2"])
def test_parse_eve_rejects(text):
    with pytest.raises(ValueError):
        parse_eve(text)
