import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freqkey.modes import (
    FrequencyBin,
    ModeLabel,
    Path,
    Pol,
    PureState,
    apply_map,
    columns_orthonormal,
    compose,
    coupler_map,
    identity_map,
    make_single_mode_state,
    overlap,
    pbs_map,
    projector_map,
    relabel_map,
    scale_map,
    shift_time_map,
    splitter_map,
)

B, S = FrequencyBin.BASE, FrequencyBin.SHIFTED
S2 = 1 / math.sqrt(2)


def mode(freq=B, path=Path.CHANNEL, time=0, pol=Pol.H):
    return ModeLabel(freq, path, time, pol)


OMEGA = make_single_mode_state(mode(B))
OMEGA_DELTA = make_single_mode_state(mode(S))
CONTROL = PureState({mode(B): S2, mode(S): S2})


def test_single_mode_state_is_normalized():
    assert OMEGA.norm2() == 1.0
    assert overlap(OMEGA, OMEGA) == 1 + 0j


def test_frequency_states_orthogonal():
    assert overlap(OMEGA, OMEGA_DELTA) == 0


def test_control_state_overlap():
    assert abs(overlap(OMEGA, CONTROL) - S2) < 1e-15


def test_invalid_path_rejected():
    with pytest.raises(ValueError):
        make_single_mode_state(ModeLabel(B, "nowhere", 0, Pol.H))
    with pytest.raises(ValueError):
        make_single_mode_state(ModeLabel(B, Path.CHANNEL, -1, Pol.H))


def test_identity_is_neutral_under_compose():
    g = coupler_map(Path.SHORT_ARM, Path.LONG_ARM)
    h = compose(identity_map(), g)
    s = make_single_mode_state(mode(B, Path.SHORT_ARM))
    assert h(s).isclose(g(s))
    assert apply_map(identity_map(), CONTROL) == CONTROL


def test_two_couplers_square_to_identity():
    # (1/2) [[1,1],[1,-1]]^2 = identity, with no frequency relabeling.
    bs = splitter_map(Path.SHORT_ARM, Path.LONG_ARM, 0.5)
    twice = compose(bs, bs)
    for label in (mode(B, Path.SHORT_ARM), mode(S, Path.LONG_ARM, 2, Pol.V)):
        s = make_single_mode_state(label)
        assert twice(s).isclose(s)
    # With the frequency swap on cross legs the same holds, since the swap is an involution.
    aom = coupler_map(Path.SHORT_ARM, Path.LONG_ARM)
    s = make_single_mode_state(mode(B, Path.SHORT_ARM))
    assert compose(aom, aom)(s).isclose(s)


def test_isometry_flag_conjunction():
    assert not compose(coupler_map(Path.SHORT_ARM, Path.LONG_ARM), projector_map(B)).isometry
    assert compose(shift_time_map(Path.LONG_ARM, 1), pbs_map(Path.CHANNEL, Path.SHORT_ARM, Path.LONG_ARM)).isometry


def test_coupler_splits_equally_and_shifts_frequency():
    out = coupler_map(Path.SHORT_ARM, Path.LONG_ARM)(make_single_mode_state(mode(B, Path.SHORT_ARM)))
    assert abs(out[mode(B, Path.SHORT_ARM)] - S2) < 1e-15
    assert abs(out[mode(S, Path.LONG_ARM)] - S2) < 1e-15
    assert abs(out.norm2() - 1) < 1e-12


def test_coupler_constructive_calibration():
    # Equal in-phase amplitudes recombine fully in the first output.
    s = PureState({mode(B, Path.LONG_ARM): S2, mode(S, Path.SHORT_ARM): S2})
    out = coupler_map(Path.LONG_ARM, Path.SHORT_ARM)(s)
    assert abs(out[mode(B, Path.LONG_ARM)] - 1) < 1e-12
    assert out.weight(lambda m: m.path is Path.SHORT_ARM) < 1e-24


def test_coupler_columns_orthonormal():
    labels = [mode(f, p, t, pol) for f in FrequencyBin for p in (Path.SHORT_ARM, Path.LONG_ARM)
              for t in (0, 1) for pol in Pol]
    for phi in (0.0, 0.3, math.pi):
        assert columns_orthonormal(coupler_map(Path.SHORT_ARM, Path.LONG_ARM, phase=phi), labels)


def test_coupler_rejects_bad_rules():
    with pytest.raises(ValueError):
        coupler_map(Path.SHORT_ARM, Path.SHORT_ARM)
    with pytest.raises(ValueError):
        coupler_map(Path.SHORT_ARM, Path.LONG_ARM, freq_rule={B: "omega+2delta"})
    with pytest.raises(ValueError):
        coupler_map(Path.SHORT_ARM, Path.LONG_ARM, freq_rule={B: S, S: S})


def test_partial_freq_rule_is_completed():
    m = coupler_map(Path.SHORT_ARM, Path.LONG_ARM, freq_rule={S: B})
    out = m(make_single_mode_state(mode(B, Path.SHORT_ARM)))
    assert out.frequencies() == {B, S}


def test_filter_examples():
    f = projector_map(B, 1.0)
    assert f(OMEGA) == OMEGA
    assert f(OMEGA_DELTA).norm2() == 0
    assert abs(f(CONTROL).norm2() - 0.5) < 1e-12
    with pytest.raises(ValueError):
        projector_map(B, 1.5)


def test_shift_and_relabel():
    s = make_single_mode_state(mode(B, Path.LONG_ARM))
    assert shift_time_map(Path.LONG_ARM, 0)(s) == s
    moved = shift_time_map(Path.LONG_ARM, 1)(s)
    assert moved[mode(B, Path.LONG_ARM, 1)] == 1
    fm = relabel_map(Path.CHANNEL, Path.CHANNEL, pol_flip=True)
    assert fm(OMEGA)[mode(B, Path.CHANNEL, 0, Pol.V)] == 1
    assert fm(fm(OMEGA)) == OMEGA
    with pytest.raises(ValueError):
        shift_time_map(Path.LONG_ARM, -1)


def test_pbs_routes_by_polarization_and_is_involution():
    pbs = pbs_map(Path.CHANNEL, Path.SHORT_ARM, Path.LONG_ARM)
    h = make_single_mode_state(mode(B, Path.CHANNEL, 0, Pol.H))
    v = make_single_mode_state(mode(S, Path.CHANNEL, 0, Pol.V))
    assert pbs(h).paths() == {Path.SHORT_ARM}
    assert pbs(v)[mode(S, Path.LONG_ARM, 0, Pol.H)] == 1
    assert pbs(pbs(v)) == v


def test_state_mode_limit():
    amps = {mode(B, Path.CHANNEL, t): 0.1 for t in range(17)}
    with pytest.raises(ValueError):
        PureState(amps)


# -- properties ------------------------------------------------------------

labels = st.builds(
    ModeLabel,
    st.sampled_from(list(FrequencyBin)),
    st.sampled_from([Path.CHANNEL, Path.SHORT_ARM, Path.LONG_ARM, Path.MONITOR, Path.DET1]),
    st.integers(0, 5),
    st.sampled_from(list(Pol)),
)
amps = st.complex_numbers(max_magnitude=1.0, allow_nan=False, allow_infinity=False)


@st.composite
def unit_states(draw):
    d = draw(st.dictionaries(labels, amps, min_size=1, max_size=8))
    s = PureState(d)
    n = s.norm()
    if n < 1e-6:
        return make_single_mode_state(next(iter(d)))
    return s.scaled(1 / n)


isometries = st.sampled_from([
    coupler_map(Path.SHORT_ARM, Path.LONG_ARM),
    coupler_map(Path.LONG_ARM, Path.SHORT_ARM, phase=1.1),
    splitter_map(Path.CHANNEL, Path.MONITOR, 0.37),
    pbs_map(Path.CHANNEL, Path.SHORT_ARM, Path.LONG_ARM),
    relabel_map(Path.CHANNEL, Path.CHANNEL, pol_flip=True),
    relabel_map(Path.LONG_ARM, Path.DET1),
    shift_time_map(Path.LONG_ARM, 2),
])
contractions = st.sampled_from([
    projector_map(B), projector_map(S, 0.6), scale_map(Path.CHANNEL, 0.8),
])


@settings(max_examples=200, deadline=None)
@given(unit_states(), isometries)
def test_isometries_preserve_norm(s, m):
    assert m.isometry
    assert abs(m(s).norm() - s.norm()) <= 1e-12


@settings(max_examples=200, deadline=None)
@given(unit_states(), st.one_of(isometries, contractions))
def test_no_map_increases_norm(s, m):
    assert m(s).norm() <= s.norm() + 1e-12


@settings(max_examples=100, deadline=None)
@given(unit_states(), st.sampled_from(list(FrequencyBin)))
def test_projector_idempotent(s, f):
    p = projector_map(f)
    assert p(p(s)).isclose(p(s), tol=0.0)


@settings(max_examples=100, deadline=None)
@given(unit_states(), st.one_of(isometries, contractions))
def test_frequency_closure(s, m):
    assert m(s).frequencies() <= set(FrequencyBin)


@settings(max_examples=100, deadline=None)
@given(unit_states(), isometries, st.one_of(isometries, contractions))
def test_compose_matches_sequential_application(s, f, g):
    assert compose(f, g)(s).isclose(f(g(s)))


@settings(max_examples=100, deadline=None)
@given(unit_states(), unit_states(), amps)
def test_overlap_sesquilinear_and_bounded(a, b, c):
    assert abs(overlap(a, b)) <= a.norm() * b.norm() + 1e-12
    assert abs(overlap(a.scaled(c), b) - c.conjugate() * overlap(a, b)) <= 1e-12
    assert abs(overlap(a, b.scaled(c)) - c * overlap(a, b)) <= 1e-12
    assert abs(overlap(a, a) - a.norm2()) <= 1e-12
