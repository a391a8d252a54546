"""Bob's and Alice's kits for the frequency-coded plug-and-play link.

Bob's pulse is split by the AOM into an undelayed ``omega`` component on the
short arm and a delayed ``omega + delta`` component on the long arm. The PBS
sends them down the channel in orthogonal polarizations, Alice filters and
reflects them off a Faraday mirror, and on the way back the PBS swaps the
arms so both components reach the AOM in the same time bin.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

from .modes import (
    FrequencyBin,
    LinearMap,
    ModeLabel,
    Path,
    Pol,
    PureState,
    chain,
    coupler_map,
    identity_map,
    make_single_mode_state,
    pbs_map,
    projector_map,
    relabel_map,
    scale_map,
    shift_time_map,
    splitter_map,
)
from .readout import DetectorModel, OutcomeDistribution, distribution

__all__ = [
    "AliceChoice",
    "BobSetting",
    "SinglePhoton",
    "WeakCoherent",
    "BobKitConfig",
    "AliceKitConfig",
    "ChannelConfig",
    "forward_pass",
    "alice_transform",
    "return_state",
    "return_pass",
    "passband_transmission",
]


class AliceChoice(Enum):
    NO_FILTER = "NoFilter"
    FILTER_OMEGA = "FilterOmega"
    FILTER_OMEGA_DELTA = "FilterOmegaDelta"

    @property
    def passband(self) -> FrequencyBin | None:
        return _PASSBAND[self]

    @property
    def intended_bit(self) -> int | None:
        return _BIT[self]

    def mirrored(self) -> "AliceChoice":
        """Swap the two filters; NoFilter is unchanged."""
        return _MIRROR[self]


_PASSBAND = {
    AliceChoice.NO_FILTER: None,
    AliceChoice.FILTER_OMEGA: FrequencyBin.BASE,
    AliceChoice.FILTER_OMEGA_DELTA: FrequencyBin.SHIFTED,
}
_BIT = {AliceChoice.NO_FILTER: None, AliceChoice.FILTER_OMEGA: 0, AliceChoice.FILTER_OMEGA_DELTA: 1}
_MIRROR = {
    AliceChoice.NO_FILTER: AliceChoice.NO_FILTER,
    AliceChoice.FILTER_OMEGA: AliceChoice.FILTER_OMEGA_DELTA,
    AliceChoice.FILTER_OMEGA_DELTA: AliceChoice.FILTER_OMEGA,
}


class BobSetting(Enum):
    AOM_ON = "AomOn"
    AOM_OFF = "AomOff"


@dataclass(frozen=True)
class SinglePhoton:
    mean_photons = None


@dataclass(frozen=True)
class WeakCoherent:
    mean: float = 0.1

    def __post_init__(self):
        if not self.mean > 0:
            raise ValueError(f"weak-coherent mean photon number must be > 0, got {self.mean}")

    @property
    def mean_photons(self) -> float:
        return self.mean


Source = SinglePhoton | WeakCoherent


@dataclass(frozen=True)
class BobKitConfig:
    aom_phase: float = 0.0
    arm_delay_bins: int = 1
    source: Source = field(default_factory=SinglePhoton)
    det_d1: DetectorModel = field(default_factory=DetectorModel)
    det_d2: DetectorModel = field(default_factory=DetectorModel)

    def __post_init__(self):
        if self.arm_delay_bins < 1:
            raise ValueError("armDelayBins must be >= 1")


@dataclass(frozen=True)
class AliceKitConfig:
    """Alice's station.

    Attributes:
        filter_amp_transmittance: amplitude transmittance of either narrow
            filter per pass.
        tap_ratio: intensity fraction the monitor beam splitter diverts per
            pass; only the inbound fraction reaches D3.
        attenuator_enabled: equalize reflected intensity on no-filter rounds.
        switch_settling_bins: time the filter switch needs between pulses.
    """

    filter_amp_transmittance: float = 1.0
    tap_ratio: float = 0.0
    attenuator_enabled: bool = False
    det_d3: DetectorModel = field(default_factory=DetectorModel)
    switch_settling_bins: int = 0

    def __post_init__(self):
        if not 0.0 < self.filter_amp_transmittance <= 1.0:
            raise ValueError("filterAmpTransmittance must lie in (0, 1]")
        if not 0.0 <= self.tap_ratio < 1.0:
            raise ValueError("tapRatio must lie in [0, 1)")
        if self.switch_settling_bins < 0:
            raise ValueError("switchSettlingBins must be >= 0")


@dataclass(frozen=True)
class ChannelConfig:
    amp_transmittance: float = 1.0
    one_way_delay_bins: int = 0

    def __post_init__(self):
        if not 0.0 < self.amp_transmittance <= 1.0:
            raise ValueError("channel ampTransmittance must lie in (0, 1]")
        if self.one_way_delay_bins < 0:
            raise ValueError("channel oneWayDelayBins must be >= 0")


SOURCE_MODE = ModeLabel(FrequencyBin.BASE, Path.SHORT_ARM, 0, Pol.H)
_PBS = pbs_map(Path.CHANNEL, Path.SHORT_ARM, Path.LONG_ARM, Pol.H)


def _channel(ch: ChannelConfig) -> LinearMap:
    return chain(scale_map(Path.CHANNEL, ch.amp_transmittance), shift_time_map(Path.CHANNEL, ch.one_way_delay_bins))


@lru_cache(maxsize=None)
def forward_pass(bob: BobKitConfig, ch: ChannelConfig) -> PureState:
    """Bob's outgoing pulse as it arrives at Alice."""
    optics = chain(
        coupler_map(Path.SHORT_ARM, Path.LONG_ARM),
        shift_time_map(Path.LONG_ARM, bob.arm_delay_bins),
        _PBS,
        _channel(ch),
    )
    return optics(make_single_mode_state(SOURCE_MODE))


def _on_channel(label: ModeLabel) -> bool:
    return label.path is Path.CHANNEL


def alice_transform(s: PureState, choice: AliceChoice, cfg: AliceKitConfig) -> tuple[PureState, float]:
    """Filter, reflect and return the pulse; report the monitor's share.

    Sequence: tap, filter, Faraday mirror, filter, attenuator, tap. The
    inbound tap feeds D3; the outbound tap exits the unused port. Returns the
    reflected channel state and the expected photon number at D3.
    """
    tap = splitter_map(Path.CHANNEL, Path.MONITOR, cfg.tap_ratio)
    s = tap(s)
    d3 = s.weight(lambda m: m.path is Path.MONITOR)
    s = s.restricted(_on_channel)

    band = choice.passband
    filt = identity_map() if band is None else projector_map(band, cfg.filter_amp_transmittance)
    mirror = relabel_map(Path.CHANNEL, Path.CHANNEL, pol_flip=True)
    s = chain(filt, mirror, filt)(s)
    if cfg.attenuator_enabled and band is None:
        # t_F per pass, matching the filters' in-band loss exactly.
        s = scale_map(Path.CHANNEL, cfg.filter_amp_transmittance**2)(s)

    s = splitter_map(Path.CHANNEL, Path.LOST, cfg.tap_ratio)(s)
    return s.restricted(_on_channel), d3


def passband_transmission(choice: AliceChoice, cfg: AliceKitConfig) -> float:
    """Intensity reflectance of Alice's kit at its most transmissive frequency."""
    best = 0.0
    for f in FrequencyBin:
        probe = make_single_mode_state(ModeLabel(f, Path.CHANNEL, 0, Pol.H))
        out, _ = alice_transform(probe, choice, cfg)
        best = max(best, out.norm2())
    return best


def _arm_times(s: PureState) -> set[int]:
    return {m.time for m in s if m.path in (Path.LONG_ARM, Path.SHORT_ARM)}


def return_state(s: PureState, bob: BobKitConfig, setting: BobSetting, ch: ChannelConfig = ChannelConfig()) -> PureState:
    """Propagate the reflected pulse back through the channel to Bob's detector ports."""
    s = chain(_channel(ch), _PBS, shift_time_map(Path.LONG_ARM, bob.arm_delay_bins))(s)
    times = _arm_times(s)
    if len(times) > 1:
        raise ValueError(f"time bins misaligned at the coupler: {sorted(times)}")
    if setting is BobSetting.AOM_ON:
        s = coupler_map(Path.LONG_ARM, Path.SHORT_ARM, phase=bob.aom_phase)(s)
    to_detectors = chain(relabel_map(Path.LONG_ARM, Path.DET1), relabel_map(Path.SHORT_ARM, Path.DET2))
    return to_detectors(s)


def return_pass(
    s: PureState,
    bob: BobKitConfig,
    setting: BobSetting,
    ch: ChannelConfig = ChannelConfig(),
    d3_expected: float = 0.0,
) -> OutcomeDistribution:
    """Exact click distribution at D1/D2 for the reflected pulse ``s``."""
    out = return_state(s, bob, setting, ch)
    dist = distribution(out, det={"D1": bob.det_d1, "D2": bob.det_d2}, mean_photons=bob.source.mean_photons)
    if d3_expected:
        mean = bob.source.mean_photons or 1.0
        dist = OutcomeDistribution(dist.p_d1, dist.p_d2, dist.p_none, dist.p_double, d3_expected * mean)
    return dist
