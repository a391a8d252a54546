"""Full round trip Bob -> Alice -> Bob, exact and sampled.

``round_trip_distribution`` is the analytic oracle: it averages the readout
over every branch of the eavesdropper's action. ``sample_pulse`` draws one
pulse from the same branch tree, photon by photon.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .adversary import (
    Branch,
    EveLogEntry,
    EveStrategy,
    Leg,
    NoEve,
    StrongProbe,
    attack_branches,
    probe_alice,
)
from .readout import ClickOutcome, OutcomeDistribution, PortWeights, port_weights, threshold_outcome
from .stations import (
    AliceChoice,
    AliceKitConfig,
    BobKitConfig,
    BobSetting,
    ChannelConfig,
    alice_transform,
    forward_pass,
    return_state,
)

__all__ = [
    "PulseRecord",
    "Fate",
    "round_trip_fates",
    "round_trip_distribution",
    "sample_pulse",
    "round_trip_bins",
]


@dataclass(frozen=True)
class Fate:
    """One leaf of the eavesdropper's branch tree for a single photon."""

    prob: float
    weights: PortWeights
    entry: EveLogEntry


@lru_cache(maxsize=4096)
def round_trip_fates(
    choice: AliceChoice,
    setting: BobSetting,
    bob: BobKitConfig,
    alice: AliceKitConfig,
    ch: ChannelConfig,
    eve: EveStrategy = NoEve(),
) -> tuple[Fate, ...]:
    out = []
    for fwd in attack_branches(forward_pass(bob, ch), eve, Leg.FORWARD):
        reflected, d3 = alice_transform(fwd.state, choice, alice)
        for ret in attack_branches(reflected, eve, Leg.RETURN):
            w = port_weights(return_state(ret.state, bob, setting, ch))
            w = PortWeights(w.d1, w.d2, d3, w.eve)
            out.append(Fate(fwd.prob * ret.prob, w, _merge(fwd, ret)))
    return tuple(out)


def _merge(fwd: Branch, ret: Branch) -> EveLogEntry:
    if ret.entry.attacked:
        return ret.entry
    return fwd.entry


def round_trip_distribution(
    choice: AliceChoice,
    setting: BobSetting,
    bob: BobKitConfig = BobKitConfig(),
    alice: AliceKitConfig = AliceKitConfig(),
    ch: ChannelConfig = ChannelConfig(),
    eve: EveStrategy = NoEve(),
) -> OutcomeDistribution:
    """Exact outcome distribution for one pulse configuration."""
    mixed = PortWeights()
    for fate in round_trip_fates(choice, setting, bob, alice, ch, eve):
        mixed = mixed + fate.weights.scaled(fate.prob)
    return threshold_outcome(mixed, bob.det_d1, bob.det_d2, bob.source.mean_photons)


def round_trip_bins(bob: BobKitConfig, ch: ChannelConfig) -> int:
    return 2 * ch.one_way_delay_bins + bob.arm_delay_bins


@dataclass(frozen=True)
class PulseRecord:
    index: int
    choice: AliceChoice
    setting: BobSetting
    click: ClickOutcome
    d3_photons: int
    emit_bin: int
    return_bin: int
    leaf_id: str | None = None

    @property
    def intended_bit(self) -> int | None:
        return self.choice.intended_bit

    @property
    def decoded_bit(self) -> int | None:
        """Bob's bit reading: defined for a single click with the AOM off."""
        if self.setting is not BobSetting.AOM_OFF:
            return None
        return {ClickOutcome.D1: 0, ClickOutcome.D2: 1}.get(self.click)


def _pick(fates: tuple[Fate, ...], u: float) -> Fate:
    acc = 0.0
    for fate in fates:
        acc += fate.prob
        if u < acc:
            return fate
    return fates[-1]


def sample_pulse(
    index: int,
    choice: AliceChoice,
    setting: BobSetting,
    bob: BobKitConfig,
    alice: AliceKitConfig,
    ch: ChannelConfig,
    eve: EveStrategy,
    rng: np.random.Generator,
    emit_bin: int | None = None,
    arrival_offset: int | None = None,
    leaf_id: str | None = None,
) -> tuple[PulseRecord, EveLogEntry]:
    """Sample one pulse: photon number, eavesdropper branch, photon fates, dark clicks."""
    fates = round_trip_fates(choice, setting, bob, alice, ch, eve)
    mean = bob.source.mean_photons
    n = 1 if mean is None else int(rng.poisson(mean))

    eta1, eta2, eta3 = bob.det_d1.efficiency, bob.det_d2.efficiency, alice.det_d3.efficiency
    hit1 = hit2 = False
    d3 = 0
    entry = EveLogEntry()
    tapped = 0
    for _ in range(n):
        fate = fates[0] if len(fates) == 1 else _pick(fates, rng.random())
        if fate.entry.attacked and not entry.attacked:
            entry = fate.entry
        w = fate.weights
        u = rng.random()
        c1 = eta1 * w.d1
        c2 = c1 + eta2 * w.d2
        c3 = c2 + eta3 * w.monitor
        c4 = c3 + w.eve
        if u < c1:
            hit1 = True
        elif u < c2:
            hit2 = True
        elif u < c3:
            d3 += 1
        elif u < c4:
            tapped += 1

    if bob.det_d1.dark_prob and rng.random() < bob.det_d1.dark_prob:
        hit1 = True
    if bob.det_d2.dark_prob and rng.random() < bob.det_d2.dark_prob:
        hit2 = True
    if alice.det_d3.dark_prob and rng.random() < alice.det_d3.dark_prob:
        d3 += 1

    if isinstance(eve, StrongProbe):
        readout, extra = probe_alice(eve, choice, alice, rng)
        d3 += extra
        entry = EveLogEntry(True, None, 0, readout)
    elif tapped:
        entry = EveLogEntry(entry.attacked, entry.measured_freq, tapped)

    if hit1 and hit2:
        click = ClickOutcome.DOUBLE
    elif hit1:
        click = ClickOutcome.D1
    elif hit2:
        click = ClickOutcome.D2
    else:
        click = ClickOutcome.NONE

    emit = index if emit_bin is None else emit_bin
    offset = round_trip_bins(bob, ch) if arrival_offset is None else arrival_offset
    return PulseRecord(index, choice, setting, click, d3, emit, emit + offset, leaf_id), entry
