"""Eavesdropper strategies on the quantum channel.

Intercept-resend measures the photon in the frequency basis and re-emits the
collapsed frequency in the time bin and polarization a legitimate pulse of
that frequency would occupy. That destroys the two-path interference Bob's
control rounds rely on. A passive tap diverts part of the returning light to
Eve's port. The strong probe injects a bright pulse into Alice's kit and reads
her filter setting off the reflection, at the price of lighting up D3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np

from .modes import FrequencyBin, ModeLabel, Path, Pol, PureState, make_single_mode_state, splitter_map
from .stations import AliceChoice, AliceKitConfig, alice_transform, passband_transmission

__all__ = [
    "Leg",
    "Location",
    "NoEve",
    "InterceptResendFreq",
    "PassiveTap",
    "StrongProbe",
    "EveStrategy",
    "EveLogEntry",
    "Branch",
    "attack_branches",
    "attack_state",
    "probe_alice",
    "reflected_mean_photons",
    "parse_eve",
    "SideChannelResult",
    "intensity_side_channel",
]


class Leg(Enum):
    FORWARD = "Forward"
    RETURN = "Return"


class Location(Enum):
    FORWARD = "Forward"
    RETURN = "Return"
    BOTH = "Both"

    def covers(self, leg: Leg) -> bool:
        return self is Location.BOTH or self.value == leg.value


@dataclass(frozen=True)
class NoEve:
    def describe(self) -> str:
        return "none"


@dataclass(frozen=True)
class InterceptResendFreq:
    location: Location = Location.RETURN
    probability: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError(f"intercept probability must lie in [0, 1], got {self.probability}")

    def describe(self) -> str:
        return f"intercept:{self.location.value.lower()}:{self.probability:g}"


@dataclass(frozen=True)
class PassiveTap:
    reflectivity: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.reflectivity < 1.0:
            raise ValueError(f"tap reflectivity must lie in [0, 1), got {self.reflectivity}")

    def describe(self) -> str:
        return f"tap:{self.reflectivity:g}"


@dataclass(frozen=True)
class StrongProbe:
    mean_photons: float = 100.0

    def __post_init__(self):
        if not self.mean_photons > 0:
            raise ValueError(f"probe mean photon number must be > 0, got {self.mean_photons}")

    def describe(self) -> str:
        return f"probe:{self.mean_photons:g}"


EveStrategy = Union[NoEve, InterceptResendFreq, PassiveTap, StrongProbe]


@dataclass(frozen=True)
class EveLogEntry:
    attacked: bool = False
    measured_freq: FrequencyBin | None = None
    tapped_photons: int = 0
    probe_readout: AliceChoice | None = None


@dataclass(frozen=True)
class Branch:
    """One outcome of Eve's action with its probability given a photon is present."""

    prob: float
    state: PureState
    entry: EveLogEntry


_UNTOUCHED = EveLogEntry()


def attack_branches(s: PureState, strategy: EveStrategy, leg: Leg) -> tuple[Branch, ...]:
    """Exact enumeration of what Eve's action can do to ``s``.

    Probabilities are conditional on the photon being present and sum to 1.
    Collapsed states keep the input norm, so photon loss upstream of Eve
    still factors out of every branch.
    """
    if isinstance(strategy, InterceptResendFreq) and strategy.location.covers(leg):
        total = s.norm2()
        p = strategy.probability
        if total == 0.0 or p == 0.0:
            return (Branch(1.0, s, _UNTOUCHED),)
        out = [] if p == 1.0 else [Branch(1.0 - p, s, _UNTOUCHED)]
        for f in FrequencyBin:
            part = s.restricted(lambda m, f=f: m.freq is f)
            w = part.norm2()
            if w == 0.0:
                continue
            collapsed = part.scaled(math.sqrt(total / w))
            out.append(Branch(p * w / total, collapsed, EveLogEntry(True, f)))
        return tuple(out)
    if isinstance(strategy, PassiveTap) and leg is Leg.RETURN:
        tapped = splitter_map(Path.CHANNEL, Path.EVE, strategy.reflectivity)(s)
        return (Branch(1.0, tapped, EveLogEntry(attacked=strategy.reflectivity > 0)),)
    return (Branch(1.0, s, _UNTOUCHED),)


def attack_state(
    s: PureState, strategy: EveStrategy, leg: Leg, rng: np.random.Generator
) -> tuple[PureState, EveLogEntry]:
    """Apply one sampled realization of ``strategy`` to ``s``.

    For a passive tap the returned state carries Eve's share on the
    eve-port path; ``tapped_photons`` is a draw of whether she caught it.
    """
    branches = attack_branches(s, strategy, leg)
    if len(branches) == 1:
        branch = branches[0]
    else:
        u = rng.random()
        acc = 0.0
        branch = branches[-1]
        for b in branches:
            acc += b.prob
            if u < acc:
                branch = b
                break
    entry = branch.entry
    if isinstance(strategy, PassiveTap) and leg is Leg.RETURN:
        caught = int(rng.random() < branch.state.weight(lambda m: m.path is Path.EVE))
        entry = EveLogEntry(entry.attacked, None, caught)
    return branch.state, entry


def reflected_mean_photons(choice: AliceChoice, alice: AliceKitConfig, probe_mean: float) -> dict[FrequencyBin, float]:
    """Mean reflected photons per frequency for a two-colour probe of mean ``probe_mean``.

    The probe mimics Bob's pulse: half its photons at each frequency.
    """
    out = {}
    for f in FrequencyBin:
        state = make_single_mode_state(ModeLabel(f, Path.CHANNEL, 0, Pol.H))
        reflected, _ = alice_transform(state, choice, alice)
        out[f] = 0.5 * probe_mean * reflected.norm2()
    return out


def probe_alice(
    strategy: StrongProbe, choice: AliceChoice, alice: AliceKitConfig, rng: np.random.Generator
) -> tuple[AliceChoice, int]:
    """Read Alice's setting with a bright probe; return (readout, extra D3 photons).

    Eve counts the reflected photons per frequency. Light in both bins means
    no filter, light in one bin names that filter, and an empty reflection
    leaves her guessing uniformly.
    """
    means = reflected_mean_photons(choice, alice, strategy.mean_photons)
    seen = {f for f, m in means.items() if rng.poisson(m) > 0}
    if seen == set(FrequencyBin):
        readout = AliceChoice.NO_FILTER
    elif seen == {FrequencyBin.BASE}:
        readout = AliceChoice.FILTER_OMEGA
    elif seen == {FrequencyBin.SHIFTED}:
        readout = AliceChoice.FILTER_OMEGA_DELTA
    else:
        readout = list(AliceChoice)[int(rng.integers(3))]
    extra = int(rng.poisson(alice.det_d3.efficiency * alice.tap_ratio * strategy.mean_photons))
    return readout, extra


@dataclass(frozen=True)
class SideChannelResult:
    """Reflected-intensity comparison between no-filter and filtered rounds."""

    analytic_no_filter: float
    analytic_filtered: float
    mean_no_filter: float
    mean_filtered: float
    z: float

    @property
    def analytic_ratio(self) -> float:
        return self.analytic_no_filter / self.analytic_filtered


def intensity_side_channel(
    choices: list[AliceChoice], alice: AliceKitConfig, probe_mean: float, rng: np.random.Generator
) -> SideChannelResult:
    """Eve probes every round and counts reflected photons in Alice's passband.

    Filters lose light on both passes, so without the attenuator no-filter
    rounds reflect visibly more. ``z`` is the two-sample statistic of the
    no-filter minus filtered mean counts.
    """
    trans = {c: passband_transmission(c, alice) for c in AliceChoice}
    counts = rng.poisson([probe_mean * trans[c] for c in choices])
    open_mask = np.array([c is AliceChoice.NO_FILTER for c in choices])
    a, b = counts[open_mask], counts[~open_mask]
    var = a.var(ddof=1) / len(a) + b.var(ddof=1) / len(b)
    diff = a.mean() - b.mean()
    z = diff / math.sqrt(var) if var > 0 else (0.0 if diff == 0 else math.copysign(math.inf, diff))
    filtered = 0.5 * (trans[AliceChoice.FILTER_OMEGA] + trans[AliceChoice.FILTER_OMEGA_DELTA])
    return SideChannelResult(
        probe_mean * trans[AliceChoice.NO_FILTER], probe_mean * filtered, float(a.mean()), float(b.mean()), float(z)
    )


def parse_eve(text: str | None) -> EveStrategy:
    """Parse ``none``, ``intercept[:forward|return|both[:p]]``, ``tap:q`` or ``probe:mu``."""
    if text is None:
        return NoEve()
    parts = [p.strip() for p in str(text).strip().lower().split(":")]
    kind, args = parts[0], parts[1:]
    try:
        if kind in ("", "none"):
            return NoEve()
        if kind in ("intercept", "intercept-resend", "interceptresendfreq"):
            loc = Location(args[0].capitalize()) if args else Location.RETURN
            p = float(args[1]) if len(args) > 1 else 1.0
            return InterceptResendFreq(loc, p)
        if kind in ("tap", "passivetap"):
            return PassiveTap(float(args[0]) if args else 0.5)
        if kind in ("probe", "strongprobe"):
            return StrongProbe(float(args[0]) if args else 100.0)
    except (ValueError, IndexError) as exc:
        raise ValueError(f"invalid eavesdropper setting {text!r}: {exc}") from None
    raise ValueError(f"unknown eavesdropper strategy {text!r}")
