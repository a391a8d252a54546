"""Key-distribution sessions: random settings, pulse loop, sifting, alarms.

After the pulses, Alice and Bob drop gates where neither detector fired and
sort the rest into three groups:

* control (no filter, AOM on): only D1 may fire; D2 clicks reveal Eve,
* key (a filter, AOM off): D1 means bit 0, D2 means bit 1,
* discarded (a filter, AOM on): Bob cannot tell the filters apart.

No filter with the AOM off carries no information either and is dropped as
a fourth category. Double clicks are dropped before grouping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import streams
from .adversary import EveLogEntry, EveStrategy, NoEve
from .bench import PulseRecord, round_trip_distribution, round_trip_fates, sample_pulse
from .readout import ClickOutcome
from .stations import AliceChoice, AliceKitConfig, BobKitConfig, BobSetting, ChannelConfig

__all__ = [
    "SessionParams",
    "SessionMeta",
    "Transcript",
    "SiftResult",
    "InterferenceAlarm",
    "IntensityAlarm",
    "QberEstimate",
    "AlarmReport",
    "run_session",
    "sift",
    "interference_alarm",
    "intensity_alarm",
    "qber_estimate",
    "assess",
    "session_meta",
]

CHOICES = (AliceChoice.NO_FILTER, AliceChoice.FILTER_OMEGA, AliceChoice.FILTER_OMEGA_DELTA)


@dataclass(frozen=True)
class SessionParams:
    num_pulses: int = 1000
    alice_choice_probs: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    bob_on_prob: float = 0.5
    bob: BobKitConfig = field(default_factory=BobKitConfig)
    alice: AliceKitConfig = field(default_factory=AliceKitConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    eve: EveStrategy = field(default_factory=NoEve)
    seed: int = 0
    disclosure_fraction: float = 0.2
    intensity_window: int = 100
    intensity_k: float = 5.0
    interference_sigma: float = 3.0

    def __post_init__(self):
        if self.num_pulses < 1:
            raise ValueError("numPulses must be >= 1")
        probs = tuple(float(p) for p in self.alice_choice_probs)
        if len(probs) != 3 or min(probs) < 0:
            raise ValueError("aliceChoiceProbs needs three non-negative entries")
        if abs(math.fsum(probs) - 1.0) > 1e-12:
            raise ValueError(f"aliceChoiceProbs: probabilities sum to 1 (got {math.fsum(probs)!r})")
        object.__setattr__(self, "alice_choice_probs", probs)
        if not 0.0 <= self.bob_on_prob <= 1.0:
            raise ValueError("bobOnProb must lie in [0, 1]")
        if not 0.0 <= self.disclosure_fraction <= 1.0:
            raise ValueError("disclosureFraction must lie in [0, 1]")
        if self.intensity_window < 1:
            raise ValueError("intensityWindow must be >= 1")

    @property
    def pulse_period_bins(self) -> int:
        """Emission spacing; the filter switch must settle between pulses."""
        return max(1, self.alice.switch_settling_bins)


@dataclass(frozen=True)
class SessionMeta:
    """What sifting and alarm evaluation need besides the records themselves."""

    seed: int
    num_pulses: int
    disclosure_fraction: float
    control_baseline: float
    d3_baseline: float
    intensity_window: int
    intensity_k: float
    interference_sigma: float


def control_baseline(bob: BobKitConfig, alice: AliceKitConfig, ch: ChannelConfig) -> float:
    """Expected D2 share of single clicks in the control group with no eavesdropper."""
    dist = round_trip_distribution(AliceChoice.NO_FILTER, BobSetting.AOM_ON, bob, alice, ch, NoEve())
    clicks = dist.p_d1 + dist.p_d2
    return dist.p_d2 / clicks if clicks > 0 else 0.0


def d3_baseline(bob: BobKitConfig, alice: AliceKitConfig, ch: ChannelConfig) -> float:
    """Expected D3 count per pulse with no probe (the inbound tap does not depend on Alice's choice)."""
    (fate,) = round_trip_fates(AliceChoice.NO_FILTER, BobSetting.AOM_ON, bob, alice, ch, NoEve())
    mean = bob.source.mean_photons or 1.0
    return alice.det_d3.efficiency * fate.weights.monitor * mean + alice.det_d3.dark_prob


def session_meta(p: SessionParams) -> SessionMeta:
    return SessionMeta(
        seed=p.seed,
        num_pulses=p.num_pulses,
        disclosure_fraction=p.disclosure_fraction,
        control_baseline=control_baseline(p.bob, p.alice, p.channel),
        d3_baseline=d3_baseline(p.bob, p.alice, p.channel),
        intensity_window=p.intensity_window,
        intensity_k=p.intensity_k,
        interference_sigma=p.interference_sigma,
    )


@dataclass
class Transcript:
    meta: SessionMeta
    records: list[PulseRecord]
    eve_log: list[EveLogEntry] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)


def draw_choice(u: float, probs: Sequence[float]) -> AliceChoice:
    if u < probs[0]:
        return CHOICES[0]
    if u < probs[0] + probs[1]:
        return CHOICES[1]
    return CHOICES[2]


def run_session(p: SessionParams, alice_choices: Sequence[AliceChoice] | None = None) -> Transcript:
    """Run ``p.num_pulses`` pulses.

    Each pulse draws from its own streams keyed by (seed, role, index), so a
    transcript is a pure function of the parameters. ``alice_choices``
    overrides Alice's random choices with a scripted sequence.
    """
    if alice_choices is not None and len(alice_choices) != p.num_pulses:
        raise ValueError("scripted choice sequence must have numPulses entries")
    rngs = streams.PulseStreams(p.seed)
    period = p.pulse_period_bins
    records, log = [], []
    for i in range(p.num_pulses):
        alice_u = rngs.at(streams.ALICE, i).random()
        choice = draw_choice(alice_u, p.alice_choice_probs) if alice_choices is None else alice_choices[i]
        hub = rngs.at(streams.HUB, i)
        setting = BobSetting.AOM_ON if hub.random() < p.bob_on_prob else BobSetting.AOM_OFF
        rec, entry = sample_pulse(i, choice, setting, p.bob, p.alice, p.channel, p.eve, hub, emit_bin=i * period)
        records.append(rec)
        log.append(entry)
    return Transcript(session_meta(p), records, log)


@dataclass
class SiftResult:
    key_alice: list[int]
    key_bob: list[int]
    group1_d1: int = 0
    group1_d2: int = 0
    group3_count: int = 0
    no_click_count: int = 0
    no_filter_off_count: int = 0
    double_click_count: int = 0

    @property
    def group1_total(self) -> int:
        return self.group1_d1 + self.group1_d2

    @property
    def group2_count(self) -> int:
        return len(self.key_alice)

    @property
    def total(self) -> int:
        return (
            self.group1_total
            + self.group2_count
            + self.group3_count
            + self.no_click_count
            + self.no_filter_off_count
            + self.double_click_count
        )


def sift(records: Sequence[PulseRecord] | Transcript) -> SiftResult:
    if isinstance(records, Transcript):
        records = records.records
    out = SiftResult([], [])
    for rec in records:
        if rec.click is ClickOutcome.NONE:
            out.no_click_count += 1
        elif rec.click is ClickOutcome.DOUBLE:
            out.double_click_count += 1
        elif rec.choice is AliceChoice.NO_FILTER:
            if rec.setting is BobSetting.AOM_ON:
                if rec.click is ClickOutcome.D1:
                    out.group1_d1 += 1
                else:
                    out.group1_d2 += 1
            else:
                out.no_filter_off_count += 1
        elif rec.setting is BobSetting.AOM_OFF:
            out.key_alice.append(rec.intended_bit)
            out.key_bob.append(rec.decoded_bit)
        else:
            out.group3_count += 1
    return out


@dataclass(frozen=True)
class InterferenceAlarm:
    alarm: bool
    indeterminate: bool
    fraction: float
    expected: float
    threshold: float
    clicks: int


def interference_alarm(s: SiftResult, expected: float = 0.0, n_sigma: float = 3.0) -> InterferenceAlarm:
    """Flag a control-group D2 share above ``expected`` by more than ``n_sigma`` binomial sigmas.

    ``expected`` is the D2 share dark clicks and detector inefficiency
    produce without an eavesdropper; with ideal detectors it is 0 and any
    control-group D2 click raises the alarm.
    """
    n = s.group1_total
    if n == 0:
        return InterferenceAlarm(False, True, 0.0, expected, math.nan, 0)
    frac = s.group1_d2 / n
    threshold = expected + n_sigma * math.sqrt(expected * (1 - expected) / n)
    return InterferenceAlarm(frac > threshold, False, frac, expected, threshold, n)


@dataclass(frozen=True)
class IntensityAlarm:
    alarm: bool
    baseline: float
    max_window_mean: float
    threshold: float
    window: int
    first_alarm_window: int | None


def intensity_alarm(
    records: Sequence[PulseRecord] | Transcript,
    window: int | None = None,
    k: float | None = None,
    baseline: float | None = None,
) -> IntensityAlarm:
    """Scan D3 counts in consecutive windows against the clean Poisson baseline.

    A window alarms when its mean count exceeds ``baseline`` by more than
    ``k`` Poisson sigmas of a ``window``-pulse mean.
    """
    if isinstance(records, Transcript):
        meta = records.meta
        window = meta.intensity_window if window is None else window
        k = meta.intensity_k if k is None else k
        baseline = meta.d3_baseline if baseline is None else baseline
        records = records.records
    window = 100 if window is None else window
    k = 5.0 if k is None else k
    baseline = 0.0 if baseline is None else baseline
    if window < 1:
        raise ValueError("window must be >= 1")
    counts = np.fromiter((r.d3_photons for r in records), dtype=float, count=len(records))
    worst, first = 0.0, None
    full_threshold = baseline + k * math.sqrt(baseline / window)
    for w, start in enumerate(range(0, len(counts), window)):
        chunk = counts[start : start + window]
        mean = float(chunk.mean())
        threshold = baseline + k * math.sqrt(baseline / len(chunk))
        worst = max(worst, mean)
        if mean > threshold and first is None:
            first = w
    return IntensityAlarm(first is not None, baseline, worst, full_threshold, window, first)


@dataclass
class QberEstimate:
    qber: float
    disclosed: int
    key_alice: list[int]
    key_bob: list[int]
    empty: bool = False


def qber_estimate(s: SiftResult, f: float, rng: np.random.Generator) -> QberEstimate:
    """Disclose ``ceil(f * len)`` random key positions and compare them.

    The disclosed positions are removed from the returned keys.
    """
    if not 0.0 <= f <= 1.0:
        raise ValueError("disclosure fraction must lie in [0, 1]")
    n = len(s.key_alice)
    if n == 0:
        return QberEstimate(0.0, 0, [], [], empty=True)
    m = math.ceil(f * n)
    picked = np.sort(rng.choice(n, size=m, replace=False)) if m else np.array([], dtype=int)
    errors = sum(s.key_alice[i] != s.key_bob[i] for i in picked)
    keep = np.ones(n, dtype=bool)
    keep[picked] = False
    ka = [b for b, k in zip(s.key_alice, keep) if k]
    kb = [b for b, k in zip(s.key_bob, keep) if k]
    return QberEstimate(errors / m if m else 0.0, m, ka, kb, empty=m == 0)


@dataclass
class AlarmReport:
    interference: InterferenceAlarm
    intensity: IntensityAlarm
    qber: QberEstimate

    @property
    def any_alarm(self) -> bool:
        return self.interference.alarm or self.intensity.alarm


def disclosure_rng(seed: int, leaf_position: int | None = None) -> np.random.Generator:
    rngs = streams.PulseStreams(seed)
    if leaf_position is None:
        return rngs.session(streams.DISCLOSURE)
    return rngs.at(streams.DISCLOSURE, leaf_position)


def assess(
    records: Sequence[PulseRecord], meta: SessionMeta, leaf_position: int | None = None
) -> tuple[SiftResult, AlarmReport]:
    """Sift ``records`` and evaluate every alarm with ``meta``'s thresholds."""
    s = sift(records)
    inter = interference_alarm(s, meta.control_baseline, meta.interference_sigma)
    inten = intensity_alarm(records, meta.intensity_window, meta.intensity_k, meta.d3_baseline)
    q = qber_estimate(s, meta.disclosure_fraction, disclosure_rng(meta.seed, leaf_position))
    return s, AlarmReport(inter, inten, q)
