"""One-to-any key distribution over a passive branch network.

The hub hosts the only source, AOM and detector pair. A passive splitter
sends each single photon to exactly one leaf, whose station holds the
filters and Faraday mirror. The hub learns which leaf answered from the
round-trip time, so the leaves' ranges must be pairwise distinguishable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import streams
from .adversary import EveLogEntry
from .bench import PulseRecord, sample_pulse
from .protocol import (
    AlarmReport,
    SessionMeta,
    SessionParams,
    SiftResult,
    Transcript,
    assess,
    draw_choice,
    session_meta,
)
from .stations import BobSetting

__all__ = [
    "Leaf",
    "Topology",
    "TopologyError",
    "DuplicateRangeError",
    "EmptyTopologyError",
    "validate_topology",
    "route_pulse",
    "identify_receiver",
    "run_network_session",
    "LeafResult",
    "NetworkSessionResult",
    "UNIDENTIFIED",
]

UNIDENTIFIED = None


class TopologyError(ValueError):
    pass


class DuplicateRangeError(TopologyError):
    pass


class EmptyTopologyError(TopologyError):
    pass


@dataclass(frozen=True)
class Leaf:
    id: str
    round_trip_bins: int
    splitter_weight: float = 1.0


@dataclass(frozen=True)
class Topology:
    leaves: tuple[Leaf, ...]
    timing_resolution_bins: int = 1

    def __post_init__(self):
        object.__setattr__(self, "leaves", tuple(self.leaves))

    def weights(self) -> np.ndarray:
        w = np.array([leaf.splitter_weight for leaf in self.leaves], dtype=float)
        return w / w.sum()

    def position(self, leaf_id: str) -> int:
        for i, leaf in enumerate(self.leaves):
            if leaf.id == leaf_id:
                return i
        raise KeyError(leaf_id)


def validate_topology(t: Topology) -> None:
    """Raise unless every pair of leaves is separated by the timing resolution."""
    if not t.leaves:
        raise EmptyTopologyError("topology has no leaves")
    if t.timing_resolution_bins < 1:
        raise TopologyError("timingResolutionBins must be >= 1")
    ids = [leaf.id for leaf in t.leaves]
    if len(set(ids)) != len(ids):
        raise TopologyError(f"duplicate leaf ids in {ids}")
    for leaf in t.leaves:
        if leaf.round_trip_bins < 0:
            raise TopologyError(f"leaf {leaf.id}: roundTripBins must be >= 0")
        if not leaf.splitter_weight >= 0 or math.isinf(leaf.splitter_weight):
            raise TopologyError(f"leaf {leaf.id}: splitterWeight must be a finite non-negative number")
    if sum(leaf.splitter_weight for leaf in t.leaves) <= 0:
        raise TopologyError("splitter weights must not all be zero")
    ordered = sorted(t.leaves, key=lambda leaf: leaf.round_trip_bins)
    for a, b in zip(ordered, ordered[1:]):
        if b.round_trip_bins - a.round_trip_bins < t.timing_resolution_bins:
            raise DuplicateRangeError(
                f"leaves {a.id} and {b.id} are {b.round_trip_bins - a.round_trip_bins} bins apart, "
                f"below the timing resolution {t.timing_resolution_bins}: ranges must differ"
            )


def route_pulse(t: Topology, rng: np.random.Generator) -> str:
    """Send one photon through the splitter; it reaches exactly one leaf."""
    u = rng.random()
    acc = 0.0
    w = t.weights()
    for leaf, p in zip(t.leaves, w):
        acc += p
        if u < acc and p > 0:
            return leaf.id
    return next(leaf.id for leaf, p in zip(reversed(t.leaves), w[::-1]) if p > 0)


def identify_receiver(arrival_bin: int, t: Topology) -> str | None:
    """Leaf whose round trip lies nearest ``arrival_bin`` within the timing resolution.

    Returns ``None`` when nothing is in range or two leaves are equally near.
    """
    best, best_d, tie = None, None, False
    for leaf in t.leaves:
        d = abs(arrival_bin - leaf.round_trip_bins)
        if d > t.timing_resolution_bins:
            continue
        if best_d is None or d < best_d:
            best, best_d, tie = leaf.id, d, False
        elif d == best_d:
            tie = True
    return None if tie else best


@dataclass
class LeafResult:
    sift: SiftResult
    alarms: AlarmReport
    pulses: int


@dataclass
class NetworkSessionResult:
    per_leaf: dict[str, LeafResult]
    unidentified_count: int
    transcript: Transcript = field(repr=False)


def run_network_session(p: SessionParams, t: Topology) -> NetworkSessionResult:
    """Key distribution from one hub to every leaf of ``t``.

    The hub stream draws the AOM setting and the photon physics, the routing
    stream picks the leaf, and each leaf draws its filter choice from its own
    stream keyed by (seed, leaf, pulse index).
    """
    validate_topology(t)
    rngs = streams.PulseStreams(p.seed)
    period = p.pulse_period_bins
    records: list[PulseRecord] = []
    log: list[EveLogEntry] = []
    leaf_by_id = {leaf.id: (i, leaf) for i, leaf in enumerate(t.leaves)}
    for i in range(p.num_pulses):
        target = route_pulse(t, rngs.at(streams.ROUTE, i))
        pos, leaf = leaf_by_id[target]
        choice = draw_choice(rngs.at(streams.LEAF_BASE + pos, i).random(), p.alice_choice_probs)
        hub = rngs.at(streams.HUB, i)
        setting = BobSetting.AOM_ON if hub.random() < p.bob_on_prob else BobSetting.AOM_OFF
        emit = i * period
        rec, entry = sample_pulse(
            i, choice, setting, p.bob, p.alice, p.channel, p.eve, hub,
            emit_bin=emit, arrival_offset=leaf.round_trip_bins,
        )
        seen_as = identify_receiver(rec.return_bin - rec.emit_bin, t)
        records.append(PulseRecord(rec.index, rec.choice, rec.setting, rec.click, rec.d3_photons,
                                   rec.emit_bin, rec.return_bin, seen_as))
        log.append(entry)
    transcript = Transcript(session_meta(p), records, log)
    per_leaf, unidentified = split_by_leaf(records, transcript.meta, t)
    return NetworkSessionResult(per_leaf, unidentified, transcript)


def split_by_leaf(
    records: Sequence[PulseRecord], meta: SessionMeta, t: Topology
) -> tuple[dict[str, LeafResult], int]:
    """Group records by identified leaf and evaluate each leaf's session."""
    groups: dict[str, list[PulseRecord]] = {leaf.id: [] for leaf in t.leaves}
    unidentified = 0
    for rec in records:
        if rec.leaf_id is None or rec.leaf_id not in groups:
            unidentified += 1
        else:
            groups[rec.leaf_id].append(rec)
    out = {}
    for pos, leaf in enumerate(t.leaves):
        recs = groups[leaf.id]
        s, alarms = assess(recs, meta, leaf_position=pos)
        out[leaf.id] = LeafResult(s, alarms, len(recs))
    return out, unidentified
