"""Invariant checks runnable from the command line.

Each check returns a :class:`Check`; failures are report entries, never
exceptions. ``aom_phase`` and ``dark_prob`` perturb the simulated hardware so
the suite can be seen to fail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bench import round_trip_distribution
from .modes import (
    FrequencyBin,
    ModeLabel,
    Path,
    Pol,
    PureState,
    coupler_map,
    pbs_map,
    projector_map,
    relabel_map,
    shift_time_map,
    splitter_map,
)
from .network import Leaf, Topology, identify_receiver, route_pulse, validate_topology
from .protocol import SessionParams, run_session, sift
from .readout import DetectorModel, sample_detection
from .stations import AliceChoice, BobKitConfig, BobSetting, SinglePhoton

__all__ = ["Check", "CANONICAL_TABLE", "run_selftest"]

NF, FO, FD = AliceChoice.NO_FILTER, AliceChoice.FILTER_OMEGA, AliceChoice.FILTER_OMEGA_DELTA
ON, OFF = BobSetting.AOM_ON, BobSetting.AOM_OFF

# (pD1, pD2, pNone) per (choice, setting) for one photon through ideal optics.
CANONICAL_TABLE = {
    (NF, ON): (1.0, 0.0, 0.0),
    (NF, OFF): (0.5, 0.5, 0.0),
    (FO, ON): (0.25, 0.25, 0.5),
    (FO, OFF): (0.5, 0.0, 0.5),
    (FD, ON): (0.25, 0.25, 0.5),
    (FD, OFF): (0.0, 0.5, 0.5),
}


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}" + (f"  ({self.detail})" if self.detail else "")


def _random_state(rng: np.random.Generator, n: int = 6) -> PureState:
    amps = {}
    paths = [Path.CHANNEL, Path.SHORT_ARM, Path.LONG_ARM, Path.MONITOR]
    for _ in range(n):
        label = ModeLabel(
            FrequencyBin.BASE if rng.random() < 0.5 else FrequencyBin.SHIFTED,
            paths[int(rng.integers(len(paths)))],
            int(rng.integers(4)),
            Pol.H if rng.random() < 0.5 else Pol.V,
        )
        amps[label] = complex(rng.normal(), rng.normal())
    s = PureState(amps)
    return s.scaled(1 / s.norm())


def check_canonical_table(bob: BobKitConfig) -> Check:
    worst, where = 0.0, None
    for (choice, setting), expected in CANONICAL_TABLE.items():
        got = round_trip_distribution(choice, setting, bob).as_tuple()
        err = max(abs(a - b) for a, b in zip(got, expected))
        if err > worst:
            worst, where = err, (choice.value, setting.value, got)
    if worst <= 1e-12:
        return Check("canonical outcome table", True, f"max error {worst:.1e}")
    c, s, got = where
    return Check("canonical outcome table", False, f"({c}, {s}) -> {tuple(round(x, 6) for x in got)}")


def check_isometries(rng: np.random.Generator, trials: int = 200) -> Check:
    maps = [
        coupler_map(Path.SHORT_ARM, Path.LONG_ARM),
        coupler_map(Path.LONG_ARM, Path.SHORT_ARM, phase=0.7),
        splitter_map(Path.CHANNEL, Path.MONITOR, 0.3),
        pbs_map(Path.CHANNEL, Path.SHORT_ARM, Path.LONG_ARM),
        relabel_map(Path.CHANNEL, Path.CHANNEL, pol_flip=True),
        shift_time_map(Path.LONG_ARM, 3),
    ]
    worst = 0.0
    for _ in range(trials):
        s = _random_state(rng)
        for m in maps:
            worst = max(worst, abs(m(s).norm() - s.norm()))
    return Check("isometry preservation", worst <= 1e-12, f"max drift {worst:.1e}")


def check_projector(rng: np.random.Generator) -> Check:
    ok = True
    for f in FrequencyBin:
        p = projector_map(f)
        for _ in range(50):
            s = _random_state(rng)
            once = p(s)
            ok &= p(once).isclose(once) and once.frequencies() <= {f}
    return Check("projector idempotence and frequency closure", ok)


def check_sampling(bob: BobKitConfig, rng: np.random.Generator, n: int = 20000) -> Check:
    dist = round_trip_distribution(NF, OFF, bob)
    draws = sample_detection(dist, rng, size=n)
    frac = float(np.mean(draws == 0))
    sigma = math.sqrt(dist.p_d1 * (1 - dist.p_d1) / n)
    ok = abs(frac - dist.p_d1) <= 4 * sigma + 1e-15
    return Check("Monte Carlo sampling agreement", ok, f"D1 fraction {frac:.4f} vs {dist.p_d1:.4f}")


def check_partition(bob: BobKitConfig, seed: int) -> Check:
    p = SessionParams(num_pulses=3000, bob=bob, seed=seed)
    t = run_session(p)
    s = sift(t)
    ok = s.total == p.num_pulses
    return Check("sifting partition", ok, f"{s.total} of {p.num_pulses} accounted, {s.double_click_count} double")


def check_key_agreement(bob: BobKitConfig, seed: int) -> Check:
    t = run_session(SessionParams(num_pulses=3000, bob=bob, seed=seed))
    s = sift(t)
    ok = s.key_alice == s.key_bob and s.group1_d2 == 0
    return Check("clean-run key agreement", ok, f"key {len(s.key_alice)} bits, control D2 {s.group1_d2}")


def check_network(rng: np.random.Generator) -> Check:
    topo = Topology(tuple(Leaf(f"bob{i}", 10 * (i + 1)) for i in range(8)), 5)
    validate_topology(topo)
    by_id = {leaf.id: leaf for leaf in topo.leaves}
    for _ in range(2000):
        target = route_pulse(topo, rng)
        if identify_receiver(by_id[target].round_trip_bins, topo) != target:
            return Check("network timing bijection", False, f"leaf {target} misidentified")
    return Check("network timing bijection", True, "8 leaves")


def run_selftest(aom_phase: float = 0.0, dark_prob: float = 0.0, seed: int = 1) -> list[Check]:
    det = DetectorModel(1.0, dark_prob)
    bob = BobKitConfig(aom_phase=aom_phase, source=SinglePhoton(), det_d1=det, det_d2=det)
    rng = np.random.default_rng(seed)
    return [
        check_canonical_table(bob),
        check_isometries(rng),
        check_projector(rng),
        check_sampling(bob, rng),
        check_partition(bob, seed),
        check_key_agreement(bob, seed),
        check_network(rng),
    ]
