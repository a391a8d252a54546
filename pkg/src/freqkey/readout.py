"""Threshold detection of a propagated photon and seeded click sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping

import numpy as np

from .modes import TOL, Path, PureState

__all__ = [
    "DetectorModel",
    "ClickOutcome",
    "OutcomeDistribution",
    "PortWeights",
    "port_weights",
    "threshold_outcome",
    "distribution",
    "sample_detection",
    "DEFAULT_ASSIGNMENT",
]


@dataclass(frozen=True)
class DetectorModel:
    """Non-photon-number-resolving detector.

    Attributes:
        efficiency: probability that an arriving photon produces a click.
        dark_prob: probability of a spurious click per gate.
    """

    efficiency: float = 1.0
    dark_prob: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError(f"detector efficiency must lie in [0, 1], got {self.efficiency}")
        if not 0.0 <= self.dark_prob < 1.0:
            raise ValueError(f"dark-click probability must lie in [0, 1), got {self.dark_prob}")


IDEAL_DETECTOR = DetectorModel()


class ClickOutcome(Enum):
    D1 = "D1"
    D2 = "D2"
    NONE = "none"
    DOUBLE = "double"


# Index order used by the vectorized sampler.
CLICK_ORDER = (ClickOutcome.D1, ClickOutcome.D2, ClickOutcome.DOUBLE, ClickOutcome.NONE)


@dataclass(frozen=True)
class OutcomeDistribution:
    """Exact per-gate outcome probabilities at Bob's two detectors.

    ``p_double`` holds gates where both D1 and D2 fire; it is zero whenever
    dark clicks are off and the source emits at most one photon.
    ``d3_expected`` is the mean photon number arriving at Alice's monitor.
    """

    p_d1: float
    p_d2: float
    p_none: float
    p_double: float = 0.0
    d3_expected: float = 0.0

    def __post_init__(self):
        probs = (self.p_d1, self.p_d2, self.p_none, self.p_double)
        if min(probs) < -TOL:
            raise ValueError(f"negative probability in {probs}")
        if abs(math.fsum(probs) - 1.0) > TOL:
            raise ValueError(f"probabilities sum to {math.fsum(probs)!r}, expected 1")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.p_d1, self.p_d2, self.p_none)

    def isclose(self, other: "OutcomeDistribution", tol: float = TOL) -> bool:
        mine = (self.p_d1, self.p_d2, self.p_none, self.p_double)
        theirs = (other.p_d1, other.p_d2, other.p_none, other.p_double)
        return all(abs(a - b) <= tol for a, b in zip(mine, theirs))

    def click_probability(self) -> float:
        return self.p_d1 + self.p_d2 + self.p_double


@dataclass(frozen=True)
class PortWeights:
    """Where a single photon ends up: squared amplitude per detector port."""

    d1: float = 0.0
    d2: float = 0.0
    monitor: float = 0.0
    eve: float = 0.0

    @property
    def lost(self) -> float:
        return max(0.0, 1.0 - self.d1 - self.d2 - self.monitor - self.eve)

    def scaled(self, w: float) -> "PortWeights":
        return PortWeights(w * self.d1, w * self.d2, w * self.monitor, w * self.eve)

    def __add__(self, other: "PortWeights") -> "PortWeights":
        return PortWeights(
            self.d1 + other.d1, self.d2 + other.d2, self.monitor + other.monitor, self.eve + other.eve
        )


DEFAULT_ASSIGNMENT: Mapping[Path, str | None] = {
    Path.DET1: "D1",
    Path.DET2: "D2",
    Path.MONITOR: "D3",
    Path.EVE: "EVE",
    Path.LOST: None,
}


def port_weights(s: PureState, assignment: Mapping[Path, str | None] = DEFAULT_ASSIGNMENT) -> PortWeights:
    occupied = s.paths()
    missing = occupied - set(assignment)
    if missing:
        names = ", ".join(sorted(p.value for p in missing))
        raise ValueError(f"occupied path(s) not assigned to a detector: {names}")
    w = {"D1": 0.0, "D2": 0.0, "D3": 0.0, "EVE": 0.0}
    for label, amp in s.items():
        det = assignment[label.path]
        if det is not None:
            w[det] += abs(amp) ** 2
    return PortWeights(w["D1"], w["D2"], w["D3"], w["EVE"])


def threshold_outcome(
    weights: PortWeights,
    det1: DetectorModel = IDEAL_DETECTOR,
    det2: DetectorModel = IDEAL_DETECTOR,
    mean_photons: float | None = None,
) -> OutcomeDistribution:
    """Click statistics of two threshold detectors.

    With ``mean_photons=None`` the input is exactly one photon. Otherwise the
    photon number is Poisson with that mean and every photon follows
    ``weights`` independently, so the photon counts at D1 and D2 are
    independent Poisson variables.
    """
    q1 = det1.efficiency * weights.d1
    q2 = det2.efficiency * weights.d2
    d1, d2 = det1.dark_prob, det2.dark_prob
    if mean_photons is None:
        rest = max(0.0, 1.0 - q1 - q2)
        p1 = q1 * (1 - d2) + rest * d1 * (1 - d2)
        p2 = q2 * (1 - d1) + rest * d2 * (1 - d1)
        pd = q1 * d2 + q2 * d1 + rest * d1 * d2
        pn = rest * (1 - d1) * (1 - d2)
        d3 = weights.monitor
    else:
        c1 = 1.0 - math.exp(-mean_photons * q1) * (1 - d1)
        c2 = 1.0 - math.exp(-mean_photons * q2) * (1 - d2)
        p1 = c1 * (1 - c2)
        p2 = c2 * (1 - c1)
        pd = c1 * c2
        pn = (1 - c1) * (1 - c2)
        d3 = weights.monitor * mean_photons
    return OutcomeDistribution(p1, p2, pn, pd, d3)


def distribution(
    s: PureState,
    assignment: Mapping[Path, str | None] = DEFAULT_ASSIGNMENT,
    det: DetectorModel | Mapping[str, DetectorModel] = IDEAL_DETECTOR,
    mean_photons: float | None = None,
) -> OutcomeDistribution:
    """Born-rule readout of ``s`` through the detectors named in ``assignment``."""
    if isinstance(det, DetectorModel):
        det1 = det2 = det
    else:
        det1 = det.get("D1", IDEAL_DETECTOR)
        det2 = det.get("D2", IDEAL_DETECTOR)
    return threshold_outcome(port_weights(s, assignment), det1, det2, mean_photons)


def sample_detection(dist: OutcomeDistribution, rng: np.random.Generator, size: int | None = None):
    """Draw click outcomes from ``dist``.

    Returns a single :class:`ClickOutcome`, or with ``size`` an integer array
    of indices into ``CLICK_ORDER``. One uniform is consumed per draw.
    """
    cuts = np.cumsum([dist.p_d1, dist.p_d2, dist.p_double])
    if size is None:
        return CLICK_ORDER[int(np.searchsorted(cuts, rng.random(), side="right"))]
    return np.searchsorted(cuts, rng.random(size), side="right")
