"""Discrete-mode single-photon states and linear-optical transfer maps.

A photon is described by complex amplitudes over a small set of optical modes.
Each mode is a (frequency bin, path, time bin, polarization) label. Maps are
stored as column rules: a function sending one input mode to the list of
output modes it feeds, which keeps them sparse no matter how many time bins a
state touches.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum
from types import MappingProxyType
from typing import Callable, Iterable, Mapping, NamedTuple

__all__ = [
    "FrequencyBin",
    "Path",
    "Pol",
    "ModeLabel",
    "PureState",
    "LinearMap",
    "make_single_mode_state",
    "overlap",
    "compose",
    "apply_map",
    "identity_map",
    "splitter_map",
    "coupler_map",
    "projector_map",
    "scale_map",
    "shift_time_map",
    "relabel_map",
    "path_projector",
    "pbs_map",
    "SWAP_BINS",
    "chain",
    "columns_orthonormal",
]

TOL = 1e-12
MAX_OCCUPIED_MODES = 16


class FrequencyBin(Enum):
    BASE = "Base"  # omega
    SHIFTED = "Shifted"  # omega + delta

    def other(self) -> "FrequencyBin":
        return FrequencyBin.SHIFTED if self is FrequencyBin.BASE else FrequencyBin.BASE


class Path(Enum):
    CHANNEL = "channel"
    SHORT_ARM = "short-arm"
    LONG_ARM = "long-arm"
    DET1 = "det1-port"
    DET2 = "det2-port"
    MONITOR = "monitor-port"
    EVE = "eve-port"
    LOST = "lost"


class Pol(Enum):
    H = "H"
    V = "V"

    def flipped(self) -> "Pol":
        return Pol.V if self is Pol.H else Pol.H


class ModeLabel(NamedTuple):
    freq: FrequencyBin
    path: Path
    time: int = 0
    pol: Pol = Pol.H

    def replace(self, **kwargs) -> "ModeLabel":
        return self._replace(**kwargs)


def _check_label(label: ModeLabel) -> ModeLabel:
    if not isinstance(label.freq, FrequencyBin):
        raise ValueError(f"invalid frequency bin: {label.freq!r}")
    if not isinstance(label.path, Path):
        raise ValueError(f"invalid path identifier: {label.path!r}")
    if not isinstance(label.pol, Pol):
        raise ValueError(f"invalid polarization: {label.pol!r}")
    if int(label.time) != label.time or label.time < 0:
        raise ValueError(f"time bin must be a non-negative integer, got {label.time!r}")
    return label


class PureState:
    """Immutable amplitude map over optical modes.

    The squared norm is the probability that the photon is still present;
    ``1 - norm2`` is the loss probability. Amplitudes below ``1e-15`` in
    magnitude are dropped on construction.
    """

    __slots__ = ("_amps", "_hash")

    def __init__(self, amplitudes: Mapping[ModeLabel, complex] | None = None):
        amps: dict[ModeLabel, complex] = {}
        for label, amp in (amplitudes or {}).items():
            amp = complex(amp)
            if abs(amp) > 1e-15:
                amps[_check_label(label)] = amp
        if len(amps) > MAX_OCCUPIED_MODES:
            raise ValueError(f"state occupies {len(amps)} modes (limit {MAX_OCCUPIED_MODES})")
        self._amps = MappingProxyType(amps)
        self._hash: int | None = None

    @property
    def amplitudes(self) -> Mapping[ModeLabel, complex]:
        return self._amps

    def __getitem__(self, label: ModeLabel) -> complex:
        return self._amps.get(label, 0j)

    def __iter__(self):
        return iter(self._amps)

    def __len__(self) -> int:
        return len(self._amps)

    def items(self):
        return self._amps.items()

    def norm2(self) -> float:
        return math.fsum(abs(a) ** 2 for a in self._amps.values())

    def norm(self) -> float:
        return math.sqrt(self.norm2())

    def weight(self, predicate: Callable[[ModeLabel], bool]) -> float:
        """Squared norm of the modes selected by ``predicate``."""
        return math.fsum(abs(a) ** 2 for m, a in self._amps.items() if predicate(m))

    def scaled(self, factor: complex) -> "PureState":
        return PureState({m: a * factor for m, a in self._amps.items()})

    def restricted(self, predicate: Callable[[ModeLabel], bool]) -> "PureState":
        return PureState({m: a for m, a in self._amps.items() if predicate(m)})

    def frequencies(self) -> set[FrequencyBin]:
        return {m.freq for m in self._amps}

    def paths(self) -> set[Path]:
        return {m.path for m in self._amps}

    def __add__(self, other: "PureState") -> "PureState":
        out = dict(self._amps)
        for m, a in other.items():
            out[m] = out.get(m, 0j) + a
        return PureState(out)

    def isclose(self, other: "PureState", tol: float = TOL) -> bool:
        keys = set(self._amps) | set(other.amplitudes)
        return all(abs(self[k] - other[k]) <= tol for k in keys)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PureState):
            return NotImplemented
        return dict(self._amps) == dict(other.amplitudes)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._amps.items()))
        return self._hash

    def __repr__(self) -> str:
        terms = ", ".join(
            f"({m.freq.value},{m.path.value},t={m.time},{m.pol.value}): {a:.6g}"
            for m, a in sorted(self._amps.items(), key=lambda kv: repr(kv[0]))
        )
        return f"PureState({{{terms}}})"


Column = tuple[tuple[ModeLabel, complex], ...]


@dataclass(frozen=True)
class LinearMap:
    """Sparse linear transfer operator on the mode space.

    ``rule`` returns the image column of one basis mode. Modes the component
    does not touch must map to themselves with amplitude 1.
    """

    rule: Callable[[ModeLabel], Column]
    isometry: bool
    name: str = ""

    def column(self, label: ModeLabel) -> Column:
        return self.rule(label)

    def __call__(self, state: PureState) -> PureState:
        return apply_map(self, state)

    def __matmul__(self, other: "LinearMap") -> "LinearMap":
        return compose(self, other)


def _identity_rule(label: ModeLabel) -> Column:
    return ((label, 1.0 + 0j),)


def identity_map() -> LinearMap:
    return LinearMap(_identity_rule, True, "identity")


def apply_map(m: LinearMap, s: PureState) -> PureState:
    out: dict[ModeLabel, complex] = {}
    for label, amp in s.items():
        for target, coeff in m.rule(label):
            out[target] = out.get(target, 0j) + coeff * amp
    return PureState(out)


def compose(f: LinearMap, g: LinearMap) -> LinearMap:
    """Return the map ``s -> f(g(s))``."""

    def rule(label: ModeLabel) -> Column:
        acc: dict[ModeLabel, complex] = {}
        for mid, c1 in g.rule(label):
            for target, c2 in f.rule(mid):
                acc[target] = acc.get(target, 0j) + c1 * c2
        return tuple((k, v) for k, v in acc.items() if abs(v) > 1e-15)

    name = f"{f.name}*{g.name}" if f.name and g.name else ""
    return LinearMap(rule, f.isometry and g.isometry, name)


def chain(*maps: LinearMap) -> LinearMap:
    """Compose maps in the order they are traversed (first one acts first)."""
    out = identity_map()
    for m in maps:
        out = compose(m, out)
    return out


def make_single_mode_state(label: ModeLabel) -> PureState:
    return PureState({_check_label(label): 1.0})


def overlap(a: PureState, b: PureState) -> complex:
    """Inner product <a|b>, conjugate-linear in ``a``."""
    small, large = (a, b) if len(a) <= len(b) else (b, a)
    total = 0j
    for label in small:
        total += a[label].conjugate() * b[label]
    return total


SWAP_BINS: Mapping[FrequencyBin, FrequencyBin] = MappingProxyType(
    {FrequencyBin.BASE: FrequencyBin.SHIFTED, FrequencyBin.SHIFTED: FrequencyBin.BASE}
)


def _complete_freq_rule(freq_rule: Mapping) -> dict[FrequencyBin, FrequencyBin]:
    # A two-bin rule must be a bijection for the coupler to stay unitary, so a
    # single given entry fixes the other one.
    rule = dict(freq_rule)
    for k, v in rule.items():
        if not isinstance(k, FrequencyBin) or not isinstance(v, FrequencyBin):
            raise ValueError(f"frequency rule maps outside {{Base, Shifted}}: {k!r} -> {v!r}")
    if len(rule) == 1:
        (k, v), = rule.items()
        rule[k.other()] = v.other()
    if set(rule) != set(FrequencyBin) or set(rule.values()) != set(FrequencyBin):
        raise ValueError("frequency rule must be a bijection on {Base, Shifted}")
    return rule


def splitter_map(
    port_a: Path,
    port_b: Path,
    reflectivity: float = 0.5,
    phase: float = 0.0,
    freq_rule: Mapping[FrequencyBin, FrequencyBin] | None = None,
) -> LinearMap:
    """Two-port beam splitter with optional frequency translation on the cross legs.

    Acts on (port_a, port_b) with the unitary
    ``[[t, r e^{i phase}], [r e^{-i phase}, -t]]``, ``t = sqrt(1 - R)``,
    ``r = sqrt(R)``. Columns are input ports, rows output ports. Cross
    (diffracted) legs relabel the frequency through ``freq_rule``; straight
    legs keep it.
    """
    if port_a == port_b:
        raise ValueError("splitter ports must differ")
    if not 0.0 <= reflectivity <= 1.0:
        raise ValueError(f"reflectivity must lie in [0, 1], got {reflectivity}")
    rule = _complete_freq_rule(freq_rule) if freq_rule is not None else {f: f for f in FrequencyBin}
    t = math.sqrt(1.0 - reflectivity)
    r = math.sqrt(reflectivity)
    eip = cmath.exp(1j * phase)

    def col(label: ModeLabel) -> Column:
        if label.path == port_a:
            return (
                (label, complex(t)),
                (label.replace(path=port_b, freq=rule[label.freq]), r / eip),
            )
        if label.path == port_b:
            return (
                (label.replace(path=port_a, freq=rule[label.freq]), r * eip),
                (label, complex(-t)),
            )
        return ((label, 1.0 + 0j),)

    return LinearMap(col, True, f"splitter({port_a.value},{port_b.value})")


def coupler_map(
    port_a: Path,
    port_b: Path,
    freq_rule: Mapping[FrequencyBin, FrequencyBin] = SWAP_BINS,
    phase: float = 0.0,
) -> LinearMap:
    """Acousto-optic modulator as a frequency-translating 50/50 coupler.

    The transmitted leg keeps the frequency; the diffracted leg is shifted up
    on the forward geometry and down on the return geometry, which on two bins
    is the same swap.
    """
    m = splitter_map(port_a, port_b, 0.5, phase, freq_rule)
    return LinearMap(m.rule, True, f"aom({port_a.value},{port_b.value},phi={phase:g})")


def projector_map(keep: FrequencyBin, amp_transmittance: float = 1.0) -> LinearMap:
    """Narrow band-pass filter: keeps one frequency bin scaled by ``amp_transmittance``."""
    if not 0.0 <= amp_transmittance <= 1.0:
        raise ValueError(f"amplitude transmittance must lie in [0, 1], got {amp_transmittance}")
    t = complex(amp_transmittance)

    def col(label: ModeLabel) -> Column:
        return ((label, t),) if label.freq == keep else ()

    return LinearMap(col, False, f"filter({keep.value})")


def scale_map(path: Path, amp: float) -> LinearMap:
    """Uniform amplitude attenuation on one path."""
    if not 0.0 <= amp <= 1.0:
        raise ValueError(f"amplitude factor must lie in [0, 1], got {amp}")
    a = complex(amp)

    def col(label: ModeLabel) -> Column:
        return ((label, a),) if label.path == path else ((label, 1.0 + 0j),)

    return LinearMap(col, amp == 1.0, f"scale({path.value},{amp:g})")


def path_projector(keep: Callable[[Path], bool]) -> LinearMap:
    def col(label: ModeLabel) -> Column:
        return ((label, 1.0 + 0j),) if keep(label.path) else ()

    return LinearMap(col, False, "path-projector")


def shift_time_map(path: Path, k: int) -> LinearMap:
    """Delay line: adds ``k`` time bins to every mode on ``path``."""
    if k < 0:
        raise ValueError("delay must be non-negative")

    def col(label: ModeLabel) -> Column:
        if label.path == path:
            return ((label.replace(time=label.time + k), 1.0 + 0j),)
        return ((label, 1.0 + 0j),)

    return LinearMap(col, True, f"delay({path.value},{k})")


def relabel_map(path_from: Path, path_to: Path, pol_flip: bool = False) -> LinearMap:
    """Swap two paths (or act on one), optionally flipping polarization.

    Implemented as an involution so it is unitary: ``path_from`` goes to
    ``path_to`` and vice versa. With ``path_from == path_to`` and
    ``pol_flip`` this is an ideal Faraday mirror.
    """

    def col(label: ModeLabel) -> Column:
        if label.path == path_from:
            target = path_to
        elif label.path == path_to:
            target = path_from
        else:
            return ((label, 1.0 + 0j),)
        pol = label.pol.flipped() if pol_flip else label.pol
        return ((label.replace(path=target, pol=pol), 1.0 + 0j),)

    return LinearMap(col, True, f"relabel({path_from.value}->{path_to.value})")


def pbs_map(
    common: Path, transmit_port: Path, reflect_port: Path, pass_pol: Pol = Pol.H
) -> LinearMap:
    """Polarizing beam splitter with a polarization controller in the reflected arm.

    ``pass_pol`` on ``common`` goes to ``transmit_port``; the orthogonal
    polarization is reflected into ``reflect_port`` and rotated to
    ``pass_pol``. The map is its own inverse, so the same component serves
    both directions of travel.
    """
    other = pass_pol.flipped()
    swaps = {
        (common, pass_pol): (transmit_port, pass_pol),
        (transmit_port, pass_pol): (common, pass_pol),
        (common, other): (reflect_port, pass_pol),
        (reflect_port, pass_pol): (common, other),
    }

    def col(label: ModeLabel) -> Column:
        hit = swaps.get((label.path, label.pol))
        if hit is None:
            return ((label, 1.0 + 0j),)
        return ((label.replace(path=hit[0], pol=hit[1]), 1.0 + 0j),)

    return LinearMap(col, True, "pbs")


def columns_orthonormal(m: LinearMap, labels: Iterable[ModeLabel], tol: float = TOL) -> bool:
    """Check column orthonormality of ``m`` over the given basis modes."""
    labels = list(labels)
    cols = [dict(m.rule(lbl)) for lbl in labels]
    for i, ci in enumerate(cols):
        for j in range(i, len(cols)):
            cj = cols[j]
            ip = sum(ci[k].conjugate() * cj.get(k, 0j) for k in ci)
            if abs(ip - (1.0 if i == j else 0.0)) > tol:
                return False
    return True
