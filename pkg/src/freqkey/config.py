"""Run configuration: a flat TOML file whose keys mirror the session fields.

Example::

    numPulses = 100000
    seed = 7
    source = "weak"
    mu = 0.1
    tapRatio = 0.5
    eve = "intercept:return:1"
    leaves = [
      {id = "bob1", roundTripBins = 10},
      {id = "bob2", roundTripBins = 20, splitterWeight = 2.0},
    ]
    timingResolutionBins = 5
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from pathlib import Path as FsPath
from typing import Any, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .adversary import EveStrategy, parse_eve
from .network import Leaf, Topology, TopologyError, validate_topology
from .protocol import SessionParams
from .readout import DetectorModel
from .stations import AliceKitConfig, BobKitConfig, ChannelConfig, SinglePhoton, WeakCoherent

__all__ = ["ConfigError", "RunConfig", "DEFAULTS", "load_config", "build_config", "config_echo"]


class ConfigError(ValueError):
    pass


DEFAULTS: dict[str, Any] = {
    "numPulses": 10000,
    "aliceChoiceProbs": [1 / 3, 1 / 3, 1 / 3],
    "bobOnProb": 0.5,
    "seed": 0,
    "disclosureFraction": 0.2,
    "aomPhase": 0.0,
    "armDelayBins": 1,
    "source": "weak",
    "mu": 0.1,
    "detD1Efficiency": 1.0,
    "detD1DarkProb": 0.0,
    "detD2Efficiency": 1.0,
    "detD2DarkProb": 0.0,
    "detD3Efficiency": 1.0,
    "detD3DarkProb": 0.0,
    "filterAmpTransmittance": 1.0,
    "tapRatio": 0.0,
    "attenuatorEnabled": False,
    "switchSettlingBins": 0,
    "channelAmpTransmittance": 1.0,
    "oneWayDelayBins": 0,
    "eve": "none",
    "intensityWindow": 100,
    "intensityK": 5.0,
    "interferenceSigma": 3.0,
    "leaves": [],
    "timingResolutionBins": 1,
    "outDir": None,
}

_INT_KEYS = {"numPulses", "seed", "armDelayBins", "switchSettlingBins", "oneWayDelayBins",
             "intensityWindow", "timingResolutionBins"}
_BOOL_KEYS = {"attenuatorEnabled"}
_STR_KEYS = {"source", "eve", "outDir"}
_LIST_KEYS = {"aliceChoiceProbs", "leaves"}


@dataclass(frozen=True)
class RunConfig:
    params: SessionParams
    topology: Topology | None
    out_dir: str | None
    values: Mapping[str, Any]

    @property
    def mu(self) -> float | None:
        return self.params.bob.source.mean_photons


def _coerce(key: str, value: Any) -> Any:
    if key in _BOOL_KEYS:
        if not isinstance(value, bool):
            raise ConfigError(f"field {key!r}: expected true/false, got {value!r}")
        return value
    if key in _INT_KEYS:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"field {key!r}: expected an integer, got {value!r}")
        return value
    if key in _STR_KEYS:
        if value is not None and not isinstance(value, str):
            raise ConfigError(f"field {key!r}: expected a string, got {value!r}")
        return value
    if key in _LIST_KEYS:
        if not isinstance(value, list):
            raise ConfigError(f"field {key!r}: expected a list, got {value!r}")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"field {key!r}: expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"field {key!r}: must be finite")
    return float(value)


def _topology(values: Mapping[str, Any]) -> Topology | None:
    raw = values["leaves"]
    if not raw:
        return None
    leaves = []
    for n, item in enumerate(raw):
        if not isinstance(item, dict):
            raise ConfigError(f"field 'leaves[{n}]': expected a table with id and roundTripBins")
        unknown = set(item) - {"id", "roundTripBins", "splitterWeight"}
        if unknown:
            raise ConfigError(f"field 'leaves[{n}]': unknown key(s) {sorted(unknown)}")
        try:
            leaves.append(Leaf(str(item["id"]), int(item["roundTripBins"]), float(item.get("splitterWeight", 1.0))))
        except KeyError as exc:
            raise ConfigError(f"field 'leaves[{n}]': missing {exc.args[0]!r}") from None
    topo = Topology(tuple(leaves), values["timingResolutionBins"])
    try:
        validate_topology(topo)
    except TopologyError as exc:
        raise ConfigError(f"field 'leaves': {exc}") from None
    return topo


def build_config(overrides: Mapping[str, Any] | None = None) -> RunConfig:
    """Apply ``overrides`` on top of the defaults and validate the result."""
    values = dict(DEFAULTS)
    for key, value in (overrides or {}).items():
        if key not in DEFAULTS:
            raise ConfigError(f"unknown field {key!r}")
        values[key] = _coerce(key, value)

    probs = values["aliceChoiceProbs"]
    if len(probs) != 3 or not all(isinstance(p, (int, float)) and not isinstance(p, bool) for p in probs):
        raise ConfigError("field 'aliceChoiceProbs': expected three numbers")
    if abs(math.fsum(probs) - 1.0) > 1e-12:
        raise ConfigError(f"field 'aliceChoiceProbs': probabilities sum to 1 violated (sum = {math.fsum(probs)!r})")
    if values["source"] not in ("single", "weak"):
        raise ConfigError(f"field 'source': expected 'single' or 'weak', got {values['source']!r}")

    try:
        source = SinglePhoton() if values["source"] == "single" else WeakCoherent(values["mu"])
        bob = BobKitConfig(
            aom_phase=values["aomPhase"],
            arm_delay_bins=values["armDelayBins"],
            source=source,
            det_d1=DetectorModel(values["detD1Efficiency"], values["detD1DarkProb"]),
            det_d2=DetectorModel(values["detD2Efficiency"], values["detD2DarkProb"]),
        )
        alice = AliceKitConfig(
            filter_amp_transmittance=values["filterAmpTransmittance"],
            tap_ratio=values["tapRatio"],
            attenuator_enabled=values["attenuatorEnabled"],
            det_d3=DetectorModel(values["detD3Efficiency"], values["detD3DarkProb"]),
            switch_settling_bins=values["switchSettlingBins"],
        )
        channel = ChannelConfig(values["channelAmpTransmittance"], values["oneWayDelayBins"])
        eve: EveStrategy = parse_eve(values["eve"])
        params = SessionParams(
            num_pulses=values["numPulses"],
            alice_choice_probs=tuple(probs),
            bob_on_prob=values["bobOnProb"],
            bob=bob,
            alice=alice,
            channel=channel,
            eve=eve,
            seed=values["seed"],
            disclosure_fraction=values["disclosureFraction"],
            intensity_window=values["intensityWindow"],
            intensity_k=values["intensityK"],
            interference_sigma=values["interferenceSigma"],
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return RunConfig(params, _topology(values), values["outDir"], values)


def load_config(path: str | FsPath | None = None, overrides: Mapping[str, Any] | None = None) -> RunConfig:
    """Read a TOML config (or none) and apply command-line overrides last."""
    raw: dict[str, Any] = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: parse error: {exc}") from None
        except OSError as exc:
            raise ConfigError(f"{path}: {exc.strerror}") from None
        nested = [k for k, v in raw.items() if isinstance(v, dict)]
        if nested:
            raise ConfigError(f"{path}: configuration must be flat; found table(s) {nested}")
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return build_config(raw)


def config_echo(cfg: RunConfig) -> dict[str, Any]:
    """The fully defaulted key-value view, in stable key order."""
    return {k: cfg.values[k] for k in sorted(cfg.values)}
