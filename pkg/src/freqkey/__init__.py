"""Simulator for frequency-coded plug-and-play quantum key distribution."""

from .adversary import InterceptResendFreq, Location, NoEve, PassiveTap, StrongProbe
from .bench import PulseRecord, round_trip_distribution, sample_pulse
from .network import Leaf, Topology, run_network_session
from .protocol import SessionParams, run_session, sift
from .stations import (
    AliceChoice,
    AliceKitConfig,
    BobKitConfig,
    BobSetting,
    ChannelConfig,
    SinglePhoton,
    WeakCoherent,
)

__version__ = "0.1.0"

__all__ = [
    "AliceChoice",
    "AliceKitConfig",
    "BobKitConfig",
    "BobSetting",
    "ChannelConfig",
    "InterceptResendFreq",
    "Leaf",
    "Location",
    "NoEve",
    "PassiveTap",
    "PulseRecord",
    "SessionParams",
    "SinglePhoton",
    "StrongProbe",
    "Topology",
    "WeakCoherent",
    "round_trip_distribution",
    "run_network_session",
    "run_session",
    "sample_pulse",
    "sift",
]
