"""Transcript and summary files.

A transcript is CSV with one row per pulse. Comment lines starting with
``#`` carry a format tag and a JSON metadata line holding the session
thresholds, topology and config echo, so the summary can be rebuilt from the
transcript alone.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict
from pathlib import Path as FsPath
from typing import Any, Sequence

from .adversary import EveLogEntry
from .bench import PulseRecord
from .modes import FrequencyBin
from .network import Leaf, Topology, split_by_leaf
from .protocol import SessionMeta, assess
from .readout import ClickOutcome
from .stations import AliceChoice, BobSetting

__all__ = [
    "COLUMNS",
    "write_transcript",
    "read_transcript",
    "build_summary",
    "dump_summary",
    "summary_from_transcript",
]

FORMAT_TAG = "# freqkey-transcript v1"
COLUMNS = ("index", "choice", "setting", "click", "d3Count", "emitBin", "returnBin",
           "leafId", "intendedBit", "decodedBit",
           "eveAttacked", "eveMeasuredFreq", "eveTapped", "eveProbeReadout")


def _cell(v: Any) -> str:
    return "" if v is None else str(v)


def write_transcript(
    path: str | FsPath,
    records: Sequence[PulseRecord],
    meta: SessionMeta,
    mode: str,
    config: dict[str, Any],
    topology: Topology | None = None,
    eve_log: Sequence[EveLogEntry] | None = None,
) -> None:
    eve_log = eve_log or [EveLogEntry()] * len(records)
    header = {
        "mode": mode,
        "meta": asdict(meta),
        "topology": _topology_dict(topology),
        "config": config,
    }
    buf = io.StringIO()
    buf.write(FORMAT_TAG + "\n")
    buf.write("# meta " + json.dumps(header, sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for r, e in zip(records, eve_log):
        writer.writerow([
            r.index, r.choice.value, r.setting.value, r.click.value, r.d3_photons,
            r.emit_bin, r.return_bin, _cell(r.leaf_id), _cell(r.intended_bit), _cell(r.decoded_bit),
            int(e.attacked), _cell(e.measured_freq and e.measured_freq.value), e.tapped_photons,
            _cell(e.probe_readout and e.probe_readout.value),
        ])
    FsPath(path).write_text(buf.getvalue(), encoding="utf-8")


def _topology_dict(t: Topology | None) -> dict[str, Any] | None:
    if t is None:
        return None
    return {
        "leaves": [
            {"id": leaf.id, "roundTripBins": leaf.round_trip_bins, "splitterWeight": leaf.splitter_weight}
            for leaf in t.leaves
        ],
        "timingResolutionBins": t.timing_resolution_bins,
    }


def read_transcript(path: str | FsPath):
    """Parse a transcript file into (records, eve log, meta, header dict)."""
    lines = FsPath(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != FORMAT_TAG:
        raise ValueError(f"{path}: not a transcript file")
    header = None
    body = []
    for line in lines[1:]:
        if line.startswith("# meta "):
            header = json.loads(line[len("# meta "):])
        elif not line.startswith("#"):
            body.append(line)
    if header is None:
        raise ValueError(f"{path}: missing metadata line")
    reader = csv.DictReader(body)
    if tuple(reader.fieldnames or ()) != COLUMNS:
        raise ValueError(f"{path}: unexpected columns {reader.fieldnames}")
    records, eve_log = [], []
    for row in reader:
        records.append(PulseRecord(
            index=int(row["index"]),
            choice=AliceChoice(row["choice"]),
            setting=BobSetting(row["setting"]),
            click=ClickOutcome(row["click"]),
            d3_photons=int(row["d3Count"]),
            emit_bin=int(row["emitBin"]),
            return_bin=int(row["returnBin"]),
            leaf_id=row["leafId"] or None,
        ))
        eve_log.append(EveLogEntry(
            attacked=row["eveAttacked"] == "1",
            measured_freq=FrequencyBin(row["eveMeasuredFreq"]) if row["eveMeasuredFreq"] else None,
            tapped_photons=int(row["eveTapped"]),
            probe_readout=AliceChoice(row["eveProbeReadout"]) if row["eveProbeReadout"] else None,
        ))
    meta = SessionMeta(**header["meta"])
    return records, eve_log, meta, header


def _session_summary(s, alarms, pulses: int) -> dict[str, Any]:
    d3_total = alarms.intensity
    return {
        "pulses": pulses,
        "siftedKeyLength": s.group2_count,
        "finalKeyLength": len(alarms.qber.key_alice),
        "keyFraction": s.group2_count / pulses if pulses else 0.0,
        "keysAgree": s.key_alice == s.key_bob,
        "groupCounts": {
            "group1D1": s.group1_d1,
            "group1D2": s.group1_d2,
            "group2": s.group2_count,
            "group3": s.group3_count,
            "noClick": s.no_click_count,
            "noFilterOff": s.no_filter_off_count,
            "doubleClick": s.double_click_count,
        },
        "group1D2Fraction": alarms.interference.fraction,
        "interferenceAlarm": alarms.interference.alarm,
        "interferenceIndeterminate": alarms.interference.indeterminate,
        "interferenceThreshold": _finite(alarms.interference.threshold),
        "qberSample": alarms.qber.qber,
        "qberDisclosed": alarms.qber.disclosed,
        "qberEmptyKey": alarms.qber.empty,
        "intensityAlarm": alarms.intensity.alarm,
        "d3": {
            "baselinePerPulse": d3_total.baseline,
            "maxWindowMean": d3_total.max_window_mean,
            "threshold": d3_total.threshold,
            "window": d3_total.window,
            "firstAlarmWindow": d3_total.first_alarm_window,
        },
    }


def _eve_summary(records, eve_log, alarms) -> dict[str, Any]:
    """What Eve learned, and how much of it before the first alarm window.

    A key bit counts as read when Eve measured the same frequency Alice kept,
    or when her probe named Alice's filter.
    """
    cutoff = None
    if alarms.intensity.first_alarm_window is not None:
        cutoff = alarms.intensity.first_alarm_window * alarms.intensity.window
    read = read_before = group2_errors = 0
    for pos, (r, e) in enumerate(zip(records, eve_log)):
        if r.decoded_bit is None or r.intended_bit is None:
            continue
        if e.attacked and r.decoded_bit != r.intended_bit:
            group2_errors += 1
        known = e.probe_readout is r.choice or (e.measured_freq is not None and e.measured_freq is r.choice.passband)
        if known:
            read += 1
            if cutoff is None or pos < cutoff:
                read_before += 1
    probed = [(r, e) for r, e in zip(records, eve_log) if e.probe_readout is not None]
    return {
        "attackedPulses": sum(e.attacked for e in eve_log),
        "tappedPhotons": sum(e.tapped_photons for e in eve_log),
        "probeReadouts": len(probed),
        "probeCorrect": sum(e.probe_readout is r.choice for r, e in probed),
        "keyBitsRead": read,
        "keyBitsReadBeforeIntensityAlarm": read_before,
        "keyErrorsOnAttackedPulses": group2_errors,
    }


def _finite(x: float) -> float | None:
    return None if x != x else x


def build_summary(
    records: Sequence[PulseRecord],
    meta: SessionMeta,
    mode: str,
    config: dict[str, Any],
    topology: Topology | None = None,
    eve_log: Sequence[EveLogEntry] | None = None,
) -> dict[str, Any]:
    s, alarms = assess(records, meta)
    out = _session_summary(s, alarms, len(records))
    out["eve"] = _eve_summary(records, eve_log or [EveLogEntry()] * len(records), alarms)
    out.update({"mode": mode, "seed": meta.seed, "numPulses": meta.num_pulses, "config": config})
    out["mu"] = config.get("mu") if config.get("source") == "weak" else None
    if mode == "network" and topology is not None:
        per_leaf, unidentified = split_by_leaf(records, meta, topology)
        out["unidentifiedCount"] = unidentified
        out["perLeaf"] = {
            leaf_id: _session_summary(res.sift, res.alarms, res.pulses) for leaf_id, res in per_leaf.items()
        }
        out["anyAlarm"] = any(
            v["interferenceAlarm"] or v["intensityAlarm"] for v in out["perLeaf"].values()
        ) or out["interferenceAlarm"] or out["intensityAlarm"]
    else:
        out["anyAlarm"] = out["interferenceAlarm"] or out["intensityAlarm"]
    return out


def dump_summary(summary: dict[str, Any]) -> str:
    return json.dumps(summary, sort_keys=True, indent=2) + "\n"


def summary_from_transcript(path: str | FsPath) -> dict[str, Any]:
    records, eve_log, meta, header = read_transcript(path)
    topo = None
    if header.get("topology"):
        t = header["topology"]
        topo = Topology(
            tuple(Leaf(d["id"], d["roundTripBins"], d["splitterWeight"]) for d in t["leaves"]),
            t["timingResolutionBins"],
        )
    return build_summary(records, meta, header["mode"], header["config"], topo, eve_log)
