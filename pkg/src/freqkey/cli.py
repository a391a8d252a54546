"""Command-line entry point.

Exit codes: 0 clean run, 2 when any alarm fired, 1 on error (or a failed
self-test).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path as FsPath

from .bench import round_trip_distribution
from .config import ConfigError, RunConfig, config_echo, load_config
from .network import run_network_session
from .protocol import run_session
from .report import build_summary, dump_summary, summary_from_transcript, write_transcript
from .selftest import run_selftest
from .stations import AliceChoice, BobSetting, SinglePhoton

log = logging.getLogger("freqkey")

OUT_ENV = "FREQKEY_OUT_DIR"
EXIT_OK, EXIT_ERROR, EXIT_ALARM = 0, 1, 2


def _out_dir(args, cfg: RunConfig) -> FsPath:
    out = args.out or cfg.out_dir or os.environ.get(OUT_ENV) or "freqkey-out"
    path = FsPath(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _overrides(args) -> dict:
    return {"seed": args.seed, "numPulses": args.pulses, "eve": args.eve}


def render_table(cfg: RunConfig, per_pulse: bool = False) -> str:
    """Tab-separated outcome matrix for the six (choice, setting) pairs."""
    p = cfg.params
    bob = p.bob if per_pulse else type(p.bob)(
        p.bob.aom_phase, p.bob.arm_delay_bins, SinglePhoton(), p.bob.det_d1, p.bob.det_d2
    )
    lines = ["choice\tsetting\tpD1\tpD2\tpNone\tpDouble\td3Expected"]
    for choice in AliceChoice:
        for setting in BobSetting:
            d = round_trip_distribution(choice, setting, bob, p.alice, p.channel, p.eve)
            lines.append(
                f"{choice.value}\t{setting.value}\t{d.p_d1:.6f}\t{d.p_d2:.6f}\t{d.p_none:.6f}"
                f"\t{d.p_double:.6f}\t{d.d3_expected:.6f}"
            )
    return "\n".join(lines) + "\n"


def cmd_table(args) -> int:
    cfg = load_config(args.config)
    sys.stdout.write(render_table(cfg, per_pulse=args.per_pulse))
    return EXIT_OK


def _finish(out: FsPath, transcript, mode: str, cfg: RunConfig) -> int:
    records, meta, eve_log = transcript.records, transcript.meta, transcript.eve_log
    echo = config_echo(cfg)
    write_transcript(out / "transcript.csv", records, meta, mode, echo, cfg.topology, eve_log)
    summary = build_summary(records, meta, mode, echo, cfg.topology, eve_log)
    (out / "summary.json").write_text(dump_summary(summary), encoding="utf-8")
    log.info("wrote %s and %s", out / "transcript.csv", out / "summary.json")
    sys.stdout.write(
        f"pulses={summary['numPulses']} key={summary['siftedKeyLength']} qber={summary['qberSample']:.4f} "
        f"interferenceAlarm={summary['interferenceAlarm']} intensityAlarm={summary['intensityAlarm']}\n"
    )
    return EXIT_ALARM if summary["anyAlarm"] else EXIT_OK


def cmd_simulate(args) -> int:
    cfg = load_config(args.config, _overrides(args))
    out = _out_dir(args, cfg)
    t = run_session(cfg.params)
    return _finish(out, t, "simulate", cfg)


def cmd_network(args) -> int:
    cfg = load_config(args.config, _overrides(args))
    if cfg.topology is None:
        raise ConfigError("network mode requires a topology (field 'leaves')")
    out = _out_dir(args, cfg)
    res = run_network_session(cfg.params, cfg.topology)
    return _finish(out, res.transcript, "network", cfg)


def cmd_summarize(args) -> int:
    summary = summary_from_transcript(args.transcript)
    sys.stdout.write(dump_summary(summary))
    return EXIT_ALARM if summary["anyAlarm"] else EXIT_OK


def cmd_selftest(args) -> int:
    checks = run_selftest(aom_phase=args.aom_phase, dark_prob=args.dark_prob)
    for c in checks:
        sys.stdout.write(c.line() + "\n")
    return EXIT_OK if all(c.passed for c in checks) else EXIT_ERROR


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="freqkey", description="Frequency-coded plug-and-play QKD simulator.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def run_opts(p, config_required):
        p.add_argument("--config", required=config_required, help="flat TOML configuration file")
        p.add_argument("--seed", type=int)
        p.add_argument("--pulses", type=int)
        p.add_argument("--eve", help="none | intercept[:forward|return|both[:p]] | tap:q | probe:mu")
        p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./freqkey-out)")

    p = sub.add_parser("simulate", help="run a one-to-one session")
    run_opts(p, config_required=False)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("network", help="run a one-to-any branch-network session")
    run_opts(p, config_required=True)
    p.set_defaults(func=cmd_network)

    p = sub.add_parser("table", help="print the exact outcome distribution of all six cases")
    p.add_argument("--config")
    p.add_argument("--per-pulse", action="store_true", help="use the configured source instead of one photon")
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("summarize", help="rebuild the summary from a transcript file")
    p.add_argument("transcript")
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("selftest", help="run the invariant suite")
    p.add_argument("--aom-phase", type=float, default=0.0, help=argparse.SUPPRESS)
    p.add_argument("--dark-prob", type=float, default=0.0, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, OSError, ValueError) as exc:
        sys.stderr.write(f"freqkey: error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
