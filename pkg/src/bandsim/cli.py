"""Command-line entry point.

Runs either a single experiment described by a config file and flags, or
one of the named presets.  All output is CSV plus ``manifest.txt`` in the
output directory; logs go to stderr.

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, load_config
from .engine import run_experiment
from .presets import PRESETS, run_preset
from .reports import write_manifest, write_run

log = logging.getLogger("bandsim")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

# flag -> config field
OVERRIDE_FLAGS = {
    "seed": "seed",
    "omega": "omega",
    "bucket_size": "bucket_size",
    "originator_fraction": "originator_fraction",
    "payment_model": "payment_model",
    "free_service": "free_service",
    "shuffle": "shuffle_policy",
    "cache": "cache_policy",
    "workload": "workload",
    "network_size": "network_size",
    "duration": "duration_seconds",
    "graphs": "graph_count",
    "backend": "backend",
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bandsim", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"bandsim {__version__}")
    ap.add_argument("--config", metavar="PATH", help="INI-style config file")
    ap.add_argument("--preset", metavar="NAME", help="named experiment sweep; see --list-presets")
    ap.add_argument("--list-presets", action="store_true", help="print preset names and exit")
    ap.add_argument("--out", metavar="DIR", help="output directory (default: run.output_dir)")
    ap.add_argument("--parallel", type=int, default=1, metavar="N", help="graphs simulated concurrently")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override any config field; repeatable")
    ap.add_argument("-v", "--verbose", action="count", default=0)

    ov = ap.add_argument_group("overrides")
    ov.add_argument("--seed", metavar="U64")
    ov.add_argument("--omega")
    ov.add_argument("--bucket-size")
    ov.add_argument("--originator-fraction")
    ov.add_argument("--payment-model")
    ov.add_argument("--free-service", help="off, constant or pairwise")
    ov.add_argument("--shuffle", help="none, originators or all")
    ov.add_argument("--cache", help="none, lru or lfu")
    ov.add_argument("--workload", help="uniform, zipf or trace")
    ov.add_argument("--network-size")
    ov.add_argument("--duration", help="simulated seconds")
    ov.add_argument("--graphs", help="number of generated graphs")
    ov.add_argument("--backend", help="auto, fast or reference")
    return ap


def collect_overrides(args: argparse.Namespace) -> dict:
    out = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError([f"--set expects KEY=VALUE, got {item!r}"])
        out[key.strip()] = value
    for flag, name in OVERRIDE_FLAGS.items():
        value = getattr(args, flag)
        if value is not None:
            out[name] = value
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if args.list_presets:
        for preset in PRESETS.values():
            print(f"{preset.name:10s} {preset.summary}")
        return EXIT_OK
    try:
        if args.preset is not None and args.preset not in PRESETS:
            raise ConfigError([f"unknown preset {args.preset!r}; available: {', '.join(PRESETS)}"])
        cfg = load_config(args.config, collect_overrides(args))
    except ConfigError as exc:
        for msg in exc.errors:
            print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    if args.parallel < 1:
        print("config error: --parallel must be at least 1", file=sys.stderr)
        return EXIT_CONFIG

    out = Path(args.out or cfg.output_dir)
    command = ["bandsim", *argv]
    try:
        if args.preset:
            paths = run_preset(args.preset, cfg, out, args.parallel, command)
        else:
            result = run_experiment(cfg, args.parallel)
            paths = write_run(out, result) + [write_manifest(out, cfg, None, command)]
    except ConfigError as exc:
        for msg in exc.errors:
            print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - any failure maps to the runtime exit code
        log.debug("run failed", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for path in paths:
        log.info("wrote %s", path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
