"""Command-line front end.

    twinbeam run <config|preset> [--mode M] [--seed N] [--out DIR] [--format csv,json,svg]
    twinbeam presets

Exit codes: 0 success, 1 runtime / I/O failure, 2 invalid configuration.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, bundled_presets, load
from .runner import run

FORMATS = ("csv", "json", "svg")


def _formats(text: str) -> tuple[str, ...]:
    fmts = tuple(f.strip() for f in text.split(",") if f.strip())
    bad = [f for f in fmts if f not in FORMATS]
    if bad or not fmts:
        raise argparse.ArgumentTypeError(f"formats must be drawn from {','.join(FORMATS)}")
    return fmts


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="twinbeam",
                                 description="NOPO twin-beam correlation spectra")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment configuration")
    r.add_argument("config", help="JSON config file or bundled preset name (see 'presets')")
    r.add_argument("--mode", choices=("analytic", "simulate", "both"))
    r.add_argument("--seed", type=int)
    r.add_argument("--out", help="output directory (overrides output_dir)")
    r.add_argument("--format", type=_formats, default=("csv", "json"),
                   help="comma-separated subset of csv,json,svg (default csv,json)")
    sub.add_parser("presets", help="list bundled presets")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "presets":
        print("\n".join(bundled_presets()))
        return 0
    try:
        cfg = load(args.config, {"mode": args.mode, "seed": args.seed,
                                 "output_dir": args.out})
    except ConfigError as exc:
        for path, msg in exc.problems:
            print(f"config error: {path}: {msg}", file=sys.stderr)
        return 2
    try:
        manifest, _ = run(cfg, args.format)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - any runtime failure maps to exit 1
        print(f"run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    for role, rel in manifest.outputs.items():
        print(f"{role}\t{cfg.output_dir / rel}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
