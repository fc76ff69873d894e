"""Command-line entry point: one subcommand per experiment family.

    rfsurf <subcommand> --config <file> [--out <dir>] [--threads <n>]
           [--seed-offset <k>] [--timings]

``--threads`` falls back to the RFSURF_THREADS environment variable,
then to 1.  The outputs are byte-deterministic for a fixed config and
code version regardless of the thread count; ``--timings`` adds the
one non-deterministic sidecar.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import load_config
from .runner import (run_coupling_scaling, run_dlr_check, run_green_study,
                     run_ground_state_scaling, run_oracle_suite)
from .validate import run_validation_suite

_COMMANDS = {
    "ground-state": run_ground_state_scaling,
    "couple": run_coupling_scaling,
    "oracle": run_oracle_suite,
    "green": run_green_study,
    "validate": run_validation_suite,
    "dlr": run_dlr_check,
}


def _default_threads() -> int:
    raw = os.environ.get("RFSURF_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rfsurf",
        description="Lattice experiments for pinned random surfaces "
                    "in a quenched field.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        cmd = sub.add_parser(name, help=fn.__doc__.splitlines()[0])
        cmd.add_argument("--config", required=True,
                         help="experiment TOML file")
        cmd.add_argument("--out", default=None,
                         help="output directory (default from config)")
        cmd.add_argument("--threads", type=int, default=_default_threads(),
                         help="worker threads (or RFSURF_THREADS)")
        cmd.add_argument("--seed-offset", type=int, default=0,
                         help="shift all replicate indices by this much")
        cmd.add_argument("--timings", action="store_true",
                         help="also write the timings.json sidecar")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except (OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    runner = _COMMANDS[args.command]
    try:
        result = runner(cfg, out=args.out, threads=max(1, args.threads),
                        seed_offset=args.seed_offset, timings=args.timings)
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    if args.command == "validate" and not result["all_passed"]:
        failed = [c["name"] for c in result["checks"] if not c["passed"]]
        print(f"validation failed: {', '.join(failed)}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
