"""Command-line entry point: ``simulate --config params.json --out results/``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys

from .harness import Arm, ExperimentConfig, emit_results, run_sweep


def parse_sweep(text: str) -> tuple[int, ...]:
    """'10:55:5' -> 10, 15, ..., 55 (stop inclusive); '20' -> (20,)."""
    parts = text.split(":")
    try:
        nums = [int(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad sweep {text!r}; expected start:stop:step") from None
    if len(nums) == 1:
        return (nums[0],)
    if len(nums) == 2:
        nums.append(1)
    start, stop, step = nums
    if step <= 0 or stop < start:
        raise argparse.ArgumentTypeError(f"bad sweep {text!r}; need start <= stop and step > 0")
    return tuple(range(start, stop + 1, step))


def parse_arms(text: str) -> tuple[Arm, ...]:
    try:
        return tuple(Arm.parse(a) for a in text.split(",") if a.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="simulate",
        description="Monte Carlo sweep of NOMA-assisted multi-MEC offloading strategies.")
    p.add_argument("--config", required=True, help="JSON file of simulation parameters")
    p.add_argument("--out", required=True, help="output directory for the CSV files")
    p.add_argument("--arms", type=parse_arms,
                   help="comma list, e.g. game-deadline,dist-deadline,dist-channel")
    p.add_argument("--runs", type=int, help="runs per sweep point")
    p.add_argument("--seed", type=int, help="base seed; run r uses seed + r")
    p.add_argument("--n-sweep", type=parse_sweep, help="device counts as start:stop:step")
    p.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = ExperimentConfig.load(args.config)
        overrides = {}
        if args.arms is not None:
            overrides["arms"] = args.arms
        if args.runs is not None:
            overrides["runs_per_point"] = args.runs
        if args.seed is not None:
            overrides["base_seed"] = args.seed
        if args.n_sweep is not None:
            overrides["n_devices_sweep"] = args.n_sweep
        config = dataclasses.replace(config, **overrides)
        if args.workers < 1:
            raise ValueError("--workers must be at least 1")
    except (OSError, ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        print(f"simulate: config error: {exc}", file=sys.stderr)
        return 2
    result = run_sweep(config, workers=args.workers)
    try:
        paths = emit_results(result, args.out)
    except OSError as exc:
        print(f"simulate: {exc}", file=sys.stderr)
        return 3
    for name, path in paths.items():
        logging.getLogger(__name__).info("wrote %s: %s", name, path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
