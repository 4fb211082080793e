"""Command-line interface: single experiment cells and config-driven sweeps.

``oloop run`` executes one (domain, planner, configuration) cell and writes
a CSV plus a summary line.  ``oloop sweep`` expands a YAML grid file (see
:func:`oloop.harness.specs_from_config` for the schema) and writes
``results.csv`` under the output directory.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

import yaml

from .bandits import NormalGammaParams
from .domains import available
from .harness import ExperimentSpec, run_sweep, specs_from_config, summarize
from .planners import PLANNERS, PlannerConfig

__all__ = ["build_parser", "main"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oloop",
        description="Anytime online planning experiments for large POMDPs.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="run one experiment cell")
    run.add_argument("--domain", required=True, choices=sorted(available()))
    run.add_argument("--planner", required=True, choices=sorted(PLANNERS))
    run.add_argument("--budget", type=int, required=True, help="simulations per step")
    run.add_argument("--horizon", type=int, required=True, help="planning horizon T")
    run.add_argument(
        "--memory-cap", type=int, default=None, help="node budget (default unlimited)"
    )
    run.add_argument(
        "--beta0", type=float, default=1000.0, help="Normal-Gamma prior rate"
    )
    run.add_argument(
        "--c", type=float, default=None, help="UCB exploration (default reward range)"
    )
    run.add_argument(
        "--particles", type=int, default=10_000, help="belief particle capacity"
    )
    run.add_argument("--episodes", type=int, default=1)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", default="results.csv", help="CSV output path")
    run.add_argument(
        "--max-steps", type=int, default=None, help="episode step cap (domain default)"
    )
    run.add_argument(
        "--discount", type=float, default=None, help="override the domain discount"
    )
    run.add_argument(
        "--no-adjacent-ships",
        action="store_true",
        help="battleship only: forbid diagonally touching ships",
    )
    run.add_argument(
        "--timing", action="store_true", help="record real planning time per step"
    )
    run.add_argument("--workers", type=int, default=None, help="episode parallelism")

    sweep = commands.add_parser("sweep", help="run a grid from a config file")
    sweep.add_argument("--config", required=True, help="YAML sweep configuration")
    sweep.add_argument("--out", required=True, help="output directory")
    sweep.add_argument("--workers", type=int, default=None, help="episode parallelism")
    return parser


def _run_command(args: argparse.Namespace) -> int:
    if args.no_adjacent_ships and args.domain != "battleship":
        print("--no-adjacent-ships only applies to battleship", file=sys.stderr)
        return 2
    config = PlannerConfig(
        budget=args.budget,
        horizon=args.horizon,
        memory_cap=args.memory_cap,
        discount=args.discount,
        prior=NormalGammaParams(beta=args.beta0),
        exploration=args.c,
        particle_capacity=args.particles,
    )
    spec = ExperimentSpec(
        domain=args.domain,
        planner=args.planner,
        config=config,
        episode_count=args.episodes,
        max_episode_steps=args.max_steps,
        base_seed=args.seed,
        record_timing=args.timing,
        domain_options=(("allow_adjacent", False),) if args.no_adjacent_ships else (),
    )
    rows = run_sweep([spec], out_path=args.out, workers=args.workers)
    for line in summarize(rows):
        print(
            f"{line['domain']} {line['planner']} n_b={line['n_b']}: "
            f"mean return {line['mean']:.3f} +/- {line['se']:.3f} SE "
            f"({line['episodes']} episodes) -> {args.out}"
        )
    return 0


def _sweep_command(args: argparse.Namespace) -> int:
    with open(args.config, "r", encoding="utf-8") as handle:
        mapping = yaml.safe_load(handle)
    if not isinstance(mapping, dict):
        print(f"sweep config {args.config} must be a mapping", file=sys.stderr)
        return 2
    specs = specs_from_config(mapping)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / "results.csv"
    rows = run_sweep(specs, out_path=out_path, workers=args.workers)
    print(f"{len(rows)} rows ({len(specs)} cells) -> {out_path}")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return _run_command(args)
    return _sweep_command(args)
