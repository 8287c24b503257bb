# Copyright (C) 2025 Richard Owen
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program.  If not, see <https://www.gnu.org/licenses/>.
"""Command-line entry point: run experiments, list benchmarks and probe the OU process."""
import argparse
import dataclasses
import sys
from pathlib import Path
from typing import List, Optional

from nrdslab.engine.errors import ConfigError, DomainError, GridError, ToleranceError
from nrdslab.engine.runner import enforce_tolerance, mua_nonexistence_probe, run_experiment, write_probe
from nrdslab.models.benchmark import registry
from nrdslab.models.experiment import ProbeResult, ResultRecord
from nrdslab.utils.persistence import load_experiment_config

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_TOLERANCE = 4


def print_run_summary(record: ResultRecord) -> None:
    """Print one line per job and the run totals.

    Parameters
    ----------
    record : ResultRecord
        Finished run.
    """
    print(f"Problem: {record.config.problem_id} | Config hash: {record.config_hash[:12]}")
    for result in record.jobs:
        job = result.job
        if result.error is not None:
            print(f"  {job.label} seed={job.seed} tau={job.tau:g}: {result.error_kind}: {result.error}")
            continue
        cells = result.estimate.count if result.estimate is not None else 0
        distance = f" distance={result.distance:.3e}" if result.distance is not None else ""
        print(f"  {job.label} seed={job.seed} tau={job.tau:g}: cells={cells}{distance} ({result.runtime_ms:.0f}ms)")
    if record.probe is not None:
        print_probe_summary(record.probe)
    print(f"Total runtime: {record.runtime_ms / 1000.0:.1f}s")


def print_probe_summary(probe: ProbeResult) -> None:
    """Print the OU probe statistics.

    Parameters
    ----------
    probe : ProbeResult
        Probe outcome.
    """
    print(f"OU probe over {len(probe.rows)} seeds, windows {', '.join(f'{S:g}' for S in probe.S_list)}")
    expected = probe.expected_fraction
    print(f"  strictly increasing: {probe.fraction_increasing:.3f} (stationary expectation {expected:.3f})")
    print(f"  variance of z: {probe.variance:.4f} over {probe.samples} samples")
    print(f"  KS against N(0, 1/2): D={probe.ks_statistic:.4f}, p={probe.ks_pvalue:.3f}")


def build_parser() -> argparse.ArgumentParser:
    """Create the argument parser.

    Returns
    -------
    argparse.ArgumentParser
        Parser with the ``run``, ``list`` and ``probe-ou`` commands.
    """
    parser = argparse.ArgumentParser(prog="nrdslab", description="Attractor experiments for nonautonomous RDS.")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="run an experiment config")
    run.add_argument("--config", required=True, help="INI experiment file")
    run.add_argument("--seed", type=int, default=None, help="replace the configured seeds by one seed")
    run.add_argument("--out", default=None, help="output directory")

    commands.add_parser("list", help="list the benchmark problems")

    probe = commands.add_parser("probe-ou", help="windowed suprema of the OU process")
    probe.add_argument("--seeds", type=int, required=True, help="number of seeds, starting at 0")
    probe.add_argument("--windows", default="10,100,1000", help="comma separated window half widths")
    probe.add_argument("--dt", type=float, default=None, help="path step")
    probe.add_argument("--out", default=None, help="directory for probe.csv")
    return parser


def run_command(config: str, seed: Optional[int], out: Optional[str]) -> int:
    """Execute ``run`` and map the outcome to an exit code.

    Parameters
    ----------
    config : str
        INI experiment file.
    seed : int or None
        Seed override.
    out : str or None
        Output directory override.

    Returns
    -------
    int
        Exit code.
    """
    try:
        cfg = load_experiment_config(config)
        overrides = {}
        if seed is not None:
            overrides["seeds"] = (seed,)
        if out is not None:
            overrides["output_dir"] = out
        if overrides:
            cfg = dataclasses.replace(cfg, **overrides)
        record = run_experiment(cfg)
    except ConfigError as exc:
        print(f"Config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    print_run_summary(record)
    if record.diverged:
        return EXIT_DIVERGENCE
    try:
        enforce_tolerance(record)
    except ToleranceError as exc:
        print(f"Tolerance failure: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    return EXIT_OK


def list_command() -> int:
    """Print the registry.

    Returns
    -------
    int
        Exit code.
    """
    for problem in registry():
        drivers = "/".join(problem.driver_kinds)
        print(f"{problem.problem_id:<18} d={problem.dimension} [{drivers}] {problem.description}")
    return EXIT_OK


def probe_command(seeds: int, windows: str, dt: Optional[float], out: Optional[str]) -> int:
    """Execute ``probe-ou``.

    Parameters
    ----------
    seeds : int
        Number of seeds.
    windows : str
        Comma separated window half widths.
    dt : float or None
        Path step.
    out : str or None
        Directory for the probe tables.

    Returns
    -------
    int
        Exit code.
    """
    try:
        S_list = [float(item) for item in windows.split(",") if item.strip()]
    except ValueError:
        print(f"Config error: malformed windows {windows!r}", file=sys.stderr)
        return EXIT_CONFIG
    if seeds < 1:
        print("Config error: --seeds must be positive", file=sys.stderr)
        return EXIT_CONFIG
    try:
        probe = mua_nonexistence_probe(list(range(seeds)), S_list, dt=dt)
    except (DomainError, GridError) as exc:
        print(f"Config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print_probe_summary(probe)
    if out is not None:
        directory = Path(out)
        directory.mkdir(parents=True, exist_ok=True)
        write_probe(directory, probe)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """Parse the command line and dispatch.

    Parameters
    ----------
    argv : list of str, optional
        Arguments without the program name; defaults to ``sys.argv[1:]``.

    Returns
    -------
    int
        Exit code: 0 success, 2 configuration error, 3 divergence, 4 tolerance failure.
    """
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return run_command(args.config, args.seed, args.out)
    if args.command == "list":
        return list_command()
    return probe_command(args.seeds, args.windows, args.dt, args.out)


if __name__ == "__main__":
    sys.exit(main())
