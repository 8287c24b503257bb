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
"""Readers and writers for run artefacts.

Paths and box sets are stored as small text files so that a run directory can be inspected with
ordinary tools and replayed. Floats are written with ``repr`` and read back bit-exactly.
Experiment configurations travel as INI files and are turned into :class:`ExperimentConfig`
instances here, in the same way rosters are built from JSON payloads.
"""
import configparser
import csv
import hashlib
import io
import json
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import numpy as np

from nrdslab.engine.cocycle import TrajectorySegment
from nrdslab.engine.driver import SamplePath
from nrdslab.engine.errors import ConfigError, DomainError
from nrdslab.engine.setvalued import BoxGrid, BoxSet
from nrdslab.engine.symbolspace import HullSample, StabilityReport, SymbolFunction
from nrdslab.models.experiment import ExperimentConfig, ResultRecord


def dump_path(p: SamplePath, path: str | Path) -> None:
    """Write a sample path as a ``t_min t_max dt seed`` header followed by one value per line.

    Parameters
    ----------
    p : SamplePath
        Path to store.
    path : str or Path
        Destination file.
    """
    lines = [f"{p.t_min!r} {p.t_max!r} {p.dt!r} {p.seed}"]
    lines.extend(repr(float(v)) for v in p.values)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_path(path: str | Path) -> SamplePath:
    """Read a sample path written by :func:`dump_path`.

    Parameters
    ----------
    path : str or Path
        Source file.

    Returns
    -------
    SamplePath
        Stored path.

    Raises
    ------
    FileNotFoundError
        Raised when ``path`` does not exist.
    """
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"Path dump not found: {path}")
    lines = p.read_text(encoding="utf-8").splitlines()
    t_min, t_max, dt, seed = lines[0].split()
    values = np.array([float(line) for line in lines[1:] if line.strip()])
    return SamplePath(t_min=float(t_min), t_max=float(t_max), dt=float(dt), values=values, seed=int(seed))


def dump_boxset(boxes: BoxSet, path: str | Path) -> None:
    """Write a box set as a ``d n lo_1 hi_1 [lo_2 hi_2 ...]`` header and one occupied cell per line.

    A grid with different cell counts per axis writes ``n`` as the comma separated counts.

    Parameters
    ----------
    boxes : BoxSet
        Set to store.
    path : str or Path
        Destination file.
    """
    grid = boxes.grid
    counts = {int(k) for k in grid.n}
    n = str(counts.pop()) if len(counts) == 1 else ",".join(str(int(k)) for k in grid.n)
    bounds = " ".join(f"{float(lo)!r} {float(hi)!r}" for lo, hi in zip(grid.lo, grid.hi))
    lines = [f"{grid.dimension} {n} {bounds}"]
    lines.extend(" ".join(str(int(i)) for i in cell) for cell in np.argwhere(boxes.occupancy))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_boxset(path: str | Path) -> BoxSet:
    """Read a box set written by :func:`dump_boxset`.

    Parameters
    ----------
    path : str or Path
        Source file.

    Returns
    -------
    BoxSet
        Stored set.

    Raises
    ------
    DomainError
        If the header is malformed or a cell lies outside the grid.
    """
    lines = [line.split() for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]
    if not lines:
        raise DomainError(f"Empty box set file {path}")
    header = lines[0]
    try:
        d = int(header[0])
        counts = tuple(int(k) for k in header[1].split(","))
        bounds = [float(v) for v in header[2:]]
    except (IndexError, ValueError) as exc:
        raise DomainError(f"Malformed box set header in {path}") from exc
    if d < 1 or len(bounds) != 2 * d or len(counts) not in (1, d):
        raise DomainError(f"Malformed box set header in {path}")
    grid = BoxGrid(lo=tuple(bounds[0::2]), hi=tuple(bounds[1::2]), n=counts * d if len(counts) == 1 else counts)
    occupancy = np.zeros(grid.n, dtype=bool)
    if len(lines) > 1:
        cells = np.array([[int(v) for v in row] for row in lines[1:]])
        if cells.shape[1] != d or np.any(cells < 0) or np.any(cells >= np.asarray(grid.n)):
            raise DomainError(f"Cell index outside the grid in {path}")
        occupancy[tuple(cells.T)] = True
    return BoxSet(grid, occupancy)


def dump_hull(hull: HullSample, path: str | Path) -> None:
    """Write a hull net as an ``eps N`` line followed by one sample block per net element.

    Each block opens with ``symbol <shift> <half_width> <dt> <tau_sigma> <count>``, where ``shift``
    is ``none`` for a closure point, and lists ``count`` samples one per line.

    Parameters
    ----------
    hull : HullSample
        Net to store.
    path : str or Path
        Destination file.
    """
    lines = [f"{float(hull.eps)!r} {int(hull.levels)}"]
    for shift, sigma in zip(hull.shifts, hull.net):
        label = "none" if shift is None else repr(float(shift))
        lines.append(
            f"symbol {label} {float(sigma.half_width)!r} {float(sigma.dt)!r} {float(sigma.tau_sigma)!r} "
            f"{sigma.values.shape[0]}"
        )
        lines.extend(repr(float(v)) for v in sigma.values)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_hull(path: str | Path) -> HullSample:
    """Read a hull net written by :func:`dump_hull`.

    Parameters
    ----------
    path : str or Path
        Source file.

    Returns
    -------
    HullSample
        Stored net.

    Raises
    ------
    DomainError
        If a block header is malformed or a block is short.
    """
    lines = [line for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]
    try:
        eps, levels = lines[0].split()
        net: List[SymbolFunction] = []
        shifts: List[Optional[float]] = []
        position = 1
        while position < len(lines):
            tag, shift, half_width, dt, tau_sigma, count = lines[position].split()
            if tag != "symbol":
                raise DomainError(f"Expected a symbol block in {path}, got {lines[position]!r}")
            block = lines[position + 1 : position + 1 + int(count)]
            if len(block) != int(count):
                raise DomainError(f"Truncated symbol block in {path}")
            net.append(
                SymbolFunction(
                    values=np.array([float(v) for v in block]),
                    half_width=float(half_width),
                    dt=float(dt),
                    tau_sigma=float(tau_sigma),
                )
            )
            shifts.append(None if shift == "none" else float(shift))
            position += 1 + int(count)
    except (IndexError, ValueError) as exc:
        if isinstance(exc, DomainError):
            raise
        raise DomainError(f"Malformed hull file {path}: {exc}") from exc
    return HullSample(net=net, eps=float(eps), levels=int(levels), shifts=shifts)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[object]]) -> None:
    """Write a plot-ready CSV table.

    Parameters
    ----------
    path : str or Path
        Destination file.
    header : sequence of str
        Column names.
    rows : iterable of sequence
        Table rows; floats are written with ``repr``.
    """
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])


def trajectory_to_csv(segment: TrajectorySegment, path: str | Path) -> None:
    """Write a trajectory as ``t, u_1, ..., u_d`` rows.

    Parameters
    ----------
    segment : TrajectorySegment
        Solution to store.
    path : str or Path
        Destination file.
    """
    states = np.asarray(segment.states).reshape(len(segment.times), -1)
    header = ["t"] + [f"u_{i + 1}" for i in range(states.shape[1])]
    rows = ([float(t), *(float(v) for v in row)] for t, row in zip(segment.times, states))
    write_csv(path, header, rows)


def stability_to_csv(report: StabilityReport, path: str | Path) -> None:
    """Write a stability report as ``delta, pass, escape_s, escape_t`` rows.

    Escape columns stay empty for passing candidates.

    Parameters
    ----------
    report : StabilityReport
        Outcome of the stability search.
    path : str or Path
        Destination file.
    """
    rows = [(row.delta, int(row.passed), row.shift, row.escape_time) for row in report.rows]
    write_csv(path, ("delta", "pass", "escape_s", "escape_t"), rows)


def read_csv(path: str | Path) -> List[List[str]]:
    """Read a CSV table written by :func:`write_csv`, header included.

    Parameters
    ----------
    path : str or Path
        Source file.

    Returns
    -------
    list of list of str
        Rows as text.
    """
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        return [row for row in csv.reader(fh)]


def config_text(cfg: ExperimentConfig) -> str:
    """Render the canonical INI echo of a configuration.

    Parameters
    ----------
    cfg : ExperimentConfig
        Configuration to echo.

    Returns
    -------
    str
        INI text that :func:`parse_config` turns back into an equal configuration.
    """
    parser = configparser.ConfigParser(interpolation=None)
    for section, entries in cfg.to_sections().items():
        parser[section] = entries
    buffer = io.StringIO()
    parser.write(buffer)
    return buffer.getvalue()


def config_hash(text: str) -> str:
    """Return the SHA-256 digest of a configuration echo.

    Parameters
    ----------
    text : str
        Output of :func:`config_text`.

    Returns
    -------
    str
        Hex digest.
    """
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def parse_config(text: str) -> ExperimentConfig:
    """Parse INI text into an experiment configuration.

    Parameters
    ----------
    text : str
        INI document.

    Returns
    -------
    ExperimentConfig
        Validated configuration.

    Raises
    ------
    ConfigError
        If the document is not valid INI or fails validation.
    """
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"Malformed config file: {exc}") from exc
    sections = {name: dict(parser[name]) for name in parser.sections()}
    return ExperimentConfig.from_sections(sections)


def load_experiment_config(path: str | Path) -> ExperimentConfig:
    """Load an experiment configuration file.

    Parameters
    ----------
    path : str or Path
        INI file.

    Returns
    -------
    ExperimentConfig
        Validated configuration.

    Raises
    ------
    ConfigError
        Raised when ``path`` does not exist or fails to parse.
    """
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"Config file not found: {path}")
    return parse_config(p.read_text(encoding="utf-8"))


def write_summary(record: ResultRecord, path: str | Path) -> None:
    """Write ``summary.json`` with one entry per job.

    Parameters
    ----------
    record : ResultRecord
        Finished run.
    path : str or Path
        Destination file.
    """
    jobs = []
    for result in record.jobs:
        jobs.append(
            {
                "job": result.job.job_id,
                "problem": record.config.problem_id,
                "seed": result.job.seed,
                "tau": result.job.tau,
                "angle": result.job.angle,
                "distance": result.distance,
                "coverage_gap": result.coverage_gap,
                "nested": result.nested,
                "forward_contained": result.forward_contained,
                "hull_size": None if result.hull is None else len(result.hull.net),
                "holder_alpha": None if result.holder is None else result.holder.alpha,
                "projection_gap": result.projection_gap,
                "relation_deviation": result.relation_deviation,
                "best_delta": None if result.stability is None else result.stability.best_delta,
                "runtime_ms": result.runtime_ms,
                "config_hash": record.config_hash,
                "error": result.error,
            }
        )
    payload = {
        "problem": record.config.problem_id,
        "config_hash": record.config_hash,
        "runtime_ms": record.runtime_ms,
        "tolerance": record.config.effective_tolerance(),
        "jobs": jobs,
    }
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
