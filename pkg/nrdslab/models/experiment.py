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
"""Experiment configuration and result records."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

from nrdslab.engine.cocycle import TrajectorySegment
from nrdslab.engine.cohomology import ConvergenceReport, KappaBound
from nrdslab.engine.config import LAB_CONFIG, IntegratorConfig, LimitConfig, is_multiple, symmetric_shifts
from nrdslab.engine.driver import OuEvaluator
from nrdslab.engine.errors import ConfigError, LabError
from nrdslab.engine.setvalued import BoxGrid, BoxSet, RateTable
from nrdslab.engine.symbolspace import HolderEstimate, HullSample, StabilityReport
from nrdslab.models.benchmark import CIRCLE, WIENER, BenchmarkProblem, get_problem

Sections = Dict[str, Dict[str, str]]

_SECTION_KEYS: Dict[str, Tuple[str, ...]] = {
    "problem": ("id",),
    "driver": ("kind", "seeds", "taus", "angles", "dt", "ou_truncation"),
    "integrator": ("scheme", "step", "blowup_guard"),
    "limits": ("s_max", "s_count", "t_burn", "t_tail", "stride", "density", "check_monotonicity", "library"),
    "boxes": ("lo", "hi", "cells"),
    "symbols": ("enabled", "channel", "eps", "holder_window", "stability_eps", "deltas"),
    "output": ("directory", "workers", "tolerance", "rate_table", "trajectory", "probe_seeds", "probe_windows"),
}


def _floats(text: str) -> Tuple[float, ...]:
    """Parse a comma separated list of numbers.

    Parameters
    ----------
    text : str
        Raw value.

    Returns
    -------
    tuple of float
        Parsed numbers.
    """
    return tuple(float(item) for item in text.split(",") if item.strip())


def _ints(text: str) -> Tuple[int, ...]:
    """Parse a comma separated list of integers.

    Parameters
    ----------
    text : str
        Raw value.

    Returns
    -------
    tuple of int
        Parsed integers.
    """
    return tuple(int(item) for item in text.split(",") if item.strip())


def _bool(text: str) -> bool:
    """Parse a boolean flag.

    Parameters
    ----------
    text : str
        ``true``/``false``, ``yes``/``no``, ``on``/``off`` or ``1``/``0``.

    Returns
    -------
    bool
        Parsed flag.
    """
    value = text.strip().lower()
    if value in ("true", "yes", "on", "1"):
        return True
    if value in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _join(values: Tuple[object, ...]) -> str:
    """Format a tuple as a comma separated list using ``repr`` for floats.

    Parameters
    ----------
    values : tuple
        Values to format.

    Returns
    -------
    str
        Comma separated text that parses back to the same values.
    """
    return ", ".join(repr(v) if isinstance(v, float) else str(v) for v in values)


@dataclass(frozen=True, slots=True)
class JobSpec:
    """One base point of an experiment.

    Parameters
    ----------
    job_id : int
        Position in the job list; output files are written in this order.
    seed : int
        Noise seed (Wiener driver).
    tau : float
        Initial time.
    angle : float
        Initial angle (circle driver).
    """

    job_id: int
    seed: int
    tau: float
    angle: float

    @property
    def label(self) -> str:
        """File-name prefix of the job.

        Returns
        -------
        str
            ``job<id>``.
        """
        return f"job{self.job_id:03d}"


@dataclass(slots=True)
class ExperimentConfig:
    """Configuration of one experiment run.

    Parameters
    ----------
    problem_id : str
        Registry key.
    parameters : dict of str to str, default={}
        Problem parameter overrides (``param_<name>`` keys).
    driver_kind : str, default=""
        ``"wiener"`` or ``"circle"``; empty selects the problem default.
    seeds : tuple of int, default=(0,)
        Noise seeds.
    taus : tuple of float, default=(0.0,)
        Initial times.
    angles : tuple of float, default=(0.0,)
        Initial angles for the circle driver.
    dt : float, default=LAB_CONFIG.driver.dt
        Path grid step.
    ou_truncation : float, default=LAB_CONFIG.driver.ou_truncation
        OU truncation window.
    integrator : IntegratorConfig, default=IntegratorConfig()
        Integration settings.
    limits : LimitConfig, default=LimitConfig()
        Omega-limit settings.
    library : tuple of float, default=LAB_CONFIG.boxes.library
        Radii of the initial-set library.
    box_lo : float, default=LAB_CONFIG.boxes.lo
        Lower bound of the phase-space box.
    box_hi : float, default=LAB_CONFIG.boxes.hi
        Upper bound of the phase-space box.
    cells : int, default=LAB_CONFIG.boxes.cells
        Cells per axis.
    output_dir : str, default=LAB_CONFIG.runner.output_dir
        Output directory.
    workers : int, default=LAB_CONFIG.runner.workers
        Worker threads.
    tolerance : float or None, default=None
        Acceptance tolerance; ``None`` uses the problem default.
    rate_table : bool, default=True
        Whether attraction-rate tables are computed.
    trajectory : bool, default=False
        Whether each job writes the trajectory started at the origin over ``[0, t_tail]``.
    symbols_enabled : bool, default=False
        Whether each job runs the symbol-space stage: hull net, Holder diagnostic, skew-product
        projection, relation check and stability search.
    symbol_channel : str, default=""
        Channel sampled as the symbol; empty selects the only channel of the field.
    hull_eps : float, default=0.05
        Radius of the hull net.
    holder_window : float, default=10.0
        Half width ``M`` of the Holder diagnostic window.
    stability_eps : float, default=0.5
        Outer radius of the stability search.
    stability_deltas : tuple of float, default=(0.05, 0.1, 0.25)
        Sorted candidate radii inside ``(0, stability_eps)``.
    probe_seeds : int, default=200
        Seeds of the OU probe run with ``ou_counterexample``.
    probe_windows : tuple of float, default=(10.0, 100.0, 1000.0)
        Window half widths of the OU probe.
    """

    problem_id: str
    parameters: Dict[str, str] = field(default_factory=dict)
    driver_kind: str = ""
    seeds: Tuple[int, ...] = (0,)
    taus: Tuple[float, ...] = (0.0,)
    angles: Tuple[float, ...] = (0.0,)
    dt: float = LAB_CONFIG.driver.dt
    ou_truncation: float = LAB_CONFIG.driver.ou_truncation
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    limits: LimitConfig = field(default_factory=LimitConfig)
    library: Tuple[float, ...] = LAB_CONFIG.boxes.library
    box_lo: float = LAB_CONFIG.boxes.lo
    box_hi: float = LAB_CONFIG.boxes.hi
    cells: int = LAB_CONFIG.boxes.cells
    output_dir: str = LAB_CONFIG.runner.output_dir
    workers: int = LAB_CONFIG.runner.workers
    tolerance: Optional[float] = None
    rate_table: bool = True
    trajectory: bool = False
    symbols_enabled: bool = False
    symbol_channel: str = ""
    hull_eps: float = 0.05
    holder_window: float = 10.0
    stability_eps: float = 0.5
    stability_deltas: Tuple[float, ...] = (0.05, 0.1, 0.25)
    probe_seeds: int = 200
    probe_windows: Tuple[float, ...] = (10.0, 100.0, 1000.0)

    def __post_init__(self) -> None:
        """Resolve the driver and check grid consistency."""
        problem = get_problem(self.problem_id)
        if not self.driver_kind:
            self.driver_kind = problem.driver_kinds[0]
        problem.check_driver(self.driver_kind)
        problem.resolve_parameters(self.parameters)
        if not (self.seeds and self.taus and self.angles and self.library):
            raise ConfigError("seeds, taus, angles and library must be non-empty")
        if any(seed < 0 for seed in self.seeds):
            raise ConfigError(f"Seeds must be non-negative, got {self.seeds}")
        if not self.box_lo < self.box_hi or self.cells < 1:
            raise ConfigError(f"Invalid box [{self.box_lo}, {self.box_hi}] with {self.cells} cells")
        step = self.integrator.step
        limits = self.limits
        for name, value in (("stride", limits.stride), ("t_burn", limits.t_burn), ("t_tail", limits.t_tail)):
            if not is_multiple(value, step):
                raise ConfigError(f"{name}={value} is not a multiple of the integration step {step}")
        if self.driver_kind == WIENER:
            for value in self.taus + self.limits.s_grid:
                if not is_multiple(value, self.dt):
                    raise ConfigError(f"Time {value} is not a multiple of the path step {self.dt}")
        if self.workers < 1:
            raise ConfigError(f"workers must be positive, got {self.workers}")
        if self.symbols_enabled:
            self._check_symbol_stage(problem)

    def _check_symbol_stage(self, problem: BenchmarkProblem) -> None:
        """Validate the symbol-space settings against the problem field.

        Parameters
        ----------
        problem : BenchmarkProblem
            Registry entry of the run.

        Raises
        ------
        ConfigError
            If the symbol channel is ambiguous or unknown, or a radius or window is out of range.
        """
        params = problem.resolve_parameters(self.parameters)
        field_spec = problem.build_field(params, self.driver_kind, OuEvaluator(self.ou_truncation))
        names = [c.name for c in field_spec.channels]
        if not self.symbol_channel and len(names) != 1:
            raise ConfigError(f"Problem '{self.problem_id}' has channels {names}; set [symbols] channel")
        if self.symbol_channel and self.symbol_channel not in names:
            raise ConfigError(f"Problem '{self.problem_id}' has no channel '{self.symbol_channel}'")
        if not self.hull_eps > 0.0:
            raise ConfigError(f"Hull radius must be positive, got {self.hull_eps}")
        if not 0.0 < self.holder_window <= self.symbol_half_width:
            raise ConfigError(f"holder_window must lie in (0, {self.symbol_half_width}], got {self.holder_window}")
        deltas = list(self.stability_deltas)
        if not deltas or deltas != sorted(deltas) or deltas[0] <= 0.0 or deltas[-1] >= self.stability_eps:
            raise ConfigError(f"deltas must be sorted inside (0, {self.stability_eps}), got {deltas}")

    @property
    def symbol_half_width(self) -> float:
        """Half width of the stored symbol window.

        Returns
        -------
        float
            ``s_max + max(N, t_tail)`` rounded up to the path grid, enough for every translate to be
            compared on ``[-N, N]`` and to drive a flow over ``[0, t_tail]``.
        """
        reach = self.limits.s_max + max(float(LAB_CONFIG.symbols.metric_levels), self.limits.t_tail)
        return math.ceil(reach / self.dt - 1e-9) * self.dt

    @property
    def symbol_channel_name(self) -> str:
        """Name of the channel sampled by the symbol-space stage.

        Returns
        -------
        str
            The configured channel or the single channel of the problem field.
        """
        if self.symbol_channel:
            return self.symbol_channel
        problem = get_problem(self.problem_id)
        params = problem.resolve_parameters(self.parameters)
        return problem.build_field(params, self.driver_kind, OuEvaluator(self.ou_truncation)).channels[0].name

    @property
    def grid(self) -> BoxGrid:
        """Phase-space grid of the experiment.

        Returns
        -------
        BoxGrid
            Cubic grid in the problem dimension.
        """
        return BoxGrid.cube(self.box_lo, self.box_hi, self.cells, get_problem(self.problem_id).dimension)

    def ball_library(self) -> List[BoxSet]:
        """Return the initial-set library as cubes ``[-r, r]^d`` on the experiment grid.

        Returns
        -------
        list of BoxSet
            One set per configured radius.
        """
        grid = self.grid
        sets = []
        for radius in self.library:
            centres = BoxSet.cover_box(grid).centers()
            inside = (abs(centres) <= radius).all(axis=1)
            sets.append(BoxSet.from_points(grid, centres[inside]))
        return sets

    def jobs(self) -> List[JobSpec]:
        """Expand seeds, initial times and angles into jobs.

        Returns
        -------
        list of JobSpec
            Wiener jobs iterate seeds then times; circle jobs iterate angles then times.
        """
        if self.driver_kind == CIRCLE:
            pairs = [(0, tau, angle) for angle in self.angles for tau in self.taus]
        else:
            pairs = [(seed, tau, 0.0) for seed in self.seeds for tau in self.taus]
        return [JobSpec(job_id, seed, tau, angle) for job_id, (seed, tau, angle) in enumerate(pairs)]

    def effective_tolerance(self) -> Optional[float]:
        """Return the configured tolerance or the problem default.

        Returns
        -------
        float or None
            Tolerance on the reference distance.
        """
        if self.tolerance is not None:
            return self.tolerance
        return get_problem(self.problem_id).tolerance

    def to_sections(self) -> Sections:
        """Serialise the configuration into INI sections.

        Returns
        -------
        dict
            Section name to key/value text, parseable by :meth:`from_sections`.
        """
        s_grid = self.limits.s_grid
        problem = {"id": self.problem_id}
        problem.update({f"param_{name}": value for name, value in sorted(self.parameters.items())})
        return {
            "problem": problem,
            "driver": {
                "kind": self.driver_kind,
                "seeds": _join(self.seeds),
                "taus": _join(self.taus),
                "angles": _join(self.angles),
                "dt": repr(self.dt),
                "ou_truncation": repr(self.ou_truncation),
            },
            "integrator": {
                "scheme": self.integrator.scheme,
                "step": repr(self.integrator.step),
                "blowup_guard": repr(self.integrator.blowup_guard),
            },
            "limits": {
                "s_max": repr(max(abs(s) for s in s_grid)),
                "s_count": str(len(s_grid)),
                "t_burn": repr(self.limits.t_burn),
                "t_tail": repr(self.limits.t_tail),
                "stride": repr(self.limits.stride),
                "density": str(self.limits.density),
                "check_monotonicity": str(self.limits.check_monotonicity).lower(),
                "library": _join(self.library),
            },
            "boxes": {"lo": repr(self.box_lo), "hi": repr(self.box_hi), "cells": str(self.cells)},
            "symbols": {
                "enabled": str(self.symbols_enabled).lower(),
                "channel": self.symbol_channel,
                "eps": repr(self.hull_eps),
                "holder_window": repr(self.holder_window),
                "stability_eps": repr(self.stability_eps),
                "deltas": _join(self.stability_deltas),
            },
            "output": {
                "directory": self.output_dir,
                "workers": str(self.workers),
                "tolerance": "" if self.tolerance is None else repr(self.tolerance),
                "rate_table": str(self.rate_table).lower(),
                "trajectory": str(self.trajectory).lower(),
                "probe_seeds": str(self.probe_seeds),
                "probe_windows": _join(self.probe_windows),
            },
        }

    @classmethod
    def from_sections(cls, sections: Mapping[str, Mapping[str, str]]) -> ExperimentConfig:
        """Build a configuration from INI sections.

        Parameters
        ----------
        sections : mapping
            Section name to key/value text.

        Returns
        -------
        ExperimentConfig
            Validated configuration.

        Raises
        ------
        ConfigError
            On unknown sections or keys, missing problem id or unparsable values.
        """
        for name, entries in sections.items():
            if name not in _SECTION_KEYS:
                raise ConfigError(f"Unknown config section [{name}]")
            for key in entries:
                if key not in _SECTION_KEYS[name] and not (name == "problem" and key.startswith("param_")):
                    raise ConfigError(f"Unknown key '{key}' in section [{name}]")
        problem = dict(sections.get("problem", {}))
        if "id" not in problem:
            raise ConfigError("Section [problem] needs an 'id'")

        def get(section: str, key: str) -> Optional[str]:
            value = sections.get(section, {}).get(key)
            return value.strip() if value is not None and value.strip() else None

        kwargs: Dict[str, object] = {
            "problem_id": problem.pop("id").strip(),
            "parameters": {key[len("param_") :]: value.strip() for key, value in problem.items()},
        }
        try:
            driver_kind = get("driver", "kind")
            if driver_kind:
                kwargs["driver_kind"] = driver_kind
            for key, parse in (("seeds", _ints), ("taus", _floats), ("angles", _floats)):
                raw = get("driver", key)
                if raw:
                    kwargs[key] = parse(raw)
            for key in ("dt", "ou_truncation"):
                raw = get("driver", key)
                if raw:
                    kwargs[key] = float(raw)

            defaults = IntegratorConfig()
            kwargs["integrator"] = IntegratorConfig(
                scheme=get("integrator", "scheme") or defaults.scheme,
                step=float(get("integrator", "step") or defaults.step),
                blowup_guard=float(get("integrator", "blowup_guard") or defaults.blowup_guard),
            )

            base = LimitConfig()
            s_max = get("limits", "s_max")
            s_count = get("limits", "s_count")
            s_grid = base.s_grid
            if s_max or s_count:
                s_grid = symmetric_shifts(float(s_max or base.s_max), int(s_count or len(base.s_grid)))
            monotone = get("limits", "check_monotonicity")
            kwargs["limits"] = LimitConfig(
                s_grid=s_grid,
                t_burn=float(get("limits", "t_burn") or base.t_burn),
                t_tail=float(get("limits", "t_tail") or base.t_tail),
                stride=float(get("limits", "stride") or base.stride),
                density=int(get("limits", "density") or base.density),
                check_monotonicity=base.check_monotonicity if monotone is None else _bool(monotone),
            )
            library = get("limits", "library")
            if library:
                kwargs["library"] = _floats(library)

            for key, parse in (("lo", float), ("hi", float), ("cells", int)):
                raw = get("boxes", key)
                if raw:
                    kwargs["box_" + key if key != "cells" else "cells"] = parse(raw)

            directory = get("output", "directory")
            if directory:
                kwargs["output_dir"] = directory
            for key, parse in (("workers", int), ("tolerance", float), ("probe_seeds", int)):
                raw = get("output", key)
                if raw:
                    kwargs[key] = parse(raw)
            for key, name in (("rate_table", "rate_table"), ("trajectory", "trajectory")):
                raw = get("output", key)
                if raw:
                    kwargs[name] = _bool(raw)

            enabled = get("symbols", "enabled")
            if enabled:
                kwargs["symbols_enabled"] = _bool(enabled)
            channel = get("symbols", "channel")
            if channel:
                kwargs["symbol_channel"] = channel
            radii = (("eps", "hull_eps"), ("holder_window", "holder_window"), ("stability_eps", "stability_eps"))
            for key, name in radii:
                raw = get("symbols", key)
                if raw:
                    kwargs[name] = float(raw)
            deltas = get("symbols", "deltas")
            if deltas:
                kwargs["stability_deltas"] = _floats(deltas)
            windows = get("output", "probe_windows")
            if windows:
                kwargs["probe_windows"] = _floats(windows)
        except ValueError as exc:
            if isinstance(exc, LabError):
                raise
            raise ConfigError(f"Malformed config value: {exc}") from exc
        return cls(**kwargs)


@dataclass(frozen=True, slots=True)
class ProbeRow:
    """Windowed suprema of one seed.

    Parameters
    ----------
    seed : int
        Noise seed.
    suprema : list of float
        ``sup_{|s| <= S} |z(theta_s w)|`` for every window half width ``S``.
    """

    seed: int
    suprema: List[float]

    @property
    def increasing(self) -> bool:
        """Whether the suprema grow strictly with the window.

        Returns
        -------
        bool
            ``True`` when every entry exceeds its predecessor.
        """
        return all(b > a for a, b in zip(self.suprema, self.suprema[1:]))


@dataclass(frozen=True, slots=True)
class ProbeResult:
    """Table and summary statistics of the OU non-existence probe.

    Parameters
    ----------
    S_list : list of float
        Window half widths, strictly increasing.
    rows : list of ProbeRow
        One row per seed.
    fraction_increasing : float
        Share of seeds whose suprema increase strictly.
    expected_fraction : float
        Share expected for a stationary process, ``prod (1 - S_k / S_{k+1})``.
    variance : float
        Sample variance of the pooled ``z`` values.
    ks_statistic : float
        Kolmogorov-Smirnov distance of the pooled values to ``N(0, 1/2)``.
    ks_pvalue : float
        p-value of the same test.
    samples : int
        Number of pooled ``z`` values.
    """

    S_list: List[float]
    rows: List[ProbeRow]
    fraction_increasing: float
    expected_fraction: float
    variance: float
    ks_statistic: float
    ks_pvalue: float
    samples: int


@dataclass(slots=True)
class JobResult:
    """Outcome of one job.

    Parameters
    ----------
    job : JobSpec
        Job description.
    estimate : BoxSet or None, default=None
        MJUA estimate in the problem's state coordinates.
    forward : BoxSet or None, default=None
        Forward omega-limit estimate.
    forward_contained : bool or None, default=None
        Whether the forward limit lies in the uniform one grown by one cell.
    nested : bool or None, default=None
        Monotonicity flag of the largest library entry.
    distance : float or None, default=None
        Semi-distance from the estimate to the reference attractor.
    coverage_gap : float or None, default=None
        Semi-distance from the reference attractor to the estimate.
    sensitivity : list of float, default=[]
        Library sensitivity, one value per initial set.
    rate : RateTable or None, default=None
        Attraction-rate table.
    conjugacy : ConvergenceReport or None, default=None
        Conjugacy convergence study for SDE problems.
    kappa_bounds : list of KappaBound, default=[]
        Windowed noise bounds for SDE problems.
    trajectory : TrajectorySegment or None, default=None
        Solution started at the origin over ``[0, t_tail]``.
    hull : HullSample or None, default=None
        Hull net of the sampled symbol channel.
    holder : HolderEstimate or None, default=None
        Holder diagnostic of the orbit symbol.
    projection : BoxSet or None, default=None
        Phase-space projection of the skew-product attractor over the hull net.
    projection_gap : float or None, default=None
        Hausdorff distance between the projection and the uniform estimate.
    relation_deviation : float or None, default=None
        Largest gap between the symbol flow and the cocycle over the shifted base points.
    stability : StabilityReport or None, default=None
        Stability search around the uniform estimate.
    runtime_ms : float, default=0.0
        Wall-clock runtime.
    error : str or None, default=None
        Message of a numerical failure.
    error_kind : str or None, default=None
        Exception class name of the failure.
    """

    job: JobSpec
    estimate: Optional[BoxSet] = None
    forward: Optional[BoxSet] = None
    forward_contained: Optional[bool] = None
    nested: Optional[bool] = None
    distance: Optional[float] = None
    coverage_gap: Optional[float] = None
    sensitivity: List[float] = field(default_factory=list)
    rate: Optional[RateTable] = None
    conjugacy: Optional[ConvergenceReport] = None
    kappa_bounds: List[KappaBound] = field(default_factory=list)
    trajectory: Optional[TrajectorySegment] = None
    hull: Optional[HullSample] = None
    holder: Optional[HolderEstimate] = None
    projection: Optional[BoxSet] = None
    projection_gap: Optional[float] = None
    relation_deviation: Optional[float] = None
    stability: Optional[StabilityReport] = None
    runtime_ms: float = 0.0
    error: Optional[str] = None
    error_kind: Optional[str] = None


@dataclass(slots=True)
class ResultRecord:
    """In-memory record of an experiment run.

    Parameters
    ----------
    config : ExperimentConfig
        Configuration that produced the run.
    config_text : str
        Canonical INI echo of the configuration.
    config_hash : str
        SHA-256 digest of ``config_text``.
    jobs : list of JobResult, default=[]
        Per-job results in job order.
    probe : ProbeResult or None, default=None
        OU probe result for ``ou_counterexample`` runs.
    runtime_ms : float, default=0.0
        Total wall-clock runtime.
    """

    config: ExperimentConfig
    config_text: str
    config_hash: str
    jobs: List[JobResult] = field(default_factory=list)
    probe: Optional[ProbeResult] = None
    runtime_ms: float = 0.0

    @property
    def diverged(self) -> bool:
        """Whether any job failed with a divergence.

        Returns
        -------
        bool
            ``True`` when a job recorded a ``DivergenceError``.
        """
        return any(job.error_kind == "DivergenceError" for job in self.jobs)

    def tolerance_failures(self) -> List[JobResult]:
        """Return the jobs whose reference distance exceeds the tolerance.

        Returns
        -------
        list of JobResult
            Failing jobs; empty when the problem has no reference.
        """
        tolerance = self.config.effective_tolerance()
        if tolerance is None:
            return []
        return [job for job in self.jobs if job.distance is not None and job.distance > tolerance]
