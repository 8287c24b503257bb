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
"""Experiment runner: per-job attractor estimation, the collector that writes artefacts, and the OU probe.

Jobs are independent ``(problem, seed, base point)`` units. They run on a thread pool and their
results come back in job order, so a single collector writes every file in a fixed sequence and
a replayed configuration reproduces the dumps and tables bit for bit.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import partial, reduce
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from nrdslab.engine.cocycle import Cocycle, FieldSpec, integrate_rde
from nrdslab.engine.cohomology import ConjugacyTransform, kappa_noise_bound, verify_conjugacy
from nrdslab.engine.config import LAB_CONFIG, is_multiple
from nrdslab.engine.driver import BasePoint, CircleState, OuEvaluator, SamplePath, ou_series, shift_path, wiener_sample
from nrdslab.engine.errors import DivergenceError, DomainError, GridError, SupportError, ToleranceError
from nrdslab.engine.setvalued import (
    BoxGrid,
    BoxSet,
    attraction_rate,
    forward_omega_limit,
    hausdorff_distance,
    hausdorff_semidist,
    library_sensitivity,
    uniform_omega_limit_report,
)
from nrdslab.engine.symbolspace import (
    holder_diagnostic,
    hull_net,
    nds_relation_deviation,
    orbit_symbol,
    skew_product_projection,
    stability_probe,
)
from nrdslab.models.benchmark import CIRCLE, BenchmarkProblem, Parameters, get_problem
from nrdslab.models.experiment import (
    ExperimentConfig,
    JobResult,
    JobSpec,
    ProbeResult,
    ProbeRow,
    ResultRecord,
)
from nrdslab.utils.debug import RunDebugger
from nrdslab.utils.persistence import (
    config_hash,
    config_text,
    dump_boxset,
    dump_hull,
    dump_path,
    stability_to_csv,
    trajectory_to_csv,
    write_csv,
    write_summary,
)

_RECORDED_ERRORS = (DivergenceError, DomainError, GridError, SupportError)


@dataclass(frozen=True, slots=True, eq=False)
class _RunContext:
    """Objects shared by every job of a run.

    Parameters
    ----------
    cfg : ExperimentConfig
        Run configuration.
    problem : BenchmarkProblem
        Registry entry.
    params : mapping
        Resolved problem parameters.
    ou : OuEvaluator
        OU settings.
    field : FieldSpec
        Random ODE of the problem.
    phi : Cocycle
        Cocycle integrating ``field``.
    grid : BoxGrid
        Output partition.
    library : list of BoxSet
        Initial-set library, smallest first.
    debugger : RunDebugger
        Run log.
    """

    cfg: ExperimentConfig
    problem: BenchmarkProblem
    params: Parameters
    ou: OuEvaluator
    field: FieldSpec
    phi: Cocycle
    grid: BoxGrid
    library: List[BoxSet]
    debugger: RunDebugger


def _grid_floor(t: float, dt: float) -> float:
    """Round ``t`` down to the path grid.

    Parameters
    ----------
    t : float
        Time.
    dt : float
        Grid step.

    Returns
    -------
    float
        Largest grid multiple not above ``t``.
    """
    return math.floor(t / dt + 1e-9) * dt


def _grid_ceil(t: float, dt: float) -> float:
    """Round ``t`` up to the path grid.

    Parameters
    ----------
    t : float
        Time.
    dt : float
        Grid step.

    Returns
    -------
    float
        Smallest grid multiple not below ``t``.
    """
    return math.ceil(t / dt - 1e-9) * dt


def path_window(cfg: ExperimentConfig, tau: float) -> Tuple[float, float]:
    """Size the stored Brownian window needed by one job.

    The window covers every shifted base point ``Theta_s(tau, w)`` for ``|s| <= s_max`` over the
    integration horizon, the OU truncation behind the earliest of them, and the pulled-back origin
    read by frozen channels, padded by ``LAB_CONFIG.driver.window_margin``. With the symbol stage
    enabled it also covers the symbol window ``tau +- symbol_half_width``.

    Parameters
    ----------
    cfg : ExperimentConfig
        Run configuration.
    tau : float
        Initial time of the job.

    Returns
    -------
    tuple of float
        Absolute ``(t_min, t_max)`` on the path grid, straddling zero.
    """
    s_max = cfg.limits.s_max
    margin = LAB_CONFIG.driver.window_margin
    reach = max(s_max, cfg.symbol_half_width) if cfg.symbols_enabled else s_max
    lo = min(-s_max, tau - reach) - cfg.ou_truncation - margin
    hi = max(s_max, tau + s_max + cfg.limits.horizon, tau + reach) + margin
    return _grid_floor(lo, cfg.dt), _grid_ceil(hi, cfg.dt)


def _base_point(cfg: ExperimentConfig, job: JobSpec) -> Tuple[BasePoint, Optional[SamplePath]]:
    """Build the base point of a job.

    Parameters
    ----------
    cfg : ExperimentConfig
        Run configuration.
    job : JobSpec
        Job description.

    Returns
    -------
    tuple
        Base point ``(tau, w)`` and, for the Wiener driver, the absolute path it was shifted from.
    """
    if cfg.driver_kind == CIRCLE:
        return BasePoint(job.tau, CircleState(job.angle)), None
    t_min, t_max = path_window(cfg, job.tau)
    p = wiener_sample(job.seed, t_min, t_max, cfg.dt)
    return BasePoint(job.tau, shift_path(p, job.tau)), p


def _conjugacy_path(cfg: ExperimentConfig, job: JobSpec, p: SamplePath, steps: Sequence[float]) -> SamplePath:
    """Return a path whose grid divides every conjugacy step.

    Parameters
    ----------
    cfg : ExperimentConfig
        Run configuration.
    job : JobSpec
        Job description.
    p : SamplePath
        Path of the job.
    steps : sequence of float
        Conjugacy step sizes.

    Returns
    -------
    SamplePath
        ``p`` itself when its step divides every entry, otherwise a finer path of the same seed.
    """
    if all(is_multiple(step, p.dt) for step in steps):
        return p
    dt = min(steps)
    horizon = LAB_CONFIG.cohomology.conjugacy_horizon
    margin = LAB_CONFIG.driver.window_margin
    lo = min(-margin, job.tau - cfg.ou_truncation - margin)
    hi = max(margin, job.tau + horizon + margin)
    return wiener_sample(job.seed, _grid_floor(lo, dt), _grid_ceil(hi, dt), dt)


def _symbol_stage(ctx: _RunContext, job: JobSpec, b: BasePoint, estimate: BoxSet, result: JobResult) -> None:
    """Run the hull, Holder, skew-product and stability diagnostics of one job.

    The projection and the relation check replace the sampled channel by symbols and therefore need a
    single-channel field; other fields get the hull, Holder and stability results only.

    Parameters
    ----------
    ctx : _RunContext
        Shared run objects.
    job : JobSpec
        Job description.
    b : BasePoint
        Base point of the job.
    estimate : BoxSet
        Uniform estimate in the coordinates of the cocycle.
    result : JobResult
        Result updated in place.
    """
    cfg = ctx.cfg
    limits = cfg.limits
    name = cfg.symbol_channel_name
    channel = next(c for c in ctx.field.channels if c.name == name)
    sigma = orbit_symbol(channel, b, cfg.symbol_half_width, cfg.dt)
    result.hull = hull_net(sigma, limits.s_grid, cfg.hull_eps)
    result.holder = holder_diagnostic(sigma, cfg.holder_window)
    if len(ctx.field.channels) == 1:
        result.projection = skew_product_projection(
            ctx.field, result.hull, ctx.library[-1], limits, cfg.integrator, ctx.grid
        )
        result.projection_gap = hausdorff_distance(result.projection, estimate)
        half_step = 0.5 * cfg.integrator.step
        half_width = _grid_ceil(limits.s_max + limits.t_tail, half_step)
        shifts = sorted({-limits.s_max, 0.0, limits.s_max})
        x0 = np.zeros(ctx.field.dimension)
        result.relation_deviation = nds_relation_deviation(ctx.phi, name, b, x0, limits.t_tail, half_width, shifts)
    if not estimate.is_empty():
        result.stability = stability_probe(ctx.phi, estimate, cfg.stability_eps, cfg.stability_deltas, b, limits)
    best = result.stability.best_delta if result.stability is not None else None
    ctx.debugger.log_symbol_stage(job.job_id, len(result.hull.net), result.holder.alpha, best)


def _run_job(ctx: _RunContext, job: JobSpec) -> Tuple[JobResult, Optional[SamplePath]]:
    """Execute one job and record numerical failures instead of raising them.

    Parameters
    ----------
    ctx : _RunContext
        Shared run objects.
    job : JobSpec
        Job description.

    Returns
    -------
    tuple
        Job result and the Brownian path used, when the driver is Wiener.
    """
    cfg = ctx.cfg
    ctx.debugger.log_job_start(job.job_id, cfg.problem_id, job.seed, job.tau)
    started = time.perf_counter()
    result = JobResult(job=job)
    p: Optional[SamplePath] = None
    try:
        b, p = _base_point(cfg, job)
        reports = [uniform_omega_limit_report(ctx.phi, B0, b, cfg.limits, ctx.grid) for B0 in ctx.library]
        parts = [report.boxes for report in reports]
        estimate = reduce(BoxSet.union, parts)
        forward = forward_omega_limit(ctx.phi, ctx.library[-1], b, cfg.limits, ctx.grid)
        result.nested = all(report.nested for report in reports)
        result.forward_contained = forward.contained_in(estimate, dilation=1)
        result.sensitivity = library_sensitivity(parts)
        ctx.debugger.log_limit_report(job.job_id, estimate.count, result.nested, result.forward_contained)
        if cfg.rate_table:
            result.rate = attraction_rate(ctx.phi, ctx.library[-1], estimate, b, cfg.limits)
        if cfg.trajectory:
            origin = np.zeros(ctx.field.dimension)
            result.trajectory = integrate_rde(ctx.field, b, origin, cfg.limits.t_tail, cfg.integrator)
        if cfg.symbols_enabled:
            _symbol_stage(ctx, job, b, estimate, result)

        if ctx.problem.sde is not None and p is not None:
            setup = ctx.problem.sde(ctx.params)
            to_state = partial(ConjugacyTransform(setup.kappa, ctx.ou).inverse, b.tau, b.driver)
            estimate = estimate.map_points(to_state)
            forward = forward.map_points(to_state)
            settings = LAB_CONFIG.cohomology
            x0 = np.full(ctx.field.dimension, settings.conjugacy_x0)
            result.conjugacy = verify_conjugacy(
                setup.A,
                setup.check_nonlinearity,
                setup.kappa,
                _conjugacy_path(cfg, job, p, settings.conjugacy_steps),
                job.tau,
                x0,
                settings.conjugacy_horizon,
                settings.conjugacy_steps,
                ctx.ou,
            )
            ctx.debugger.log_conjugacy(job.job_id, result.conjugacy.errors[-1], result.conjugacy.order)
            s_max = cfg.limits.s_max
            result.kappa_bounds = [
                kappa_noise_bound(setup.kappa, p, S, ctx.ou) for S in (0.25 * s_max, 0.5 * s_max, s_max) if S > 0
            ]

        result.estimate = estimate
        result.forward = forward
        reference = ctx.problem.reference_set(b, ctx.params, ctx.ou, ctx.grid)
        if reference is not None:
            result.distance = hausdorff_semidist(estimate, reference)
            result.coverage_gap = hausdorff_semidist(reference, estimate)
    except _RECORDED_ERRORS as exc:
        result.error = str(exc)
        result.error_kind = type(exc).__name__
        if isinstance(exc, DivergenceError):
            ctx.debugger.log_divergence(job.job_id, exc.escape_time, exc.message)
        else:
            ctx.debugger.log_error(result.error_kind, f"Job {job.job_id} | {exc}")
    result.runtime_ms = (time.perf_counter() - started) * 1000.0
    ctx.debugger.log_job_end(job.job_id, result.runtime_ms, result.distance)
    return result, p


def _write_job_files(out: Path, result: JobResult, p: Optional[SamplePath], reference: bool) -> None:
    """Write the artefacts of one job.

    Parameters
    ----------
    out : Path
        Run directory.
    result : JobResult
        Finished job.
    p : SamplePath or None
        Brownian path of the job.
    reference : bool
        Whether the problem has a reference attractor.
    """
    label = result.job.label
    if p is not None:
        dump_path(p, out / f"{label}_path.txt")
    if result.estimate is not None:
        dump_boxset(result.estimate, out / f"{label}_estimate.box")
    if result.forward is not None:
        dump_boxset(result.forward, out / f"{label}_forward.box")
    if result.rate is not None:
        write_csv(out / f"{label}_rate.csv", ("t", "dist"), result.rate.rows())
    if result.sensitivity:
        write_csv(out / f"{label}_library.csv", ("entry", "missed"), list(enumerate(result.sensitivity)))
    if result.conjugacy is not None:
        write_csv(out / f"{label}_conjugacy.csv", ("dt", "sup_error"), result.conjugacy.rows())
    if result.kappa_bounds:
        rows = [(bound.S, bound.sup_kz, bound.sup_kdotz) for bound in result.kappa_bounds]
        write_csv(out / f"{label}_kappa.csv", ("S", "sup_kz", "sup_kdotz"), rows)
    if result.trajectory is not None:
        trajectory_to_csv(result.trajectory, out / f"{label}_trajectory.csv")
    if result.hull is not None:
        dump_hull(result.hull, out / f"{label}_hull.txt")
    if result.holder is not None:
        holder = result.holder
        write_csv(
            out / f"{label}_holder.csv",
            ("alpha", "constant", "window", "sup_abs"),
            [(holder.alpha, holder.constant, holder.window, holder.sup_abs)],
        )
    if result.projection is not None:
        dump_boxset(result.projection, out / f"{label}_projection.box")
        write_csv(
            out / f"{label}_skew.csv",
            ("projection_gap", "relation_deviation"),
            [(result.projection_gap, result.relation_deviation)],
        )
    if result.stability is not None:
        stability_to_csv(result.stability, out / f"{label}_stability.csv")
    if reference and result.distance is not None:
        write_csv(
            out / f"{label}_distance.csv",
            ("distance", "coverage_gap"),
            [(result.distance, result.coverage_gap)],
        )


def write_probe(out: Path, probe: ProbeResult) -> None:
    """Write the probe table and summary.

    Parameters
    ----------
    out : Path
        Run directory.
    probe : ProbeResult
        Probe outcome.
    """
    header = ["seed"] + [f"sup_S{S:g}" for S in probe.S_list] + ["increasing"]
    rows = [[row.seed, *row.suprema, row.increasing] for row in probe.rows]
    write_csv(out / "probe.csv", header, rows)
    summary = [
        ("fraction_increasing", probe.fraction_increasing),
        ("expected_fraction", probe.expected_fraction),
        ("variance", probe.variance),
        ("ks_statistic", probe.ks_statistic),
        ("ks_pvalue", probe.ks_pvalue),
        ("samples", probe.samples),
    ]
    write_csv(out / "probe_summary.csv", ("statistic", "value"), summary)


def run_experiment(cfg: ExperimentConfig, debugger: RunDebugger | None = None) -> ResultRecord:
    """Run every job of a configuration and write its artefacts.

    Parameters
    ----------
    cfg : ExperimentConfig
        Validated configuration.
    debugger : RunDebugger, optional
        Run log; a new one under ``<output_dir>/debug_logs`` is created and closed when omitted.

    Returns
    -------
    ResultRecord
        In-memory record of the run; numerical failures are recorded per job.

    Raises
    ------
    ConfigError
        If the configuration is inconsistent with the problem, for example a reference attractor
        that leaves the configured box.
    """
    started = time.perf_counter()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    owns_debugger = debugger is None
    log = debugger or RunDebugger(str(out / "debug_logs"))

    problem = get_problem(cfg.problem_id)
    params = problem.resolve_parameters(cfg.parameters)
    ou = OuEvaluator(cfg.ou_truncation)
    field = problem.build_field(params, cfg.driver_kind, ou)
    grid = cfg.grid
    ctx = _RunContext(
        cfg=cfg,
        problem=problem,
        params=params,
        ou=ou,
        field=field,
        phi=Cocycle(field, cfg.integrator),
        grid=grid,
        library=cfg.ball_library(),
        debugger=log,
    )
    text = config_text(cfg)
    record = ResultRecord(config=cfg, config_text=text, config_hash=config_hash(text))

    try:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = list(pool.map(partial(_run_job, ctx), cfg.jobs()))

        (out / "config.ini").write_text(text, encoding="utf-8")
        for result, p in outcomes:
            record.jobs.append(result)
            _write_job_files(out, result, p, problem.reference is not None)

        if cfg.problem_id == "ou_counterexample":
            record.probe = mua_nonexistence_probe(
                list(range(cfg.probe_seeds)), cfg.probe_windows, dt=cfg.dt, ou=ou
            )
            log.log_probe(len(record.probe.rows), record.probe.fraction_increasing, record.probe.variance)
            write_probe(out, record.probe)

        tolerance = cfg.effective_tolerance()
        for failed in record.tolerance_failures():
            log.log_tolerance(failed.job.job_id, failed.distance, tolerance)

        record.runtime_ms = (time.perf_counter() - started) * 1000.0
        write_summary(record, out / "summary.json")
    finally:
        if owns_debugger:
            log.close()
    return record


def enforce_tolerance(record: ResultRecord) -> None:
    """Raise when a job of the run misses its acceptance tolerance.

    Parameters
    ----------
    record : ResultRecord
        Finished run.

    Raises
    ------
    ToleranceError
        If any reference distance exceeds the tolerance.
    """
    failures = record.tolerance_failures()
    if failures:
        jobs = ", ".join(f"{job.job.label}={job.distance:.3e}" for job in failures)
        raise ToleranceError(f"Reference distance above {record.config.effective_tolerance():g}: {jobs}")


def mua_nonexistence_probe(
    seeds: Sequence[int],
    S_list: Sequence[float],
    dt: float | None = None,
    ou: OuEvaluator | None = None,
    sample_spacing: float = 5.0,
) -> ProbeResult:
    """Tabulate windowed suprema of ``|z(theta_s w)|`` and test the law of ``z``.

    A uniform attractor of ``u' = -u + z(theta_t w)`` would bound ``z`` along whole orbits; the
    suprema over ``|s| <= S`` keep growing instead. Values of ``z`` pooled every
    ``sample_spacing`` time units are compared with the stationary law ``N(0, 1/2)``.

    Parameters
    ----------
    seeds : sequence of int
        Noise seeds.
    S_list : sequence of float
        Strictly increasing window half widths.
    dt : float, optional
        Path step; defaults to ``LAB_CONFIG.driver.dt``.
    ou : OuEvaluator, optional
        OU settings; defaults to ``OuEvaluator()``.
    sample_spacing : float, default=5.0
        Spacing of the pooled ``z`` samples.

    Returns
    -------
    ProbeResult
        Per-seed suprema and the summary statistics.

    Raises
    ------
    DomainError
        If the seed list is empty or ``S_list`` is not strictly increasing and positive.
    """
    windows = [float(S) for S in S_list]
    if not seeds:
        raise DomainError("The probe needs at least one seed")
    if not windows or windows[0] <= 0.0 or any(b <= a for a, b in zip(windows, windows[1:])):
        raise DomainError(f"S_list must be positive and strictly increasing, got {windows}")
    step = dt or LAB_CONFIG.driver.dt
    evaluator = ou or OuEvaluator()
    S_max = windows[-1]
    margin = LAB_CONFIG.driver.window_margin
    t_min = _grid_floor(-S_max - evaluator.truncation - margin, step)
    t_max = _grid_ceil(S_max + margin, step)
    stride = max(1, int(round(sample_spacing / step)))

    rows: List[ProbeRow] = []
    pooled: List[np.ndarray] = []
    for seed in seeds:
        p = wiener_sample(int(seed), t_min, t_max, step)
        times, z = ou_series(evaluator, p, -S_max, S_max)
        magnitude = np.abs(z)
        suprema = [float(np.max(magnitude[np.abs(times) <= S + 1e-9])) for S in windows]
        rows.append(ProbeRow(seed=int(seed), suprema=suprema))
        pooled.append(z[::stride])

    samples = np.concatenate(pooled)
    ks = stats.kstest(samples, stats.norm(loc=0.0, scale=math.sqrt(0.5)).cdf)
    expected = float(np.prod([1.0 - a / b for a, b in zip(windows, windows[1:])]))
    return ProbeResult(
        S_list=windows,
        rows=rows,
        fraction_increasing=sum(row.increasing for row in rows) / len(rows),
        expected_fraction=expected,
        variance=float(np.var(samples)),
        ks_statistic=float(ks.statistic),
        ks_pvalue=float(ks.pvalue),
        samples=int(samples.size),
    )
