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
"""Symbol spaces of nonautonomous inputs and the skew-product semiflow built on them.

A symbol is a finite-window sample of ``sigma(t) = beta(Theta_t(tau, w))``. Translates share the
stored samples and differ only in their origin shift, so ``theta_t sigma`` costs nothing to form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from nrdslab.engine.cocycle import (
    Channel,
    Cocycle,
    FieldSpec,
    integrate_table,
    stage_times,
    step_count,
)
from nrdslab.engine.config import LAB_CONFIG, IntegratorConfig, LimitConfig, is_multiple
from nrdslab.engine.driver import BasePoint, theta_big
from nrdslab.engine.errors import DivergenceError, DomainError, GridError, SupportError
from nrdslab.engine.setvalued import BoxGrid, BoxSet


@dataclass(frozen=True, slots=True, eq=False)
class SymbolFunction:
    """Finite-window sample of a symbol ``sigma``.

    ``sigma(t)`` is read from ``values`` at position ``t + tau_sigma`` of the stored grid on
    ``[-half_width, half_width]``.

    Parameters
    ----------
    values : numpy.ndarray
        Samples on ``-half_width, -half_width + dt, ..., half_width``.
    half_width : float
        Half width ``L`` of the stored window.
    dt : float
        Grid step.
    tau_sigma : float, default=0.0
        Origin shift accumulated by translations.
    """

    values: np.ndarray
    half_width: float
    dt: float
    tau_sigma: float = 0.0

    def __post_init__(self) -> None:
        """Validate the grid and the samples."""
        if not is_multiple(self.half_width, self.dt):
            raise GridError(f"dt={self.dt} does not divide the half width {self.half_width}")
        expected = 2 * int(round(self.half_width / self.dt)) + 1
        if self.values.shape != (expected,):
            raise GridError(f"Expected {expected} symbol samples, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("Symbol samples must be finite")

    @property
    def grid(self) -> np.ndarray:
        """Stored sample times.

        Returns
        -------
        numpy.ndarray
            Times on ``[-L, L]``.
        """
        n = int(round(self.half_width / self.dt))
        return np.arange(-n, n + 1) * self.dt

    def window(self) -> Tuple[float, float]:
        """Return the range of ``t`` on which ``sigma(t)`` is known.

        Returns
        -------
        tuple of float
            ``(-L - tau_sigma, L - tau_sigma)``.
        """
        return (-self.half_width - self.tau_sigma, self.half_width - self.tau_sigma)

    def evaluate(self, t: np.ndarray) -> np.ndarray:
        """Evaluate ``sigma`` by linear interpolation.

        Parameters
        ----------
        t : numpy.ndarray
            Query times inside :meth:`window`.

        Returns
        -------
        numpy.ndarray
            Values with the shape of ``t``.

        Raises
        ------
        SupportError
            If a query leaves the stored window.
        """
        shifted = np.asarray(t, dtype=float) + self.tau_sigma
        slack = 1e-9 * max(1.0, self.half_width)
        if shifted.size and (shifted.min() < -self.half_width - slack or shifted.max() > self.half_width + slack):
            lo, hi = self.window()
            raise SupportError(f"Symbol queried on [{np.min(t)}, {np.max(t)}] outside its window [{lo}, {hi}]")
        return np.interp(shifted, self.grid, self.values)


@dataclass(frozen=True, slots=True, eq=False)
class HullSample:
    """Finite epsilon-net of the hull of a symbol.

    Parameters
    ----------
    net : list of SymbolFunction
        Net elements; pairwise metric distances exceed ``eps``.
    eps : float
        Net radius.
    levels : int, default=10
        Truncation ``N`` of the compact-open metric.
    shifts : list of float or None, default=None
        Orbit shift of each net element; ``None`` marks a closure point.
    """

    net: List[SymbolFunction]
    eps: float
    levels: int = 10
    shifts: List[Optional[float]] = field(default_factory=list)

    def __post_init__(self) -> None:
        """Check that the net elements are eps-separated."""
        for i, first in enumerate(self.net):
            for second in self.net[i + 1 :]:
                if co_metric(first, second, self.levels) <= self.eps:
                    raise DomainError("Hull net elements must be pairwise more than eps apart")


@dataclass(frozen=True, slots=True)
class HolderEstimate:
    """Holder exponent and constant fitted to dyadic increment suprema.

    Parameters
    ----------
    alpha : float
        Estimated exponent in ``(0, 1]``.
    constant : float
        Estimated constant ``l >= 0``.
    window : float
        Half width ``M`` of the diagnostic window.
    sup_abs : float
        ``sup |sigma|`` on the window.
    """

    alpha: float
    constant: float
    window: float
    sup_abs: float


@dataclass(frozen=True, slots=True)
class StabilityRow:
    """Outcome of one stability trial.

    Parameters
    ----------
    delta : float
        Radius of the seeded neighbourhood.
    passed : bool
        Whether every state stayed within ``eps`` of the attractor estimate.
    shift : float or None
        Initial-time shift of the first escaping trajectory.
    seed : int or None
        Index of the first escaping seed point.
    escape_time : float or None
        Elapsed time of the first escape.
    """

    delta: float
    passed: bool
    shift: Optional[float] = None
    seed: Optional[int] = None
    escape_time: Optional[float] = None


@dataclass(frozen=True, slots=True)
class StabilityReport:
    """Result of :func:`stability_probe`.

    Parameters
    ----------
    best_delta : float or None
        Largest passing radius, ``None`` when every candidate failed.
    rows : list of StabilityRow
        One row per candidate, in candidate order.
    """

    best_delta: Optional[float]
    rows: List[StabilityRow]


def orbit_symbol(channel: Channel, b: BasePoint, half_width: float, dt: float) -> SymbolFunction:
    """Sample ``sigma(t) = channel(Theta_t b)`` on ``[-half_width, half_width]``.

    Parameters
    ----------
    channel : Channel
        Input to sample, for example the ``beta`` channel of a field.
    b : BasePoint
        Base point of the orbit.
    half_width : float
        Half width of the stored window.
    dt : float
        Sample step.

    Returns
    -------
    SymbolFunction
        Orbit sample with ``tau_sigma = 0``.
    """
    n = int(round(half_width / dt))
    times = np.arange(-n, n + 1) * dt
    return SymbolFunction(np.asarray(channel.evaluate(b, times), dtype=float), half_width, dt)


def translate(sigma: SymbolFunction, t: float) -> SymbolFunction:
    """Return the translate ``(theta_t sigma)(s) = sigma(s + t)``.

    Parameters
    ----------
    sigma : SymbolFunction
        Symbol to translate.
    t : float
        Translation.

    Returns
    -------
    SymbolFunction
        Translate sharing the stored samples.
    """
    return SymbolFunction(sigma.values, sigma.half_width, sigma.dt, sigma.tau_sigma + t)


def constant_symbol(value: float, half_width: float, dt: float) -> SymbolFunction:
    """Return the constant symbol ``sigma = value``.

    Parameters
    ----------
    value : float
        Constant value.
    half_width : float
        Window half width.
    dt : float
        Grid step.

    Returns
    -------
    SymbolFunction
        Constant samples.
    """
    n = int(round(half_width / dt))
    return SymbolFunction(np.full(2 * n + 1, float(value)), half_width, dt)


def _metric_grid(dt: float, levels: int) -> np.ndarray:
    """Return the sample times on ``[-levels, levels]``.

    Parameters
    ----------
    dt : float
        Grid step.
    levels : int
        Metric truncation ``N``.

    Returns
    -------
    numpy.ndarray
        Sample times.
    """
    n = int(round(levels / dt))
    return np.arange(-n, n + 1) * dt


def _level_weights(diff: np.ndarray, dt: float, levels: int) -> np.ndarray:
    """Apply the compact-open weights to absolute differences on ``[-N, N]``.

    Parameters
    ----------
    diff : numpy.ndarray
        Absolute differences of shape ``(..., 2 N / dt + 1)``.
    dt : float
        Grid step.
    levels : int
        Metric truncation ``N``.

    Returns
    -------
    numpy.ndarray
        ``sum_n 2^-n min(1, sup_{[-n, n]} diff)`` over the leading axes.
    """
    centre = int(round(levels / dt))
    total = np.zeros(diff.shape[:-1])
    for level in range(1, levels + 1):
        half = int(round(level / dt))
        sup = diff[..., centre - half : centre + half + 1].max(axis=-1)
        total += 2.0**-level * np.minimum(1.0, sup)
    return total


def co_metric(f: SymbolFunction, g: SymbolFunction, levels: int | None = None) -> float:
    """Return the truncated compact-open distance ``sum_{n<=N} 2^-n min(1, sup_{[-n, n]} |f - g|)``.

    Parameters
    ----------
    f : SymbolFunction
        First symbol.
    g : SymbolFunction
        Second symbol on the same grid step.
    levels : int, optional
        Truncation ``N``; defaults to ``LAB_CONFIG.symbols.metric_levels``.

    Returns
    -------
    float
        Distance in ``[0, 1)``.

    Raises
    ------
    GridError
        If the grid steps differ.
    """
    if not math.isclose(f.dt, g.dt, rel_tol=1e-12):
        raise GridError(f"Symbols live on different grids: dt={f.dt} and dt={g.dt}")
    n_levels = levels or LAB_CONFIG.symbols.metric_levels
    times = _metric_grid(f.dt, n_levels)
    diff = np.abs(f.evaluate(times) - g.evaluate(times))
    return float(_level_weights(diff, f.dt, n_levels))


def _constant_tail(sigma: SymbolFunction, width: float, tolerance: float) -> Optional[float]:
    """Detect whether both window tails of ``sigma`` settle at the same constant.

    Parameters
    ----------
    sigma : SymbolFunction
        Orbit sample.
    width : float
        Length of each inspected tail.
    tolerance : float
        Allowed oscillation around the constant.

    Returns
    -------
    float or None
        The common limit, or ``None`` when no constant closure point is detected.
    """
    count = max(1, int(round(width / sigma.dt)))
    left = sigma.values[:count]
    right = sigma.values[-count:]
    limit = 0.5 * (left[0] + right[-1])
    if np.max(np.abs(left - limit)) <= tolerance and np.max(np.abs(right - limit)) <= tolerance:
        return float(limit)
    return None


def hull_net(
    beta_orbit: SymbolFunction,
    shift_grid: Sequence[float],
    eps: float,
    levels: int | None = None,
    closure_tolerance: float | None = None,
) -> HullSample:
    """Build a greedy farthest-point eps-net over the translates of an orbit symbol.

    The net starts from the orbit itself and repeatedly adds the translate farthest from the current
    net, ties resolved by the lowest shift index, until every translate lies within ``eps``. When both
    window tails settle at the same constant, the constant function is added as a closure point.

    Parameters
    ----------
    beta_orbit : SymbolFunction
        Orbit sample ``t -> beta(Theta_t b)``.
    shift_grid : sequence of float
        Translation times; every translate must be known on ``[-N, N]``.
    eps : float
        Net radius.
    levels : int, optional
        Metric truncation ``N``; defaults to ``LAB_CONFIG.symbols.metric_levels``.
    closure_tolerance : float, optional
        Tail oscillation bound for closure detection; defaults to ``LAB_CONFIG.symbols.closure_tolerance``.

    Returns
    -------
    HullSample
        Net with its orbit shifts.

    Raises
    ------
    SupportError
        If a requested translate leaves the stored window.
    """
    if not shift_grid:
        raise DomainError("hull_net needs at least one shift")
    n_levels = levels or LAB_CONFIG.symbols.metric_levels
    tol = LAB_CONFIG.symbols.closure_tolerance if closure_tolerance is None else closure_tolerance
    times = _metric_grid(beta_orbit.dt, n_levels)
    shifts = [float(s) for s in shift_grid]
    samples = np.stack([translate(beta_orbit, s).evaluate(times) for s in shifts])

    nearest = _level_weights(np.abs(samples - beta_orbit.evaluate(times)), beta_orbit.dt, n_levels)
    net = [beta_orbit]
    net_shifts: List[Optional[float]] = [0.0]
    candidate = int(np.argmax(nearest))
    while nearest[candidate] > eps:
        net.append(translate(beta_orbit, shifts[candidate]))
        net_shifts.append(shifts[candidate])
        distances = _level_weights(np.abs(samples - samples[candidate]), beta_orbit.dt, n_levels)
        nearest = np.minimum(nearest, distances)
        candidate = int(np.argmax(nearest))
    limit = _constant_tail(beta_orbit, float(n_levels), tol)
    if limit is not None:
        closure = constant_symbol(limit, beta_orbit.half_width, beta_orbit.dt)
        if min(co_metric(closure, member, n_levels) for member in net) > eps:
            net.append(closure)
            net_shifts.append(None)
    return HullSample(net=net, eps=eps, levels=n_levels, shifts=net_shifts)


def net_covers(hull: HullSample, beta_orbit: SymbolFunction, shift_grid: Sequence[float]) -> bool:
    """Re-check that every sampled translate lies within ``eps`` of the net.

    Parameters
    ----------
    hull : HullSample
        Net to verify.
    beta_orbit : SymbolFunction
        Orbit sample the net was built from.
    shift_grid : sequence of float
        Translation times to check.

    Returns
    -------
    bool
        ``True`` when the cover property holds for every shift.
    """
    return all(
        min(co_metric(translate(beta_orbit, s), member, hull.levels) for member in hull.net) <= hull.eps
        for s in shift_grid
    )


def _increment_sup(sigma: SymbolFunction, lag_steps: int, M: float) -> float:
    """Return ``sup |sigma(t + lag) - sigma(t)|`` over ``t, t + lag`` in ``[-M, M]``.

    Parameters
    ----------
    sigma : SymbolFunction
        Symbol.
    lag_steps : int
        Lag in grid steps.
    M : float
        Window half width.

    Returns
    -------
    float
        Increment supremum.
    """
    n = int(round(M / sigma.dt))
    values = sigma.evaluate(np.arange(-n, n + 1) * sigma.dt)
    if lag_steps >= values.shape[0]:
        return float("nan")
    return float(np.max(np.abs(values[lag_steps:] - values[:-lag_steps])))


def holder_diagnostic(beta_orbit: SymbolFunction, M: float, levels: int | None = None) -> HolderEstimate:
    """Fit a Holder exponent and constant on ``[-M, M]`` from dyadic increment suprema.

    Lags ``dt * 2^k`` for ``k < levels`` are regressed in log-log scale; the slope is the exponent and
    the intercept gives the constant. A constant input reports ``alpha = 1`` and ``l = 0``.

    Parameters
    ----------
    beta_orbit : SymbolFunction
        Symbol to diagnose.
    M : float
        Window half width; ``[-M, M]`` must lie inside the stored window.
    levels : int, optional
        Number of dyadic lags; defaults to ``LAB_CONFIG.symbols.holder_levels``.

    Returns
    -------
    HolderEstimate
        Exponent, constant, window and ``sup |sigma|``.
    """
    n_levels = levels or LAB_CONFIG.symbols.holder_levels
    n = int(round(M / beta_orbit.dt))
    sup_abs = float(np.max(np.abs(beta_orbit.evaluate(np.arange(-n, n + 1) * beta_orbit.dt))))
    lags = [2**k for k in range(n_levels) if 2**k <= 2 * n]
    sups = np.array([_increment_sup(beta_orbit, lag, M) for lag in lags])
    positive = sups > 0.0
    if positive.sum() < 2:
        return HolderEstimate(alpha=1.0, constant=0.0, window=M, sup_abs=sup_abs)
    log_h = np.log(np.asarray(lags, dtype=float)[positive] * beta_orbit.dt)
    slope, intercept = np.polyfit(log_h, np.log(sups[positive]), 1)
    alpha = float(min(1.0, max(slope, np.finfo(float).eps)))
    return HolderEstimate(alpha=alpha, constant=float(math.exp(intercept)), window=M, sup_abs=sup_abs)


def modulus_of_continuity(sigma: SymbolFunction, delta: float, M: float) -> float:
    """Return ``sup_{|t - s| <= delta} |sigma(t) - sigma(s)|`` on ``[-M, M]``.

    Parameters
    ----------
    sigma : SymbolFunction
        Symbol.
    delta : float
        Largest separation.
    M : float
        Window half width.

    Returns
    -------
    float
        Modulus of continuity at ``delta``.
    """
    steps = max(1, int(math.floor(delta / sigma.dt + 1e-9)))
    return max(_increment_sup(sigma, lag, M) for lag in range(1, steps + 1))


def _single_channel(field: FieldSpec, channel: str | None) -> str:
    """Resolve the channel that a symbol replaces.

    Parameters
    ----------
    field : FieldSpec
        Field whose input is replaced.
    channel : str or None
        Explicit channel name.

    Returns
    -------
    str
        Channel name.

    Raises
    ------
    DomainError
        If the field has several channels and none is named, or the name is unknown.
    """
    names = [c.name for c in field.channels]
    if channel is None:
        if len(names) != 1:
            raise DomainError(f"Field '{field.name}' has channels {names}; name the one the symbol replaces")
        return names[0]
    if channel not in names:
        raise DomainError(f"Field '{field.name}' has no channel '{channel}'")
    if len(names) != 1:
        raise DomainError(f"Symbol integration supports single-channel fields, '{field.name}' has {names}")
    return channel


def symbol_flow(
    field: FieldSpec,
    symbols: Sequence[SymbolFunction],
    x0: np.ndarray,
    T: float,
    cfg: IntegratorConfig | None = None,
    record_every: int = 1,
    channel: str | None = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Integrate ``u' = f(sigma(t), u)`` for a batch of symbols.

    Parameters
    ----------
    field : FieldSpec
        Field whose single channel is fed by the symbols.
    symbols : sequence of SymbolFunction
        One symbol per batch row.
    x0 : numpy.ndarray
        Initial states ``(points, dimension)`` shared by all rows, or ``(batch, points, dimension)``.
    T : float
        Horizon, a multiple of the step.
    cfg : IntegratorConfig, optional
        Integration settings; defaults to ``LAB_CONFIG.integrator``.
    record_every : int, default=1
        Record spacing in steps.
    channel : str, optional
        Name of the replaced channel.

    Returns
    -------
    tuple of numpy.ndarray
        Recorded times and states ``(records, batch, points, dimension)``.
    """
    settings = cfg or LAB_CONFIG.integrator
    name = _single_channel(field, channel)
    n_steps = step_count(T, settings.step)
    times = stage_times(T, settings.step)
    table = {name: np.stack([sigma.evaluate(times) for sigma in symbols], axis=1)}
    x = np.asarray(x0, dtype=float)
    if x.ndim == 1:
        x = x.reshape(1, field.dimension)
    if x.ndim == 2:
        x = np.broadcast_to(x, (len(symbols),) + x.shape)
    return integrate_table(field.rhs, table, np.array(x), n_steps, settings, record_every)


def skew_step(
    field: FieldSpec,
    x: np.ndarray,
    sigma: SymbolFunction,
    t: float,
    cfg: IntegratorConfig | None = None,
    channel: str | None = None,
) -> Tuple[np.ndarray, SymbolFunction]:
    """Advance the skew-product semiflow ``Pi(t)(x, sigma) = (psi(t, sigma) x, theta_t sigma)``.

    Parameters
    ----------
    field : FieldSpec
        Field whose single channel is replaced by the symbol.
    x : numpy.ndarray
        State ``(dimension,)`` or states ``(points, dimension)``.
    sigma : SymbolFunction
        Current symbol; its window must cover ``[0, t]``.
    t : float
        Elapsed time.
    cfg : IntegratorConfig, optional
        Integration settings.
    channel : str, optional
        Name of the replaced channel.

    Returns
    -------
    tuple
        Moved state with the shape of ``x`` and the translated symbol.
    """
    x = np.asarray(x, dtype=float)
    if t == 0.0:
        return x.copy(), sigma
    points = x.reshape(-1, field.dimension)
    settings = cfg or LAB_CONFIG.integrator
    _, states = symbol_flow(field, [sigma], points, t, settings, step_count(t, settings.step), channel)
    return states[-1, 0].reshape(x.shape), translate(sigma, t)


def nds_relation_deviation(
    phi: Cocycle,
    channel: str,
    b: BasePoint,
    x0: np.ndarray,
    T: float,
    half_width: float,
    shifts: Sequence[float] = (0.0,),
) -> float:
    """Compare ``psi(t, theta_s sigma_b) x0`` with ``phi(t, Theta_s b) x0`` for every shift ``s``.

    The translate ``theta_s sigma_b`` carries the origin shift ``tau_sigma = s``, so each shift checks
    the relation at a base point other than ``b``.

    Parameters
    ----------
    phi : Cocycle
        Cocycle of a single-channel field.
    channel : str
        Name of that channel.
    b : BasePoint
        Base point generating the symbol.
    x0 : numpy.ndarray
        Initial state.
    T : float
        Horizon.
    half_width : float
        Window half width of the sampled symbol; must be at least ``max |s| + T``.
    shifts : sequence of float, default=(0.0,)
        Translations ``s`` of the symbol and of the base point.

    Returns
    -------
    float
        Largest deviation over the recorded steps and the shifts.
    """
    source = next(c for c in phi.field.channels if c.name == channel)
    # Sampled at half steps so the symbol reproduces the RK4 stage values exactly.
    sigma = orbit_symbol(source, b, half_width, 0.5 * phi.config.step)
    point = np.asarray(x0, dtype=float).reshape(1, phi.field.dimension)
    symbols = [translate(sigma, float(s)) for s in shifts]
    _, psi_states = symbol_flow(phi.field, symbols, point, T, phi.config, channel=channel)
    _, phi_states = phi.flow([theta_big(b, float(s)) for s in shifts], point, T)
    return float(np.max(np.abs(psi_states - phi_states)))


def skew_product_projection(
    field: FieldSpec,
    hull: HullSample,
    B0: BoxSet,
    cfg: LimitConfig,
    integrator: IntegratorConfig | None = None,
    grid: BoxGrid | None = None,
) -> BoxSet:
    """Project the attractor of the skew-product semiflow over a hull net onto phase space.

    Every net symbol drives a seed lattice of ``B0``; states in ``[t_burn, t_tail]`` are rasterised.

    Parameters
    ----------
    field : FieldSpec
        Single-channel field.
    hull : HullSample
        Net standing in for the hull; every element must cover ``[0, t_tail]``.
    B0 : BoxSet
        Initial set.
    cfg : LimitConfig
        Tail window, stride and seed density.
    integrator : IntegratorConfig, optional
        Integration settings.
    grid : BoxGrid, optional
        Output partition; defaults to the grid of ``B0``.

    Returns
    -------
    BoxSet
        Projected attractor estimate.
    """
    settings = integrator or LAB_CONFIG.integrator
    record_every = step_count(cfg.stride, settings.step)
    times, states = symbol_flow(field, hull.net, B0.lattice_points(cfg.density), cfg.t_tail, settings, record_every)
    slack = 1e-9 * max(1.0, cfg.t_tail)
    return BoxSet.from_points(grid or B0.grid, states[times >= cfg.t_burn - slack])


def stability_probe(
    phi: Cocycle,
    A_est: BoxSet,
    eps: float,
    delta_candidates: Sequence[float],
    b: BasePoint,
    cfg: LimitConfig,
) -> StabilityReport:
    """Find the largest ``delta`` whose neighbourhood of ``A_est`` stays within ``eps`` of it.

    For each candidate the centres of ``O_delta(A_est)`` are flowed from every shift ``Theta_s b``
    over ``[0, t_tail]``; the candidate passes when every state remains within ``eps`` of the
    estimate's cell centres.

    Parameters
    ----------
    phi : Cocycle
        Cocycle to integrate.
    A_est : BoxSet
        Attractor estimate.
    eps : float
        Outer radius.
    delta_candidates : sequence of float
        Sorted radii in ``(0, eps)``.
    b : BasePoint
        Base point.
    cfg : LimitConfig
        Shift set and final time ``t_tail``.

    Returns
    -------
    StabilityReport
        Best passing radius and per-candidate rows with escape details.

    Raises
    ------
    DomainError
        If the candidate list is empty, unsorted or leaves ``(0, eps)``.
    """
    deltas = [float(d) for d in delta_candidates]
    if not deltas:
        raise DomainError("stability_probe needs at least one delta candidate")
    if deltas != sorted(deltas) or deltas[0] <= 0.0 or deltas[-1] >= eps:
        raise DomainError(f"delta candidates must be sorted inside (0, {eps}), got {deltas}")
    tree = cKDTree(A_est.centers())
    bases = [theta_big(b, s) for s in cfg.s_grid]
    rows: List[StabilityRow] = []
    for delta in deltas:
        seeds = A_est.neighbourhood(delta).centers()
        try:
            times, states = phi.flow(bases, seeds, cfg.t_tail)
        except DivergenceError as exc:
            rows.append(
                StabilityRow(delta, False, cfg.s_grid[exc.batch_index or 0], exc.point_index, exc.escape_time)
            )
            continue
        distances, _ = tree.query(states.reshape(-1, A_est.grid.dimension))
        distances = distances.reshape(states.shape[:-1])
        escaped = np.argwhere(distances > eps)
        if escaped.size == 0:
            rows.append(StabilityRow(delta, True))
            continue
        step_index, batch_index, point_index = (int(i) for i in escaped[0])
        rows.append(StabilityRow(delta, False, cfg.s_grid[batch_index], point_index, float(times[step_index])))
    passing = [row.delta for row in rows if row.passed]
    return StabilityReport(best_delta=max(passing) if passing else None, rows=rows)
