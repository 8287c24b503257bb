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
"""Cocycles generated by random differential equations along a fixed noise realisation.

A vector field reads its random and time-dependent inputs through named channels. Each channel maps a
base point ``b`` and elapsed times ``t`` to the values of some function of ``Theta_t b``; the integrator
tabulates every channel at the RK4 stage times before stepping, so the right-hand side only ever sees
plain arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Dict, Mapping, Sequence, Tuple

import numpy as np

from nrdslab.engine.config import LAB_CONFIG, IntegratorConfig, is_multiple
from nrdslab.engine.driver import (
    BasePoint,
    CircleState,
    Driver,
    OuEvaluator,
    SamplePath,
    ou_at,
    pull_back,
    theta_big,
)
from nrdslab.engine.errors import DivergenceError, DomainError, GridError

if TYPE_CHECKING:
    from nrdslab.engine.cohomology import KappaSpec

ChannelTable = Dict[str, np.ndarray]
RightHandSide = Callable[[Mapping[str, np.ndarray], np.ndarray], np.ndarray]


@dataclass(frozen=True, slots=True)
class Channel:
    """Named input of a vector field.

    Parameters
    ----------
    name : str
        Key under which the values reach the right-hand side.
    evaluate : callable
        ``evaluate(b, t)`` returns the channel values at ``Theta_t b`` for an array of elapsed times.
    """

    name: str
    evaluate: Callable[[BasePoint, np.ndarray], np.ndarray]


@dataclass(frozen=True, slots=True)
class FieldSpec:
    """Vector field ``f(Theta_t b, u)`` of a random differential equation.

    Parameters
    ----------
    name : str
        Identifier used in logs.
    dimension : int
        Phase-space dimension, between 1 and 3.
    rhs : callable
        ``rhs(c, u)`` where ``c`` maps channel names to arrays of shape ``(batch, 1)`` and ``u`` has
        shape ``(batch, points, dimension)``; returns an array shaped like ``u``.
    channels : tuple of Channel, default=()
        Inputs tabulated along the base orbit.
    """

    name: str
    dimension: int
    rhs: RightHandSide
    channels: Tuple[Channel, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        """Validate the dimension and the channel names."""
        if not 1 <= self.dimension <= 3:
            raise DomainError(f"Field '{self.name}' has dimension {self.dimension}; supported range is 1-3")
        names = [channel.name for channel in self.channels]
        if len(names) != len(set(names)):
            raise DomainError(f"Field '{self.name}' declares duplicate channel names {names}")


@dataclass(frozen=True, slots=True, eq=False)
class TrajectorySegment:
    """Solution of one initial value problem on a uniform grid.

    Parameters
    ----------
    times : numpy.ndarray
        Elapsed times ``0, dt, ..., T``.
    states : numpy.ndarray
        States of shape ``(len(times), dimension)``.
    """

    times: np.ndarray
    states: np.ndarray


def time_channel(name: str, profile: Callable[[np.ndarray], np.ndarray]) -> Channel:
    """Build a channel that depends on absolute time only.

    Parameters
    ----------
    name : str
        Channel name.
    profile : callable
        Function of the absolute time ``tau + t``.

    Returns
    -------
    Channel
        Channel returning ``profile(b.tau + t)``.
    """

    def evaluate(b: BasePoint, t: np.ndarray) -> np.ndarray:
        return np.asarray(profile(b.tau + t), dtype=float) * np.ones_like(t)

    return Channel(name, evaluate)


def circle_channel(name: str, profile: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> Channel:
    """Build a channel on the circle driver.

    Parameters
    ----------
    name : str
        Channel name.
    profile : callable
        ``profile(angle, abs_time)`` evaluated at the rotated angle ``w + t`` and time ``tau + t``.

    Returns
    -------
    Channel
        Channel reading the rotated angle.
    """

    def evaluate(b: BasePoint, t: np.ndarray) -> np.ndarray:
        if not isinstance(b.driver, CircleState):
            raise DomainError(f"Channel '{name}' needs a circle driver")
        return np.asarray(profile(b.driver.angle + t, b.tau + t), dtype=float) * np.ones_like(t)

    return Channel(name, evaluate)


def ou_channel(
    name: str,
    ev: OuEvaluator,
    profile: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None,
) -> Channel:
    """Build a channel from the Ornstein-Uhlenbeck process ``z(theta_t w)``.

    Parameters
    ----------
    name : str
        Channel name.
    ev : OuEvaluator
        OU truncation settings.
    profile : callable, optional
        ``profile(z, abs_time)`` applied to the OU values; identity when omitted.

    Returns
    -------
    Channel
        Channel reading the OU process along the Wiener shift.
    """

    def evaluate(b: BasePoint, t: np.ndarray) -> np.ndarray:
        if not isinstance(b.driver, SamplePath):
            raise DomainError(f"Channel '{name}' needs a Wiener driver")
        z = ou_at(ev, b.driver, t)
        if profile is None:
            return z
        return np.asarray(profile(z, b.tau + t), dtype=float) * np.ones_like(t)

    return Channel(name, evaluate)


def frozen_channel(name: str, parameter: Callable[[Driver], float]) -> Channel:
    """Build a channel holding a random parameter read at ``theta_{-tau} w``.

    These channels carry the ``g(theta_{-tau} w, u)`` part of fields of the form
    ``f(tau, w, u) = g(theta_{-tau} w, u) + h(tau, w, u)``; the value stays fixed along ``Theta_t``.

    Parameters
    ----------
    name : str
        Channel name.
    parameter : callable
        Random variable evaluated on the pulled-back driver.

    Returns
    -------
    Channel
        Constant-in-time channel.
    """

    def evaluate(b: BasePoint, t: np.ndarray) -> np.ndarray:
        return np.full(np.shape(t), float(parameter(pull_back(b))))

    return Channel(name, evaluate)


def step_count(T: float, step: float) -> int:
    """Return the number of integration steps covering ``[0, T]``.

    Parameters
    ----------
    T : float
        Non-negative horizon.
    step : float
        Step size that must divide ``T``.

    Returns
    -------
    int
        ``T / step`` as an integer.

    Raises
    ------
    GridError
        If ``T`` is negative or not a multiple of ``step``.
    """
    if T < 0.0:
        raise GridError(f"Integration horizon must be non-negative, got {T}")
    if not is_multiple(T, step):
        raise GridError(f"Horizon {T} is not a multiple of the step {step}")
    return int(round(T / step))


def channel_table(channels: Sequence[Channel], bases: Sequence[BasePoint], times: np.ndarray) -> ChannelTable:
    """Tabulate channels for a batch of base points.

    Parameters
    ----------
    channels : sequence of Channel
        Channels to evaluate.
    bases : sequence of BasePoint
        Batch of base points.
    times : numpy.ndarray
        Elapsed times, usually the RK4 stage times.

    Returns
    -------
    dict of str to numpy.ndarray
        Arrays of shape ``(len(times), len(bases))``.
    """
    return {
        channel.name: np.stack([np.asarray(channel.evaluate(b, times), dtype=float) for b in bases], axis=1)
        for channel in channels
    }


def _check_guard(x: np.ndarray, guard: float, elapsed: float) -> None:
    """Raise when any state is non-finite or beyond the blow-up guard.

    Parameters
    ----------
    x : numpy.ndarray
        States of shape ``(batch, points, dimension)``.
    guard : float
        Absolute magnitude limit.
    elapsed : float
        Elapsed integration time, reported on failure.

    Raises
    ------
    DivergenceError
        If the guard is exceeded.
    """
    magnitude = np.max(np.abs(x), axis=-1)
    bad = ~(magnitude <= guard)
    if bad.any():
        batch_index, point_index = (int(i) for i in np.argwhere(bad)[0])
        raise DivergenceError(
            f"State exceeded {guard:g} at t={elapsed:g}",
            escape_time=elapsed,
            batch_index=batch_index,
            point_index=point_index,
        )


def integrate_table(
    rhs: RightHandSide,
    table: ChannelTable,
    x0: np.ndarray,
    n_steps: int,
    cfg: IntegratorConfig,
    record_every: int = 1,
) -> Tuple[np.ndarray, np.ndarray]:
    """Advance a batch of states with tabulated channel values.

    Parameters
    ----------
    rhs : callable
        Right-hand side ``rhs(c, u)``.
    table : dict of str to numpy.ndarray
        Channel values at the half-step times ``0, h/2, ..., n h``, shape ``(2 n + 1, batch)``.
    x0 : numpy.ndarray
        Initial states of shape ``(batch, points, dimension)``.
    n_steps : int
        Number of steps.
    cfg : IntegratorConfig
        Scheme, step and blow-up guard.
    record_every : int, default=1
        Record the state after every ``record_every`` steps.

    Returns
    -------
    tuple of numpy.ndarray
        Recorded elapsed times and states of shape ``(records, batch, points, dimension)``.

    Raises
    ------
    DivergenceError
        If a state crosses the blow-up guard.
    """
    h = cfg.step
    x = np.array(x0, dtype=float, copy=True)
    rows = {name: values[:, :, None] for name, values in table.items()}
    times = [0.0]
    records = [x.copy()]
    for i in range(n_steps):
        start = {name: values[2 * i] for name, values in rows.items()}
        end = {name: values[2 * i + 2] for name, values in rows.items()}
        if cfg.scheme == "rk4":
            middle = {name: values[2 * i + 1] for name, values in rows.items()}
            k1 = rhs(start, x)
            k2 = rhs(middle, x + 0.5 * h * k1)
            k3 = rhs(middle, x + 0.5 * h * k2)
            k4 = rhs(end, x + h * k3)
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        else:
            k1 = rhs(start, x)
            k2 = rhs(end, x + h * k1)
            x = x + 0.5 * h * (k1 + k2)
        _check_guard(x, cfg.blowup_guard, (i + 1) * h)
        if (i + 1) % record_every == 0:
            times.append((i + 1) * h)
            records.append(x.copy())
    return np.asarray(times), np.stack(records)


class Cocycle:
    """Cocycle ``phi(t, b) x`` generated by a :class:`FieldSpec`.

    Parameters
    ----------
    field : FieldSpec
        Vector field.
    config : IntegratorConfig
        Integration settings.
    """

    def __init__(self, field: FieldSpec, config: IntegratorConfig) -> None:
        """Store the field and the integrator settings.

        Parameters
        ----------
        field : FieldSpec
            Vector field.
        config : IntegratorConfig
            Integration settings.
        """
        self.field = field
        self.config = config

    def _shape_states(self, x0: np.ndarray, batch: int) -> np.ndarray:
        """Broadcast initial states to ``(batch, points, dimension)``.

        Parameters
        ----------
        x0 : numpy.ndarray
            States shaped ``(dimension,)``, ``(points, dimension)`` or ``(batch, points, dimension)``.
        batch : int
            Number of base points.

        Returns
        -------
        numpy.ndarray
            Broadcast copy of the states.
        """
        x = np.asarray(x0, dtype=float)
        d = self.field.dimension
        if x.shape[-1] != d:
            raise DomainError(f"States have last axis {x.shape[-1]}, field '{self.field.name}' needs {d}")
        if x.ndim == 1:
            x = x[None, :]
        if x.ndim == 2:
            x = np.broadcast_to(x, (batch,) + x.shape)
        if x.shape[0] != batch:
            raise DomainError(f"Got {x.shape[0]} state rows for {batch} base points")
        return np.array(x, copy=True)

    def flow(
        self,
        bases: Sequence[BasePoint],
        x0: np.ndarray,
        T: float,
        record_every: int = 1,
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Integrate many initial states from many base points in one sweep.

        Parameters
        ----------
        bases : sequence of BasePoint
            Base points, one batch row each.
        x0 : numpy.ndarray
            Initial states; ``(points, dimension)`` arrays are shared by every base point.
        T : float
            Horizon, a multiple of the integration step.
        record_every : int, default=1
            Record spacing in steps.

        Returns
        -------
        tuple of numpy.ndarray
            Recorded elapsed times and states of shape ``(records, batch, points, dimension)``.
        """
        n_steps = step_count(T, self.config.step)
        x = self._shape_states(x0, len(bases))
        table = channel_table(self.field.channels, bases, stage_times(T, self.config.step))
        return integrate_table(self.field.rhs, table, x, n_steps, self.config, record_every)

    def __call__(self, t: float, b: BasePoint, x: np.ndarray) -> np.ndarray:
        """Evaluate ``phi(t, b) x``.

        Parameters
        ----------
        t : float
            Elapsed time, a multiple of the integration step.
        b : BasePoint
            Base point.
        x : numpy.ndarray
            State ``(dimension,)`` or states ``(points, dimension)``.

        Returns
        -------
        numpy.ndarray
            Image with the shape of ``x``; ``t = 0`` returns an exact copy.
        """
        x = np.asarray(x, dtype=float)
        if t == 0.0:
            return x.copy()
        points = x.reshape(-1, self.field.dimension)
        _, states = self.flow([b], points, t, record_every=step_count(t, self.config.step))
        return states[-1, 0].reshape(x.shape)

    def evolution(self, b: BasePoint) -> EvolutionProcess:
        """Return the two-parameter process ``Phi(t, s) = phi(t - s, Theta_s b)``.

        Parameters
        ----------
        b : BasePoint
            Base point at ``s = 0``.

        Returns
        -------
        EvolutionProcess
            Process bound to ``b``.
        """
        return EvolutionProcess(self, b)


class EvolutionProcess:
    """Two-parameter process induced by a cocycle at a fixed base point.

    Parameters
    ----------
    cocycle : Cocycle
        Generating cocycle.
    base : BasePoint
        Base point at ``s = 0``.
    """

    def __init__(self, cocycle: Cocycle, base: BasePoint) -> None:
        """Bind the process to its base point.

        Parameters
        ----------
        cocycle : Cocycle
            Generating cocycle.
        base : BasePoint
            Base point at ``s = 0``.
        """
        self.cocycle = cocycle
        self.base = base

    def __call__(self, t: float, s: float, x: np.ndarray) -> np.ndarray:
        """Evaluate ``Phi(t, s) x``.

        Parameters
        ----------
        t : float
            Final time, ``t >= s``.
        s : float
            Initial time.
        x : numpy.ndarray
            Initial state.

        Returns
        -------
        numpy.ndarray
            State at time ``t``.
        """
        if t < s:
            raise GridError(f"Evolution needs t >= s, got t={t}, s={s}")
        return self.cocycle(t - s, theta_big(self.base, s), x)


def make_nrds(field: FieldSpec, cfg: IntegratorConfig | None = None) -> Cocycle:
    """Build the cocycle generated by ``field``.

    Parameters
    ----------
    field : FieldSpec
        Vector field.
    cfg : IntegratorConfig, optional
        Integration settings; defaults to ``LAB_CONFIG.integrator``.

    Returns
    -------
    Cocycle
        Callable ``phi(t, b, x)``.
    """
    return Cocycle(field, cfg or LAB_CONFIG.integrator)


def integrate_rde(
    field: FieldSpec,
    b: BasePoint,
    x0: np.ndarray,
    T: float,
    cfg: IntegratorConfig | None = None,
) -> TrajectorySegment:
    """Integrate ``u' = f(Theta_t b, u)`` from ``x0`` over ``[0, T]``.

    Parameters
    ----------
    field : FieldSpec
        Vector field.
    b : BasePoint
        Base point.
    x0 : numpy.ndarray
        Initial state of length ``field.dimension``.
    T : float
        Horizon, a multiple of the step.
    cfg : IntegratorConfig, optional
        Integration settings; defaults to ``LAB_CONFIG.integrator``.

    Returns
    -------
    TrajectorySegment
        States on every step.

    Raises
    ------
    DivergenceError
        If the solution crosses the blow-up guard.
    """
    cocycle = make_nrds(field, cfg)
    x = np.asarray(x0, dtype=float).reshape(1, field.dimension)
    times, states = cocycle.flow([b], x, T)
    return TrajectorySegment(times=times, states=states[:, 0, 0, :])


def cocycle_residual(phi: Cocycle, b: BasePoint, x: np.ndarray, t: float, s: float) -> float:
    """Return ``|phi(t + s, b) x - phi(t, Theta_s b) phi(s, b) x|`` in the max norm.

    Parameters
    ----------
    phi : Cocycle
        Cocycle under test.
    b : BasePoint
        Base point.
    x : numpy.ndarray
        Initial state.
    t : float
        Second leg.
    s : float
        First leg.

    Returns
    -------
    float
        Largest componentwise deviation.
    """
    one_leg = phi(t + s, b, x)
    two_leg = phi(t, theta_big(b, s), phi(s, b, x))
    return float(np.max(np.abs(one_leg - two_leg)))


def integrate_stratonovich(
    A: np.ndarray,
    f: Callable[[np.ndarray], np.ndarray],
    kappa: KappaSpec,
    p: SamplePath,
    x0: np.ndarray,
    t0: float,
    T: float,
    dt: float,
    guard: float | None = None,
) -> TrajectorySegment:
    """Integrate ``du = (A u + f(u)) dt + kappa(t) u o dW`` with the stochastic Heun scheme.

    Increments ``dW`` are read from the stored path, so ``t0`` and ``dt`` must be multiples of the
    path step.

    Parameters
    ----------
    A : numpy.ndarray
        Linear part, shape ``(d, d)``.
    f : callable
        Nonlinearity acting on arrays whose last axis has length ``d``.
    kappa : KappaSpec
        Time-dependent noise intensity.
    p : SamplePath
        Brownian path, read in absolute time.
    x0 : numpy.ndarray
        Initial state at ``t0``.
    t0 : float
        Initial absolute time.
    T : float
        Horizon, a multiple of ``dt``.
    dt : float
        Step, a multiple of ``p.dt``.
    guard : float, optional
        Blow-up guard; defaults to ``LAB_CONFIG.integrator.blowup_guard``.

    Returns
    -------
    TrajectorySegment
        Elapsed times and states.

    Raises
    ------
    GridError
        If ``dt`` or ``t0`` are off the path grid.
    DivergenceError
        If the solution crosses the guard.
    """
    if not is_multiple(dt, p.dt):
        raise GridError(f"Step {dt} is not a multiple of the path step {p.dt}")
    n_steps = step_count(T, dt)
    stride = int(round(dt / p.dt))
    start = p.index_of(t0)
    p.index_of(t0 + n_steps * dt)
    matrix = np.atleast_2d(np.asarray(A, dtype=float))
    limit = guard or LAB_CONFIG.integrator.blowup_guard
    w = p.values[start : start + n_steps * stride + 1 : stride]
    dw = np.diff(w)

    def drift(u: np.ndarray) -> np.ndarray:
        return matrix @ u + np.asarray(f(u), dtype=float)

    x = np.asarray(x0, dtype=float).reshape(matrix.shape[0])
    states = np.empty((n_steps + 1, x.shape[0]))
    states[0] = x
    for n in range(n_steps):
        t_n = t0 + n * dt
        k_n = kappa.kappa(t_n)
        k_next = kappa.kappa(t_n + dt)
        fx = drift(x)
        predictor = x + fx * dt + k_n * x * dw[n]
        x = x + 0.5 * (fx + drift(predictor)) * dt + 0.5 * (k_n * x + k_next * predictor) * dw[n]
        if not np.all(np.abs(x) <= limit):
            raise DivergenceError(f"SDE state exceeded {limit:g} at t={(n + 1) * dt:g}", escape_time=(n + 1) * dt)
        states[n + 1] = x
    return TrajectorySegment(times=np.arange(n_steps + 1) * dt, states=states)


def symbol_table(symbols: Mapping[str, Callable[[np.ndarray], np.ndarray]], times: np.ndarray) -> ChannelTable:
    """Tabulate channel values supplied directly as functions of elapsed time.

    Parameters
    ----------
    symbols : mapping of str to callable
        For every channel, a function returning an array of shape ``(len(times), batch)``.
    times : numpy.ndarray
        Elapsed stage times.

    Returns
    -------
    dict of str to numpy.ndarray
        Channel table for :func:`integrate_table`.
    """
    return {name: np.asarray(fn(times), dtype=float) for name, fn in symbols.items()}


def stage_times(T: float, step: float) -> np.ndarray:
    """Return the RK4 half-step times on ``[0, T]``.

    Parameters
    ----------
    T : float
        Horizon, a multiple of ``step``.
    step : float
        Integration step.

    Returns
    -------
    numpy.ndarray
        Times ``0, step / 2, ..., T``.
    """
    return np.arange(2 * step_count(T, step) + 1) * (0.5 * step)


def convergence_order(steps: Sequence[float], errors: Sequence[float]) -> float:
    """Fit the slope of ``log(error)`` against ``log(step)``.

    Parameters
    ----------
    steps : sequence of float
        Step sizes.
    errors : sequence of float
        Positive errors at those steps.

    Returns
    -------
    float
        Least-squares slope; ``nan`` when fewer than two positive errors remain.
    """
    pairs = [(s, e) for s, e in zip(steps, errors) if e > 0.0 and math.isfinite(e)]
    if len(pairs) < 2:
        return float("nan")
    log_h = np.log([s for s, _ in pairs])
    log_e = np.log([e for _, e in pairs])
    slope, _ = np.polyfit(log_h, log_e, 1)
    return float(slope)
