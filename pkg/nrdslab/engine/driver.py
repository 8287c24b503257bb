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
"""Noise drivers: two-sided Brownian paths, the circle rotation and the Ornstein-Uhlenbeck functional.

A driver is the base flow of a random dynamical system. Brownian paths are stored on a uniform grid
and shifted by the Wiener shift ``(theta_t w)(s) = w(t + s) - w(t)``; the circle driver rotates an
angle. The nonautonomous base point ``(tau, w)`` moves under ``Theta_t(tau, w) = (tau + t, theta_t w)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Tuple, Union

import numpy as np
from scipy.integrate import trapezoid
from scipy.signal import lfilter

from nrdslab.engine.config import LAB_CONFIG, is_multiple
from nrdslab.engine.errors import DomainError, GridError, SupportError

TWO_PI = 2.0 * math.pi
_KEY_MASK = (1 << 64) - 1


@dataclass(frozen=True, slots=True, eq=False)
class SamplePath:
    """Brownian sample path stored on a uniform grid.

    Parameters
    ----------
    t_min : float
        Left end of the stored window, a negative multiple of ``dt``.
    t_max : float
        Right end of the stored window, a positive multiple of ``dt``.
    dt : float
        Grid step.
    values : numpy.ndarray
        Path values on the nodes ``t_min, t_min + dt, ..., t_max``; the node at ``t = 0`` is zero.
    seed : int
        Seed of the generating stream, kept for provenance.
    """

    t_min: float
    t_max: float
    dt: float
    values: np.ndarray
    seed: int

    def __post_init__(self) -> None:
        """Validate window, step and node count."""
        _check_grid(self.t_min, self.t_max, self.dt)
        expected = _node(self.t_max, self.dt) - _node(self.t_min, self.dt) + 1
        if self.values.ndim != 1 or self.values.shape[0] != expected:
            raise GridError(f"Expected {expected} path values, got shape {self.values.shape}")

    @property
    def first_node(self) -> int:
        """Signed node index of ``t_min``.

        Returns
        -------
        int
            ``t_min / dt`` as an integer.
        """
        return _node(self.t_min, self.dt)

    @property
    def origin_index(self) -> int:
        """Array position of the node at ``t = 0``.

        Returns
        -------
        int
            Offset of the origin inside :attr:`values`.
        """
        return -self.first_node

    @property
    def times(self) -> np.ndarray:
        """Grid times of every stored node.

        Returns
        -------
        numpy.ndarray
            Node times, built from integer node indices.
        """
        return (np.arange(self.values.shape[0]) + self.first_node) * self.dt

    def index_of(self, t: float) -> int:
        """Return the array position of the grid node at time ``t``.

        Parameters
        ----------
        t : float
            Grid time.

        Returns
        -------
        int
            Position of ``t`` inside :attr:`values`.

        Raises
        ------
        GridError
            If ``t`` is not a multiple of ``dt``.
        SupportError
            If ``t`` lies outside ``[t_min, t_max]``.
        """
        if not is_multiple(t, self.dt):
            raise GridError(f"t={t} is not a multiple of the path step {self.dt}")
        position = int(round(t / self.dt)) - self.first_node
        if position < 0 or position >= self.values.shape[0]:
            raise SupportError(f"t={t} lies outside the stored window [{self.t_min}, {self.t_max}]")
        return position

    def value(self, t: float) -> float:
        """Return the path value at the grid time ``t``.

        Parameters
        ----------
        t : float
            Grid time inside the stored window.

        Returns
        -------
        float
            ``w(t)``.
        """
        return float(self.values[self.index_of(t)])

    def interpolate(self, times: np.ndarray) -> np.ndarray:
        """Evaluate the piecewise-linear interpolant of the path at arbitrary times.

        Parameters
        ----------
        times : numpy.ndarray
            Query times inside the stored window.

        Returns
        -------
        numpy.ndarray
            Interpolated values with the shape of ``times``.
        """
        times = np.asarray(times, dtype=float)
        if times.size and (times.min() < self.t_min - 1e-12 or times.max() > self.t_max + 1e-12):
            raise SupportError(
                f"Interpolation range [{times.min()}, {times.max()}] leaves [{self.t_min}, {self.t_max}]"
            )
        return np.interp(times, self.times, self.values)


@dataclass(frozen=True, slots=True)
class CircleState:
    """Point on the circle driver, rotated by ``theta_t w = w + t mod 2 pi``.

    Parameters
    ----------
    angle : float
        Angle in radians; reduced to ``[0, 2 pi)`` on construction.
    """

    angle: float

    def __post_init__(self) -> None:
        """Reduce the stored angle modulo ``2 pi``."""
        object.__setattr__(self, "angle", float(np.mod(self.angle, TWO_PI)))


Driver = Union[SamplePath, CircleState]


@dataclass(frozen=True, slots=True, eq=False)
class BasePoint:
    """Point ``(tau, w)`` of the extended base space ``R x Omega``.

    Parameters
    ----------
    tau : float
        Initial time.
    driver : SamplePath or CircleState
        Noise realisation.
    """

    tau: float
    driver: Driver


@dataclass(frozen=True, slots=True)
class OuEvaluator:
    """Quadrature settings for the stationary Ornstein-Uhlenbeck functional.

    Parameters
    ----------
    truncation : float, default=20.0
        Length ``T`` of the window ``[-T, 0]`` replacing the half line.
    step : float or None, default=None
        Quadrature step; ``None`` uses the path grid, smaller values refine by linear interpolation.
    """

    truncation: float = field(default_factory=lambda: LAB_CONFIG.driver.ou_truncation)
    step: float | None = None

    def __post_init__(self) -> None:
        """Validate the truncation window and the quadrature step."""
        if not self.truncation > 0.0:
            raise DomainError(f"OU truncation must be positive, got {self.truncation}")
        if self.step is not None and not self.step > 0.0:
            raise DomainError(f"OU quadrature step must be positive, got {self.step}")


@dataclass(frozen=True, slots=True)
class OuValue:
    """Value of ``z(theta_t w)`` together with its truncation bound.

    Parameters
    ----------
    value : float
        Quadrature value of ``-int_{-T}^0 e^s (theta_t w)(s) ds``.
    error_bound : float
        Bound ``e^{-T} sup |theta_t w|`` on the neglected tail.
    """

    value: float
    error_bound: float

    def __float__(self) -> float:
        """Return the quadrature value."""
        return self.value


def _node(t: float, dt: float) -> int:
    """Return the integer node index of a grid time.

    Parameters
    ----------
    t : float
        Grid time.
    dt : float
        Grid step.

    Returns
    -------
    int
        ``round(t / dt)``.
    """
    return int(round(t / dt))


def _check_grid(t_min: float, t_max: float, dt: float) -> None:
    """Validate a two-sided window.

    Parameters
    ----------
    t_min : float
        Left end; must be negative.
    t_max : float
        Right end; must be positive.
    dt : float
        Grid step dividing both ends.

    Raises
    ------
    GridError
        If the window does not straddle zero or ``dt`` does not divide it.
    """
    if not dt > 0.0:
        raise GridError(f"dt must be positive, got {dt}")
    if not t_min < 0.0 < t_max:
        raise GridError(f"Window must satisfy t_min < 0 < t_max, got [{t_min}, {t_max}]")
    if not (is_multiple(t_min, dt) and is_multiple(t_max, dt)):
        raise GridError(f"dt={dt} does not divide the window [{t_min}, {t_max}]")


def _block_key(seed: int, block: int) -> int:
    """Combine a seed and a signed block index into a 128-bit Philox key.

    Parameters
    ----------
    seed : int
        Stream seed in ``[0, 2**64)``.
    block : int
        Signed block index; negative blocks hold increments before ``t = 0``.

    Returns
    -------
    int
        ``(seed << 64) | (block mod 2**64)``.
    """
    return (seed << 64) | (block & _KEY_MASK)


def standard_normals(seed: int, first: int, last: int, block_size: int | None = None) -> np.ndarray:
    """Return the standard normals attached to the increment indices ``first .. last - 1``.

    Every block of ``block_size`` consecutive indices draws from its own Philox stream keyed by
    ``(seed, block)``, so the value at an index does not depend on the requested range.

    Parameters
    ----------
    seed : int
        Stream seed in ``[0, 2**64)``.
    first : int
        First signed increment index.
    last : int
        One past the last increment index.
    block_size : int, optional
        Increments per block; defaults to ``LAB_CONFIG.driver.block_size``.

    Returns
    -------
    numpy.ndarray
        Box-Muller normals of length ``last - first``.
    """
    if not 0 <= seed <= _KEY_MASK:
        raise DomainError(f"seed must lie in [0, 2**64), got {seed}")
    size = block_size or LAB_CONFIG.driver.block_size
    if last <= first:
        return np.empty(0)
    chunks = []
    for block in range(first // size, (last - 1) // size + 1):
        generator = np.random.Generator(np.random.Philox(key=_block_key(seed, block)))
        uniforms = generator.random((size, 2))
        radius = np.sqrt(-2.0 * np.log1p(-uniforms[:, 0]))
        normals = radius * np.cos(TWO_PI * uniforms[:, 1])
        start = block * size
        lo = max(first, start) - start
        hi = min(last, start + size) - start
        chunks.append(normals[lo:hi])
    return np.concatenate(chunks)


def wiener_sample(seed: int, t_min: float, t_max: float, dt: float) -> SamplePath:
    """Sample a two-sided Brownian path on ``[t_min, t_max]``.

    Parameters
    ----------
    seed : int
        Stream seed; equal seeds give equal values on overlapping windows with the same ``dt``.
    t_min : float
        Negative left end, a multiple of ``dt``.
    t_max : float
        Positive right end, a multiple of ``dt``.
    dt : float
        Grid step.

    Returns
    -------
    SamplePath
        Path with ``w(0) = 0`` and independent ``N(0, dt)`` increments.

    Raises
    ------
    GridError
        If the window does not straddle zero or ``dt`` does not divide it.
    """
    _check_grid(t_min, t_max, dt)
    k_lo = _node(t_min, dt)
    k_hi = _node(t_max, dt)
    increments = math.sqrt(dt) * standard_normals(seed, k_lo, k_hi)
    backward = increments[: -k_lo]
    forward = increments[-k_lo:]
    # Both halves accumulate outward from the origin so overlapping windows agree bit for bit.
    right = np.concatenate(([0.0], np.cumsum(forward)))
    left = -np.cumsum(backward[::-1])[::-1]
    values = np.concatenate((left, right))
    return SamplePath(t_min=k_lo * dt, t_max=k_hi * dt, dt=dt, values=values, seed=seed)


def path_value(p: SamplePath, t: float) -> float:
    """Look up ``w(t)`` on the path grid.

    Parameters
    ----------
    p : SamplePath
        Brownian path.
    t : float
        Grid time inside the stored window.

    Returns
    -------
    float
        Stored value at ``t``.

    Raises
    ------
    GridError
        If ``t`` is off grid.
    SupportError
        If ``t`` is outside the window.
    """
    return p.value(t)


def shift_path(p: SamplePath, t: float) -> SamplePath:
    """Apply the Wiener shift ``(theta_t w)(s) = w(t + s) - w(t)``.

    Parameters
    ----------
    p : SamplePath
        Path to shift.
    t : float
        Shift, a grid multiple strictly inside ``(t_min, t_max)``.

    Returns
    -------
    SamplePath
        Shifted path on ``[t_min - t, t_max - t]``.

    Raises
    ------
    GridError
        If ``t`` is off grid.
    SupportError
        If the shifted window would not contain the origin.
    """
    position = p.index_of(t)
    if position == 0 or position == p.values.shape[0] - 1:
        raise SupportError(f"Shift t={t} leaves no stored support on one side of the origin")
    j = int(round(t / p.dt))
    values = p.values - p.values[position]
    return SamplePath(
        t_min=(p.first_node - j) * p.dt,
        t_max=(p.first_node + p.values.shape[0] - 1 - j) * p.dt,
        dt=p.dt,
        values=values,
        seed=p.seed,
    )


def shift_circle(c: CircleState, t: float) -> CircleState:
    """Rotate the circle driver by ``t``.

    Parameters
    ----------
    c : CircleState
        Current angle.
    t : float
        Rotation time.

    Returns
    -------
    CircleState
        State with angle ``c.angle + t mod 2 pi``.
    """
    return CircleState(c.angle + t)


def shift_driver(w: Driver, t: float) -> Driver:
    """Dispatch :func:`shift_path` or :func:`shift_circle` on the driver type.

    Parameters
    ----------
    w : SamplePath or CircleState
        Driver to shift.
    t : float
        Shift time.

    Returns
    -------
    SamplePath or CircleState
        ``theta_t w``.
    """
    if isinstance(w, SamplePath):
        return shift_path(w, t)
    return shift_circle(w, t)


def theta_big(b: BasePoint, t: float) -> BasePoint:
    """Apply the skew shift ``Theta_t(tau, w) = (tau + t, theta_t w)``.

    Parameters
    ----------
    b : BasePoint
        Base point to move.
    t : float
        Elapsed time.

    Returns
    -------
    BasePoint
        Moved base point.
    """
    return BasePoint(tau=b.tau + t, driver=shift_driver(b.driver, t))


def pull_back(b: BasePoint) -> Driver:
    """Return ``theta_{-tau} w``, the realisation seen at absolute time zero.

    Parameters
    ----------
    b : BasePoint
        Base point ``(tau, w)``.

    Returns
    -------
    SamplePath or CircleState
        Pulled-back driver.
    """
    if b.tau == 0.0:
        return b.driver
    return shift_driver(b.driver, -b.tau)


def ou_eval(ev: OuEvaluator, p: SamplePath, t: float) -> OuValue:
    """Evaluate the stationary Ornstein-Uhlenbeck value ``z(theta_t w)``.

    ``z(w) = -int_{-inf}^0 e^s w(s) ds`` is replaced by the trapezoid rule on ``[-T, 0]``.

    Parameters
    ----------
    ev : OuEvaluator
        Truncation and quadrature settings.
    p : SamplePath
        Brownian path.
    t : float
        Grid time at which the shifted path is evaluated.

    Returns
    -------
    OuValue
        Quadrature value and truncation bound.

    Raises
    ------
    SupportError
        If ``[t - T, t]`` is not stored.
    GridError
        If the quadrature step is coarser than the path grid.
    """
    if ev.step is not None and ev.step > p.dt * (1.0 + 1e-9):
        raise GridError(f"OU quadrature step {ev.step} is coarser than the path step {p.dt}")
    position = p.index_of(t)
    back = int(math.ceil(ev.truncation / p.dt - 1e-9))
    if position - back < 0:
        raise SupportError(f"OU window [{t - ev.truncation}, {t}] leaves the stored path")
    segment = p.values[position - back : position + 1] - p.values[position]
    s = np.arange(-back, 1) * p.dt
    if ev.step is not None and ev.step < p.dt:
        fine = np.linspace(s[0], 0.0, int(math.ceil(-s[0] / ev.step)) + 1)
        segment_fine = np.interp(fine, s, segment)
        integral = trapezoid(np.exp(fine) * segment_fine, fine)
    else:
        integral = trapezoid(np.exp(s) * segment, s)
    bound = math.exp(-back * p.dt) * float(np.max(np.abs(segment)))
    return OuValue(value=float(-integral), error_bound=bound)


def ou_series(ev: OuEvaluator, p: SamplePath, t_lo: float, t_hi: float) -> Tuple[np.ndarray, np.ndarray]:
    """Evaluate ``z(theta_t w)`` on every grid node covering ``[t_lo, t_hi]``.

    The trapezoid sums share their weights between neighbouring nodes, so the whole series follows
    from a first-order recursion started ``T`` before ``t_lo``. Subtracting the decayed sum from
    ``T`` earlier keeps every node on the window ``[t - T, t]`` used by :func:`ou_eval`, which makes
    the value at a node independent of the requested range.

    Parameters
    ----------
    ev : OuEvaluator
        Truncation settings; ``ev.step`` is ignored.
    p : SamplePath
        Brownian path.
    t_lo : float
        Start of the requested range.
    t_hi : float
        End of the requested range.

    Returns
    -------
    tuple of numpy.ndarray
        Node times and OU values on those nodes.

    Raises
    ------
    SupportError
        If the range or its truncation window leaves the stored path.
    """
    i_lo = int(math.floor((t_lo - p.t_min) / p.dt + 1e-9))
    i_hi = int(math.ceil((t_hi - p.t_min) / p.dt - 1e-9))
    back = int(math.ceil(ev.truncation / p.dt - 1e-9))
    start = i_lo - back
    if start < 0 or i_hi >= p.values.shape[0]:
        raise SupportError(
            f"OU series on [{t_lo}, {t_hi}] needs path support from {t_lo - ev.truncation}"
        )
    w = p.values[start : i_hi + 1]
    h = p.dt
    decay = math.exp(-h)
    forcing = np.zeros_like(w)
    forcing[1:] = 0.5 * h * (w[1:] + decay * w[:-1])
    weights = np.zeros_like(w)
    weights[1:] = 0.5 * h * (1.0 + decay)
    running = lfilter([1.0], [1.0, -decay], forcing)
    mass = lfilter([1.0], [1.0, -decay], weights)
    tail = math.exp(-back * h)
    running = running[back:] - tail * running[:-back] if back else running
    mass = mass[back:] - tail * mass[:-back] if back else mass
    z = w[back:] * mass - running
    times = (np.arange(i_lo, i_hi + 1) + p.first_node) * h
    return times, z


def ou_at(ev: OuEvaluator, p: SamplePath, times: np.ndarray) -> np.ndarray:
    """Evaluate ``z(theta_t w)`` at arbitrary times by linear interpolation of :func:`ou_series`.

    Parameters
    ----------
    ev : OuEvaluator
        Truncation settings.
    p : SamplePath
        Brownian path.
    times : numpy.ndarray
        Query times.

    Returns
    -------
    numpy.ndarray
        Interpolated OU values with the shape of ``times``.
    """
    times = np.asarray(times, dtype=float)
    nodes, values = ou_series(ev, p, float(times.min()), float(times.max()))
    return np.interp(times, nodes, values)
