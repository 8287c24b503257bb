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
"""Central configuration for numerical tuning parameters."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Tuple

from nrdslab.engine.errors import ConfigError

GRID_RTOL = 1e-9
"""Relative tolerance used when deciding whether a time is a multiple of a grid step."""


def symmetric_shifts(s_max: float, count: int) -> Tuple[float, ...]:
    """Return ``count`` equally spaced initial times on ``[-s_max, s_max]``.

    Parameters
    ----------
    s_max : float
        Largest absolute initial time.
    count : int
        Number of shifts; odd counts include ``0``.

    Returns
    -------
    tuple of float
        Shifts ordered from ``-s_max`` to ``s_max``.
    """
    if count < 1:
        raise ConfigError("shift count must be positive")
    if count == 1:
        return (0.0,)
    step = 2.0 * s_max / (count - 1)
    half, odd = divmod(count, 2)
    offset = 0.0 if odd else 0.5
    positive = [(k + 1 - offset) * step for k in range(half)]
    middle = (0.0,) if odd else ()
    # Mirrored explicitly so -s and s are bitwise negatives.
    return tuple(-s for s in reversed(positive)) + middle + tuple(positive)


def _default_shifts() -> Tuple[float, ...]:
    """Return the default shift set used for uniform omega-limits.

    Returns
    -------
    tuple of float
        Forty-one unit-spaced shifts on ``[-20, 20]``.
    """
    return symmetric_shifts(20.0, 41)


def is_multiple(value: float, step: float) -> bool:
    """Report whether ``value`` is an integer multiple of ``step`` up to rounding.

    Parameters
    ----------
    value : float
        Candidate time.
    step : float
        Grid step.

    Returns
    -------
    bool
        ``True`` when ``value / step`` is integral within :data:`GRID_RTOL`.
    """
    ratio = value / step
    return abs(ratio - round(ratio)) <= GRID_RTOL * max(1.0, abs(ratio))


@dataclass(slots=True)
class DriverConfig:
    """Sampling controls for the noise drivers.

    Parameters
    ----------
    dt : float, default=0.01
        Grid step of sampled Brownian paths.
    ou_truncation : float, default=20.0
        Length of the window used to truncate the Ornstein-Uhlenbeck integral.
    block_size : int, default=4096
        Number of increments drawn per counter block of the Philox stream.
    window_margin : float, default=5.0
        Extra time added on both sides of every automatically sized path window.
    """

    dt: float = 0.01
    ou_truncation: float = 20.0
    block_size: int = 4096
    window_margin: float = 5.0


@dataclass(slots=True)
class IntegratorConfig:
    """Step control for deterministic integration along a fixed noise realisation.

    Parameters
    ----------
    scheme : str, default="rk4"
        Either ``"rk4"`` (classical fourth order) or ``"heun"`` (explicit trapezoid). ``"euler_heun"`` is
        accepted as another name for ``"heun"``.
    step : float, default=0.01
        Fixed integration step.
    blowup_guard : float, default=1e9
        Absolute state magnitude treated as divergence.
    """

    scheme: str = "rk4"
    step: float = 0.01
    blowup_guard: float = 1e9

    def __post_init__(self) -> None:
        """Validate the integrator settings."""
        if self.scheme == "euler_heun":
            self.scheme = "heun"
        if self.scheme not in ("rk4", "heun"):
            raise ConfigError(f"Unknown integration scheme '{self.scheme}'")
        if not self.step > 0.0:
            raise ConfigError(f"Integration step must be positive, got {self.step}")
        if not self.blowup_guard > 0.0:
            raise ConfigError(f"Blow-up guard must be positive, got {self.blowup_guard}")


@dataclass(slots=True)
class LimitConfig:
    """Controls for set-valued uniform omega-limit estimation.

    Parameters
    ----------
    s_grid : tuple of float, default=41 unit-spaced shifts on [-20, 20]
        Finite set of initial-time shifts over which the limit is taken.
    t_burn : float, default=40.0
        Start of the sampled tail window.
    t_tail : float, default=60.0
        End of the sampled tail window.
    stride : float, default=0.5
        Spacing between sampled tail times.
    density : int, default=32
        Lattice points per axis used to seed initial sets.
    check_monotonicity : bool, default=True
        When set, a second, later tail window is sampled and nestedness is reported.
    """

    s_grid: Tuple[float, ...] = field(default_factory=_default_shifts)
    t_burn: float = 40.0
    t_tail: float = 60.0
    stride: float = 0.5
    density: int = 32
    check_monotonicity: bool = True

    def __post_init__(self) -> None:
        """Validate the tail window and the shift set."""
        if not self.s_grid:
            raise ConfigError("s_grid must not be empty")
        ordered = sorted(self.s_grid)
        mirrored = sorted(-s for s in self.s_grid)
        if any(not math.isclose(a, b, abs_tol=1e-12) for a, b in zip(ordered, mirrored)):
            raise ConfigError("s_grid must be symmetric about zero")
        if not 0.0 <= self.t_burn < self.t_tail:
            raise ConfigError(f"Need 0 <= t_burn < t_tail, got {self.t_burn} and {self.t_tail}")
        if not self.stride > 0.0:
            raise ConfigError(f"stride must be positive, got {self.stride}")
        if self.density < 2:
            raise ConfigError(f"density must be at least 2, got {self.density}")

    @property
    def s_max(self) -> float:
        """Largest absolute shift in :attr:`s_grid`.

        Returns
        -------
        float
            ``max |s|`` over the shift set.
        """
        return max(abs(s) for s in self.s_grid)

    @property
    def horizon(self) -> float:
        """Final integration time needed by the configured tail windows.

        Returns
        -------
        float
            ``t_tail`` or, with the monotonicity check, the end of the late window.
        """
        if self.check_monotonicity:
            return 2.0 * self.t_burn + (self.t_tail - self.t_burn)
        return self.t_tail


@dataclass(slots=True)
class SymbolConfig:
    """Settings for symbol-space sampling and diagnostics.

    Parameters
    ----------
    metric_levels : int, default=10
        Number of nested windows summed by the compact-open metric.
    half_width : float, default=40.0
        Half width ``L`` of the window on which symbol functions are stored.
    closure_tolerance : float, default=1e-3
        Tail distance under which a constant closure point is added to hull nets.
    holder_levels : int, default=7
        Number of dyadic lags used by the Holder regression.
    """

    metric_levels: int = 10
    half_width: float = 40.0
    closure_tolerance: float = 1e-3
    holder_levels: int = 7


@dataclass(slots=True)
class CohomologyConfig:
    """Settings for conjugacy verification and cohomology residuals.

    Parameters
    ----------
    kappa_tolerance : float, default=1e-4
        Allowed gap between the supplied derivative and a central difference of kappa.
    fd_step : float, default=1e-5
        Central-difference step used by cohomology residuals.
    conjugacy_steps : tuple of float, default=(2**-6, ..., 2**-10)
        Step sizes used by the conjugacy convergence study.
    conjugacy_horizon : float, default=2.0
        Integration horizon of the conjugacy study.
    conjugacy_x0 : float, default=0.5
        Initial state of the conjugacy study.
    """

    kappa_tolerance: float = 1e-4
    fd_step: float = 1e-5
    conjugacy_steps: Tuple[float, ...] = (2.0**-6, 2.0**-7, 2.0**-8, 2.0**-9, 2.0**-10)
    conjugacy_horizon: float = 2.0
    conjugacy_x0: float = 0.5


@dataclass(slots=True)
class BoxConfig:
    """Default phase-space grid and initial-set library.

    Parameters
    ----------
    lo : float, default=-5.0
        Lower bound of the phase-space box on every axis.
    hi : float, default=5.0
        Upper bound of the phase-space box on every axis.
    cells : int, default=256
        Cells per axis.
    library : tuple of float, default=(1.0, 3.0, 5.0)
        Radii of the cubes ``[-r, r]^d`` used as the initial-set library.
    """

    lo: float = -5.0
    hi: float = 5.0
    cells: int = 256
    library: Tuple[float, ...] = (1.0, 3.0, 5.0)


@dataclass(slots=True)
class RunnerConfig:
    """Experiment runner defaults.

    Parameters
    ----------
    workers : int, default=1
        Worker threads used for independent jobs.
    output_dir : str, default="runs"
        Directory where run artefacts are written.
    tolerances : dict of str to float
        Default acceptance tolerance on the reference distance per problem id.
    """

    workers: int = 1
    output_dir: str = "runs"
    tolerances: Dict[str, float] = field(
        default_factory=lambda: {
            "sin_example": 1e-2,
            "cubic_example": 5e-2,
            "stochastic_cubic": 5e-2,
        }
    )


@dataclass(slots=True)
class LabConfig:
    """Top-level configuration container.

    Parameters
    ----------
    driver : DriverConfig, default=DriverConfig()
        Noise sampling settings.
    integrator : IntegratorConfig, default=IntegratorConfig()
        Integration step control.
    limits : LimitConfig, default=LimitConfig()
        Omega-limit estimation settings.
    symbols : SymbolConfig, default=SymbolConfig()
        Symbol-space settings.
    cohomology : CohomologyConfig, default=CohomologyConfig()
        Conjugacy and cohomology settings.
    boxes : BoxConfig, default=BoxConfig()
        Phase-space grid defaults.
    runner : RunnerConfig, default=RunnerConfig()
        Experiment runner defaults.
    """

    driver: DriverConfig = field(default_factory=DriverConfig)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    limits: LimitConfig = field(default_factory=LimitConfig)
    symbols: SymbolConfig = field(default_factory=SymbolConfig)
    cohomology: CohomologyConfig = field(default_factory=CohomologyConfig)
    boxes: BoxConfig = field(default_factory=BoxConfig)
    runner: RunnerConfig = field(default_factory=RunnerConfig)


LAB_CONFIG = LabConfig()
"""Singleton-style access to the default laboratory configuration."""
