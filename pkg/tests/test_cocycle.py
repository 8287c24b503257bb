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
"""Tests for cocycle construction, integration and the random ODE solvers."""

import math

import numpy as np
import pytest

from nrdslab.engine.cocycle import (
    FieldSpec,
    circle_channel,
    cocycle_residual,
    convergence_order,
    frozen_channel,
    integrate_rde,
    integrate_stratonovich,
    make_nrds,
    ou_channel,
    step_count,
    time_channel,
)
from nrdslab.engine.cohomology import KappaSpec
from nrdslab.engine.config import IntegratorConfig
from nrdslab.engine.driver import BasePoint, CircleState, OuEvaluator, shift_path, theta_big, wiener_sample
from nrdslab.engine.errors import ConfigError, DivergenceError, DomainError, GridError


def _decay_field() -> FieldSpec:
    """Return ``u' = -u`` without channels.

    Returns
    -------
    FieldSpec
        Linear one-dimensional field.
    """

    def rhs(c, u):
        return -u

    return FieldSpec("decay", 1, rhs)


def _forced_field() -> FieldSpec:
    """Return ``u' = -u + cos(tau + t)``.

    Returns
    -------
    FieldSpec
        Field with an absolute-time channel.
    """

    def rhs(c, u):
        return -u + c["cos"][..., None]

    return FieldSpec("forced", 1, rhs, (time_channel("cos", np.cos),))


def _forced_exact(t: float) -> float:
    """Return the solution of :func:`_forced_field` from ``u(0) = 0``.

    Parameters
    ----------
    t : float
        Elapsed time.

    Returns
    -------
    float
        ``(cos t + sin t - exp(-t)) / 2``.
    """
    return 0.5 * (math.cos(t) + math.sin(t) - math.exp(-t))


def _circle_field() -> FieldSpec:
    """Return ``u' = -u + sin(w + t)`` on the circle driver.

    Returns
    -------
    FieldSpec
        Field with a circle channel.
    """

    def rhs(c, u):
        return -u + c["sin"][..., None]

    return FieldSpec("circle", 1, rhs, (circle_channel("sin", lambda angle, t: np.sin(angle)),))


def _ou_field(ev: OuEvaluator) -> FieldSpec:
    """Return ``u' = -u + z(theta_t w)``.

    Parameters
    ----------
    ev : OuEvaluator
        OU settings.

    Returns
    -------
    FieldSpec
        Field with an OU channel.
    """

    def rhs(c, u):
        return -u + c["z"][..., None]

    return FieldSpec("ou", 1, rhs, (ou_channel("z", ev),))


class TestFieldSpec:
    """Validation of vector-field declarations and channels."""

    def test_dimension_range(self) -> None:
        """Only dimensions one to three are accepted."""
        with pytest.raises(DomainError):
            FieldSpec("wide", 4, lambda c, u: u)

    def test_duplicate_channels(self) -> None:
        """Channel names must be unique."""
        channel = time_channel("x", np.cos)
        with pytest.raises(DomainError):
            FieldSpec("dup", 1, lambda c, u: u, (channel, channel))

    def test_channel_driver_mismatch(self) -> None:
        """Circle and OU channels refuse the wrong driver."""
        circle = BasePoint(0.0, CircleState(0.0))
        wiener = BasePoint(0.0, wiener_sample(0, -30.0, 5.0, 0.01))
        t = np.linspace(0.0, 1.0, 5)
        with pytest.raises(DomainError):
            circle_channel("s", lambda angle, t: np.sin(angle)).evaluate(wiener, t)
        with pytest.raises(DomainError):
            ou_channel("z", OuEvaluator(20.0)).evaluate(circle, t)

    def test_frozen_channel_constant_along_orbit(self) -> None:
        """A frozen parameter reads the pulled-back driver at every base point of an orbit."""
        channel = frozen_channel("a", lambda w: math.cos(w.angle))
        b = BasePoint(0.0, CircleState(1.0))
        t = np.linspace(0.0, 3.0, 7)
        assert np.allclose(channel.evaluate(b, t), math.cos(1.0))
        assert np.allclose(channel.evaluate(theta_big(b, 2.5), t), math.cos(1.0))

    def test_step_count(self) -> None:
        """Horizons must be non-negative multiples of the step."""
        assert step_count(1.0, 0.01) == 100
        with pytest.raises(GridError):
            step_count(1.005, 0.01)
        with pytest.raises(GridError):
            step_count(-1.0, 0.01)


class TestIntegration:
    """Fixed-step integration along a frozen realisation."""

    def test_exponential_decay(self) -> None:
        """RK4 reproduces ``exp(-t)``."""
        b = BasePoint(0.0, CircleState(0.0))
        segment = integrate_rde(_decay_field(), b, np.array([1.0]), 1.0, IntegratorConfig(step=0.01))
        assert segment.states.shape == (101, 1)
        assert segment.times[-1] == pytest.approx(1.0)
        assert segment.states[-1, 0] == pytest.approx(math.exp(-1.0), abs=1e-9)

    def test_rk4_order(self) -> None:
        """Halving the step divides the RK4 error by roughly sixteen."""
        b = BasePoint(0.0, CircleState(0.0))
        errors = []
        for step in (0.1, 0.05):
            segment = integrate_rde(_forced_field(), b, np.array([0.0]), 2.0, IntegratorConfig(step=step))
            errors.append(abs(segment.states[-1, 0] - _forced_exact(2.0)))
        assert errors[0] / errors[1] >= 12.0

    def test_heun_order(self) -> None:
        """Halving the step divides the Heun error by roughly four."""
        b = BasePoint(0.0, CircleState(0.0))
        errors = []
        for step in (0.1, 0.05):
            cfg = IntegratorConfig(scheme="heun", step=step)
            segment = integrate_rde(_forced_field(), b, np.array([0.0]), 2.0, cfg)
            errors.append(abs(segment.states[-1, 0] - _forced_exact(2.0)))
        assert errors[0] / errors[1] >= 3.0

    def test_unknown_scheme(self) -> None:
        """Only RK4 and Heun are available."""
        with pytest.raises(ConfigError):
            IntegratorConfig(scheme="euler")

    def test_euler_heun_alias(self) -> None:
        """``euler_heun`` selects the Heun scheme."""
        assert IntegratorConfig(scheme="euler_heun").scheme == "heun"
        b = BasePoint(0.0, CircleState(0.0))
        x0 = np.array([0.0])
        alias = integrate_rde(_forced_field(), b, x0, 1.0, IntegratorConfig(scheme="euler_heun", step=0.1))
        heun = integrate_rde(_forced_field(), b, x0, 1.0, IntegratorConfig(scheme="heun", step=0.1))
        assert np.array_equal(alias.states, heun.states)

    def test_blow_up_reports_escape_time(self) -> None:
        """``u' = u^2`` from one escapes near ``t = 1``."""

        def rhs(c, u):
            return u * u

        field = FieldSpec("riccati", 1, rhs)
        b = BasePoint(0.0, CircleState(0.0))
        with pytest.raises(DivergenceError) as excinfo:
            integrate_rde(field, b, np.array([1.0]), 2.0, IntegratorConfig(step=0.001))
        assert excinfo.value.escape_time == pytest.approx(1.0, abs=0.01)
        assert excinfo.value.batch_index == 0
        assert excinfo.value.point_index == 0

    def test_batch_shapes(self) -> None:
        """Shared initial points are broadcast across base points."""
        phi = make_nrds(_circle_field(), IntegratorConfig(step=0.05))
        bases = [BasePoint(0.0, CircleState(a)) for a in (0.0, 1.0)]
        times, states = phi.flow(bases, np.zeros((3, 1)), 1.0, record_every=5)
        assert times.shape == (5,)
        assert states.shape == (5, 2, 3, 1)
        with pytest.raises(DomainError):
            phi.flow(bases, np.zeros((3, 2)), 1.0)

    def test_zero_time_is_identity(self) -> None:
        """``phi(0, b)`` returns the initial state unchanged."""
        phi = make_nrds(_circle_field(), IntegratorConfig(step=0.05))
        x = np.array([[0.25], [-1.5]])
        out = phi(0.0, BasePoint(0.0, CircleState(0.3)), x)
        assert np.array_equal(out, x)
        assert out is not x


class TestCocycleProperty:
    """Composition of the generated cocycle along the base flow."""

    def test_circle_residual(self) -> None:
        """The circle cocycle composes to rounding accuracy."""
        phi = make_nrds(_circle_field(), IntegratorConfig(step=0.01))
        b = BasePoint(0.0, CircleState(2.0))
        assert cocycle_residual(phi, b, np.array([0.7]), 1.0, 0.5) < 1e-12

    def test_time_channel_residual(self) -> None:
        """A nonautonomous forcing composes to rounding accuracy."""
        phi = make_nrds(_forced_field(), IntegratorConfig(step=0.01))
        b = BasePoint(-3.0, CircleState(0.0))
        assert cocycle_residual(phi, b, np.array([1.2]), 2.0, 1.0) < 1e-12

    def test_wiener_residual(self) -> None:
        """The OU-driven cocycle composes up to interpolation rounding."""
        ev = OuEvaluator(20.0)
        phi = make_nrds(_ou_field(ev), IntegratorConfig(step=0.01))
        p = wiener_sample(12, -30.0, 10.0, 0.01)
        b = BasePoint(0.0, p)
        assert cocycle_residual(phi, b, np.array([0.3]), 1.0, 1.0) < 1e-10

    def test_shifted_base_point(self) -> None:
        """Starting from ``(tau, theta_tau w)`` matches the evolution process from zero."""
        ev = OuEvaluator(20.0)
        phi = make_nrds(_ou_field(ev), IntegratorConfig(step=0.01))
        p = wiener_sample(12, -30.0, 10.0, 0.01)
        process = phi.evolution(BasePoint(0.0, p))
        direct = phi(1.0, BasePoint(2.0, shift_path(p, 2.0)), np.array([0.3]))
        assert process(3.0, 2.0, np.array([0.3])) == pytest.approx(direct, abs=1e-10)
        with pytest.raises(GridError):
            process(1.0, 2.0, np.array([0.3]))


class TestStratonovich:
    """Stochastic Heun integration read off a stored path."""

    def test_geometric_brownian_motion(self) -> None:
        """``du = u o dW`` follows ``u0 exp(W(t))``."""
        p = wiener_sample(21, -1.0, 2.0, 0.001)
        segment = integrate_stratonovich(
            np.array([[0.0]]), lambda u: 0.0 * u, KappaSpec.constant(1.0), p, np.array([1.0]), 0.0, 1.0, 0.001
        )
        exact = math.exp(p.value(1.0) - p.value(0.0))
        assert segment.states[-1, 0] == pytest.approx(exact, rel=0.02)

    def test_linear_drift(self) -> None:
        """Without noise the scheme is the explicit trapezoid rule."""
        p = wiener_sample(21, -1.0, 2.0, 0.001)
        segment = integrate_stratonovich(
            np.array([[-1.0]]), lambda u: 0.0 * u, KappaSpec.constant(0.0), p, np.array([2.0]), 0.0, 1.0, 0.01
        )
        assert segment.states[-1, 0] == pytest.approx(2.0 * math.exp(-1.0), rel=1e-4)

    def test_step_off_path_grid(self) -> None:
        """The step must be a multiple of the path step."""
        p = wiener_sample(21, -1.0, 2.0, 0.001)
        with pytest.raises(GridError):
            integrate_stratonovich(
                np.array([[0.0]]), lambda u: 0.0 * u, KappaSpec.constant(1.0), p, np.array([1.0]), 0.0, 1.0, 0.0015
            )


class TestConvergenceOrder:
    """Log-log slope fitting."""

    def test_synthetic_slope(self) -> None:
        """Errors proportional to ``h^2`` give order two."""
        steps = [2.0**-k for k in range(4, 9)]
        assert convergence_order(steps, [3.0 * h * h for h in steps]) == pytest.approx(2.0)

    def test_too_few_points(self) -> None:
        """Fewer than two positive errors give ``nan``."""
        assert math.isnan(convergence_order([0.1, 0.05], [0.0, 1e-3]))
