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
"""Tests for box sets, Hausdorff distances and the omega-limit estimators."""

import math

import numpy as np
import pytest

from nrdslab.engine.cocycle import make_nrds
from nrdslab.engine.config import IntegratorConfig, LimitConfig, symmetric_shifts
from nrdslab.engine.driver import BasePoint, CircleState, OuEvaluator, theta_big, wiener_sample
from nrdslab.engine.errors import DomainError
from nrdslab.engine.setvalued import (
    BoxGrid,
    BoxSet,
    attraction_rate,
    estimate_mjua,
    estimate_mjua_parts,
    forward_omega_limit,
    global_uniform_omega_limit,
    hausdorff_distance,
    hausdorff_semidist,
    library_sensitivity,
    point_semidist,
    uniform_omega_limit,
    uniform_omega_limit_report,
)
from nrdslab.models.benchmark import CIRCLE, WIENER, get_problem

SMALL_LIMITS = LimitConfig(s_grid=symmetric_shifts(2.0, 5), t_burn=10.0, t_tail=12.0, stride=0.5, density=8)
STEP = IntegratorConfig(step=0.05)


def _ball(grid: BoxGrid, radius: float) -> BoxSet:
    """Return the cells of ``grid`` whose centres lie in ``[-radius, radius]^d``.

    Parameters
    ----------
    grid : BoxGrid
        Partition.
    radius : float
        Half width of the cube.

    Returns
    -------
    BoxSet
        Cube set.
    """
    centres = BoxSet.cover_box(grid).centers()
    return BoxSet.from_points(grid, centres[(np.abs(centres) <= radius).all(axis=1)])


def _benchmark_cocycle(problem_id: str, driver_kind: str, **overrides: object):
    """Build the cocycle of a registry problem.

    Parameters
    ----------
    problem_id : str
        Registry key.
    driver_kind : str
        Driver kind.
    **overrides : object
        Parameter overrides.

    Returns
    -------
    tuple
        Problem, resolved parameters and cocycle.
    """
    problem = get_problem(problem_id)
    params = problem.resolve_parameters(overrides)
    field = problem.build_field(params, driver_kind, OuEvaluator(20.0))
    return problem, params, make_nrds(field, STEP)


class TestBoxGrid:
    """Uniform partitions of a phase-space box."""

    def test_geometry(self) -> None:
        """Widths, diameter and refinement follow the cell counts."""
        grid = BoxGrid.cube(-1.0, 1.0, 20, 2)
        assert grid.dimension == 2
        assert np.allclose(grid.widths, 0.1)
        assert grid.cell_diameter == pytest.approx(0.1 * math.sqrt(2.0))
        assert grid.refined().n == (40, 40)
        assert grid.refined().cell_diameter == pytest.approx(0.5 * grid.cell_diameter)

    def test_invalid_box(self) -> None:
        """Degenerate boxes and mismatched axes are rejected."""
        with pytest.raises(DomainError):
            BoxGrid((1.0,), (1.0,), (10,))
        with pytest.raises(DomainError):
            BoxGrid((0.0, 0.0), (1.0,), (10,))
        with pytest.raises(DomainError):
            BoxGrid((0.0,), (1.0,), (0,))

    def test_cells_and_centres(self) -> None:
        """Points map to the cell whose centre is nearest along each axis."""
        grid = BoxGrid.cube(0.0, 1.0, 10, 1)
        cells = grid.cells_of(np.array([[0.0], [0.55], [1.0]]))
        assert cells.ravel().tolist() == [0, 5, 9]
        assert grid.centers_of(np.array([[5]]))[0, 0] == pytest.approx(0.55)
        with pytest.raises(DomainError):
            grid.cells_of(np.array([[1.5]]))
        with pytest.raises(DomainError):
            grid.cells_of(np.array([[np.nan]]))


class TestBoxSet:
    """Set algebra in cell resolution."""

    def test_neighbourhood_of_single_cell(self) -> None:
        """A quarter-unit neighbourhood of one cell of width 0.1 covers five cells."""
        grid = BoxGrid.cube(0.0, 1.0, 10, 1)
        single = BoxSet.from_points(grid, np.array([[0.55]]))
        assert single.count == 1
        assert single.neighbourhood(0.25).count == 5
        with pytest.raises(DomainError):
            BoxSet.empty(grid).neighbourhood(0.1)

    def test_dilation_includes_diagonals(self) -> None:
        """One dilation step of a planar cell gives its Moore neighbourhood."""
        grid = BoxGrid.cube(0.0, 1.0, 10, 2)
        single = BoxSet.from_points(grid, np.array([[0.55, 0.55]]))
        assert single.dilate().count == 9
        assert single.dilate(0).count == 1
        assert single.contained_in(single.dilate())
        assert not single.dilate().contained_in(single)
        assert single.dilate().contained_in(single, dilation=1)

    def test_union_and_containment(self) -> None:
        """Union occupies the cells of both operands."""
        grid = BoxGrid.cube(0.0, 1.0, 10, 1)
        a = BoxSet.from_points(grid, np.array([[0.05]]))
        b = BoxSet.from_points(grid, np.array([[0.95]]))
        both = a.union(b)
        assert both.count == 2
        assert a.contained_in(both) and b.contained_in(both)
        other = BoxSet.empty(BoxGrid.cube(0.0, 1.0, 20, 1))
        with pytest.raises(DomainError):
            a.union(other)

        """Lattice seeds span the cube of the occupied cells."""
        """Lattice seeds fall only into occupied cells."""
        grid = BoxGrid.cube(-2.0, 2.0, 40, 2)
        ball = _ball(grid, 1.0)
        seeds = ball.lattice_points(6)
        assert seeds.shape == (36, 2)
        assert np.all(np.abs(seeds) <= 1.0 + 1e-12)
        with pytest.raises(DomainError):
            BoxSet.empty(grid).lattice_points(4)

    def test_map_points_reflection(self) -> None:
        """Reflecting a symmetric set through the origin gives the same cells."""
        grid = BoxGrid.cube(-2.0, 2.0, 40, 2)
        ball = _ball(grid, 1.0)
        assert ball.map_points(lambda x: -x).occupancy.tolist() == ball.occupancy.tolist()

    def test_points_outside_rejected(self) -> None:
        """Rasterising a point outside the box raises."""
        grid = BoxGrid.cube(0.0, 1.0, 10, 1)
        with pytest.raises(DomainError):
            BoxSet.from_points(grid, np.array([[2.0]]))


class TestHausdorff:
    """Semi-distances between cell-centre clouds."""

    def test_semidistance_is_asymmetric(self) -> None:
        """A subset is at zero distance from its superset, not the other way round."""
        grid = BoxGrid.cube(0.0, 1.0, 10, 1)
        a = BoxSet.from_points(grid, np.array([[0.05]]))
        b = BoxSet.from_points(grid, np.array([[0.05], [0.95]]))
        assert hausdorff_semidist(a, b) == 0.0
        assert hausdorff_semidist(b, a) == pytest.approx(0.9)
        assert hausdorff_distance(a, b) == pytest.approx(0.9)

    def test_point_cloud(self) -> None:
        """Point clouds are measured against cell centres."""
        grid = BoxGrid.cube(0.0, 1.0, 10, 1)
        b = BoxSet.from_points(grid, np.array([[0.55]]))
        assert point_semidist(np.array([[0.55], [0.75]]), b) == pytest.approx(0.2)

    def test_empty_sets(self) -> None:
        """Distances involving the empty set are undefined."""
        grid = BoxGrid.cube(0.0, 1.0, 10, 1)
        a = BoxSet.from_points(grid, np.array([[0.05]]))
        with pytest.raises(DomainError):
            hausdorff_semidist(a, BoxSet.empty(grid))
        with pytest.raises(DomainError):
            hausdorff_semidist(BoxSet.empty(grid), a)


class TestSinExample:
    """Omega-limit estimators on the rotating sine forcing with a singleton attractor."""

    grid = BoxGrid.cube(-2.0, 2.0, 400, 1)

    def test_uniform_limit_matches_singleton(self) -> None:
        """The estimate sits on ``sin(w - tau)``."""
        problem, params, phi = _benchmark_cocycle("sin_example", CIRCLE)
        b = BasePoint(0.0, CircleState(0.7))
        report = uniform_omega_limit_report(phi, _ball(self.grid, 1.0), b, SMALL_LIMITS)
        reference = problem.reference_set(b, params, OuEvaluator(20.0), self.grid)
        assert reference.count == 1
        assert hausdorff_semidist(report.boxes, reference) <= 0.02
        assert report.nested
        assert report.late_boxes is not None

    def test_invariance_along_orbit(self) -> None:
        """The estimate does not change along the skew-product orbit."""
        _, _, phi = _benchmark_cocycle("sin_example", CIRCLE)
        b = BasePoint(0.0, CircleState(0.7))
        here = uniform_omega_limit(phi, _ball(self.grid, 1.0), b, SMALL_LIMITS)
        later = uniform_omega_limit(phi, _ball(self.grid, 1.0), theta_big(b, 1.0), SMALL_LIMITS)
        assert hausdorff_distance(here, later) <= 2.0 * self.grid.cell_diameter

    def test_forward_limit_inside_uniform(self) -> None:
        """The forward limit is contained in the uniform limit."""
        _, _, phi = _benchmark_cocycle("sin_example", CIRCLE)
        b = BasePoint(0.5, CircleState(2.0))
        uniform = uniform_omega_limit(phi, _ball(self.grid, 1.0), b, SMALL_LIMITS)
        forward = forward_omega_limit(phi, _ball(self.grid, 1.0), b, SMALL_LIMITS)
        assert forward.contained_in(uniform, dilation=1)

    def test_library_union(self) -> None:
        """Every library ball recovers the same singleton."""
        _, _, phi = _benchmark_cocycle("sin_example", CIRCLE)
        b = BasePoint(0.0, CircleState(0.7))
        library = [_ball(self.grid, 0.5), _ball(self.grid, 1.5)]
        parts = estimate_mjua_parts(phi, library, b, SMALL_LIMITS)
        union = estimate_mjua(phi, library, b, SMALL_LIMITS)
        assert union.count <= 3
        assert max(library_sensitivity(parts)) <= 2.0 * self.grid.cell_diameter
        with pytest.raises(DomainError):
            estimate_mjua_parts(phi, [], b, SMALL_LIMITS)

    def test_global_limit_fills_interval(self) -> None:
        """Sampling sixteen angles spreads the union over ``[-1, 1]``."""
        _, _, phi = _benchmark_cocycle("sin_example", CIRCLE)
        angles = [CircleState(2.0 * math.pi * k / 16) for k in range(16)]
        cfg = LimitConfig(s_grid=(0.0,), t_burn=10.0, t_tail=11.0, stride=0.5, density=4)
        union = global_uniform_omega_limit(phi, _ball(self.grid, 1.0), angles, cfg)
        interval = BoxSet.from_points(self.grid, np.linspace(-1.0, 1.0, 201)[:, None])
        assert hausdorff_semidist(union, interval) <= 0.02
        assert point_semidist(np.array([[-1.0], [1.0]]), union) <= 0.02
        assert union.count >= 9
        with pytest.raises(DomainError):
            global_uniform_omega_limit(phi, _ball(self.grid, 1.0), [], cfg)

    def test_attraction_rate_decays(self) -> None:
        """The distance to the attractor shrinks along the geometric schedule."""
        problem, params, phi = _benchmark_cocycle("sin_example", CIRCLE)
        b = BasePoint(0.0, CircleState(0.7))
        reference = problem.reference_set(b, params, OuEvaluator(20.0), self.grid)
        table = attraction_rate(phi, _ball(self.grid, 1.0), reference, b, SMALL_LIMITS)
        rows = table.rows()
        assert [t for t, _ in rows] == pytest.approx([0.0, 0.5, 1.0, 2.0, 4.0, 8.0])
        assert rows[-1][1] <= 0.02
        assert rows[0][1] > rows[-1][1]

    def test_attraction_rate_stride_beyond_tail(self) -> None:
        """A stride longer than the tail window still tabulates the final time."""
        problem, params, phi = _benchmark_cocycle("sin_example", CIRCLE)
        b = BasePoint(0.0, CircleState(0.7))
        reference = problem.reference_set(b, params, OuEvaluator(20.0), self.grid)
        cfg = LimitConfig(s_grid=(0.0,), t_burn=0.5, t_tail=1.0, stride=2.0, density=4)
        table = attraction_rate(phi, _ball(self.grid, 1.0), reference, b, cfg)
        assert [t for t, _ in table.rows()] == pytest.approx([0.0, 1.0])


class TestCubicExample:
    """The cubic problem with a constant amplitude on the Wiener driver."""

    def test_estimate_inside_interval(self) -> None:
        """Limit points lie on ``[-1, 1]`` and reach its ends."""
        grid = BoxGrid.cube(-2.0, 2.0, 200, 1)
        problem, params, phi = _benchmark_cocycle("cubic_example", WIENER, a_variant="constant")
        b = BasePoint(0.0, wiener_sample(3, -25.0, 27.0, 0.01))
        estimate = uniform_omega_limit(phi, _ball(grid, 2.0), b, SMALL_LIMITS)
        reference = problem.reference_set(b, params, OuEvaluator(20.0), grid)
        assert hausdorff_semidist(estimate, reference) <= 0.05
        assert point_semidist(np.array([[-1.0], [1.0]]), estimate) <= 0.05


class TestCoupledExample:
    """The odd coupled pair keeps its reflection symmetry."""

    def test_reflection_symmetry(self) -> None:
        """The estimate is mapped into itself by ``x -> -x``."""
        grid = BoxGrid.cube(-3.0, 3.0, 60, 2)
        _, _, phi = _benchmark_cocycle("coupled_example", CIRCLE)
        cfg = LimitConfig(s_grid=symmetric_shifts(1.0, 3), t_burn=8.0, t_tail=10.0, stride=0.5, density=6)
        estimate = uniform_omega_limit(phi, _ball(grid, 2.0), BasePoint(0.0, CircleState(1.0)), cfg)
        assert not estimate.is_empty()
        mirrored = estimate.map_points(lambda x: -x)
        assert mirrored.contained_in(estimate, dilation=2)
