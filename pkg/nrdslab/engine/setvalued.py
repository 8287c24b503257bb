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
"""Set-valued estimation on uniform box grids: omega-limits, attractor estimates and attraction rates."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.ndimage import binary_dilation, distance_transform_edt
from scipy.spatial import cKDTree

from nrdslab.engine.cocycle import Cocycle, step_count
from nrdslab.engine.config import LimitConfig
from nrdslab.engine.driver import BasePoint, Driver, theta_big
from nrdslab.engine.errors import DomainError

_EDGE_TOL = 1e-9


@dataclass(frozen=True, slots=True)
class BoxGrid:
    """Uniform partition of an axis-aligned box.

    Parameters
    ----------
    lo : tuple of float
        Lower corner.
    hi : tuple of float
        Upper corner.
    n : tuple of int
        Cells per axis.
    """

    lo: Tuple[float, ...]
    hi: Tuple[float, ...]
    n: Tuple[int, ...]

    def __post_init__(self) -> None:
        """Validate the corners and the cell counts."""
        if not (len(self.lo) == len(self.hi) == len(self.n)) or not 1 <= len(self.n) <= 3:
            raise DomainError(f"Inconsistent grid axes lo={self.lo}, hi={self.hi}, n={self.n}")
        if any(a >= b for a, b in zip(self.lo, self.hi)):
            raise DomainError(f"Grid needs lo < hi on every axis, got {self.lo} and {self.hi}")
        if any(k < 1 for k in self.n):
            raise DomainError(f"Cell counts must be positive, got {self.n}")

    @classmethod
    def cube(cls, lo: float, hi: float, cells: int, dimension: int) -> BoxGrid:
        """Build the grid of ``[lo, hi]^dimension`` with ``cells`` per axis.

        Parameters
        ----------
        lo : float
            Lower bound on every axis.
        hi : float
            Upper bound on every axis.
        cells : int
            Cells per axis.
        dimension : int
            Number of axes.

        Returns
        -------
        BoxGrid
            Cubic grid.
        """
        return cls((float(lo),) * dimension, (float(hi),) * dimension, (int(cells),) * dimension)

    @property
    def dimension(self) -> int:
        """Number of axes.

        Returns
        -------
        int
            Phase-space dimension.
        """
        return len(self.n)

    @property
    def widths(self) -> np.ndarray:
        """Cell side lengths.

        Returns
        -------
        numpy.ndarray
            One width per axis.
        """
        return (np.asarray(self.hi) - np.asarray(self.lo)) / np.asarray(self.n)

    @property
    def cell_diameter(self) -> float:
        """Diagonal length of one cell.

        Returns
        -------
        float
            Euclidean cell diameter.
        """
        return float(np.linalg.norm(self.widths))

    def refined(self, factor: int = 2) -> BoxGrid:
        """Return the same box split into ``factor`` times as many cells per axis.

        Parameters
        ----------
        factor : int, default=2
            Refinement factor.

        Returns
        -------
        BoxGrid
            Refined grid.
        """
        return BoxGrid(self.lo, self.hi, tuple(k * factor for k in self.n))

    def cells_of(self, points: np.ndarray) -> np.ndarray:
        """Map points to integer cell indices.

        Parameters
        ----------
        points : numpy.ndarray
            Points whose last axis has length :attr:`dimension`.

        Returns
        -------
        numpy.ndarray
            Integer indices of shape ``(count, dimension)``.

        Raises
        ------
        DomainError
            If a point lies outside the box or is not finite.
        """
        pts = np.asarray(points, dtype=float).reshape(-1, self.dimension)
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        span = hi - lo
        outside = ~np.all((pts >= lo - _EDGE_TOL * span) & (pts <= hi + _EDGE_TOL * span), axis=1)
        if outside.any():
            bad = pts[np.argmax(outside)]
            raise DomainError(f"Point {bad.tolist()} lies outside the grid box {self.lo} - {self.hi}")
        idx = np.floor((pts - lo) / self.widths).astype(int)
        return np.clip(idx, 0, np.asarray(self.n) - 1)

    def centers_of(self, cells: np.ndarray) -> np.ndarray:
        """Return the centres of the given cells.

        Parameters
        ----------
        cells : numpy.ndarray
            Integer indices of shape ``(count, dimension)``.

        Returns
        -------
        numpy.ndarray
            Cell centres.
        """
        return np.asarray(self.lo) + (np.asarray(cells) + 0.5) * self.widths


@dataclass(frozen=True, slots=True, eq=False)
class BoxSet:
    """Finite union of grid cells.

    Parameters
    ----------
    grid : BoxGrid
        Underlying partition.
    occupancy : numpy.ndarray
        Boolean array of shape ``grid.n``.
    """

    grid: BoxGrid
    occupancy: np.ndarray

    def __post_init__(self) -> None:
        """Check the occupancy shape against the grid."""
        if self.occupancy.shape != tuple(self.grid.n) or self.occupancy.dtype != bool:
            raise DomainError(f"Occupancy must be a bool array of shape {self.grid.n}")

    @classmethod
    def empty(cls, grid: BoxGrid) -> BoxSet:
        """Return the empty set on ``grid``.

        Parameters
        ----------
        grid : BoxGrid
            Partition.

        Returns
        -------
        BoxSet
            Set with no occupied cells.
        """
        return cls(grid, np.zeros(grid.n, dtype=bool))

    @classmethod
    def cover_box(cls, grid: BoxGrid) -> BoxSet:
        """Return the set of all cells of ``grid``.

        Parameters
        ----------
        grid : BoxGrid
            Partition.

        Returns
        -------
        BoxSet
            Fully occupied set.
        """
        return cls(grid, np.ones(grid.n, dtype=bool))

    @classmethod
    def from_points(cls, grid: BoxGrid, points: np.ndarray) -> BoxSet:
        """Rasterise points into the cells that contain them.

        Parameters
        ----------
        grid : BoxGrid
            Partition.
        points : numpy.ndarray
            Points whose last axis has length ``grid.dimension``.

        Returns
        -------
        BoxSet
            Occupied cells.

        Raises
        ------
        DomainError
            If a point lies outside the grid box.
        """
        occupancy = np.zeros(grid.n, dtype=bool)
        cells = grid.cells_of(points)
        occupancy[tuple(cells.T)] = True
        return cls(grid, occupancy)

    @property
    def count(self) -> int:
        """Number of occupied cells.

        Returns
        -------
        int
            Occupied cell count.
        """
        return int(self.occupancy.sum())

    def is_empty(self) -> bool:
        """Report whether no cell is occupied.

        Returns
        -------
        bool
            ``True`` for the empty set.
        """
        return not self.occupancy.any()

    def centers(self) -> np.ndarray:
        """Return the centres of the occupied cells.

        Returns
        -------
        numpy.ndarray
            Array of shape ``(count, dimension)``.
        """
        return self.grid.centers_of(np.argwhere(self.occupancy))

    def diameter(self) -> float:
        """Return the diameter of one cell.

        Returns
        -------
        float
            Euclidean cell diagonal.
        """
        return self.grid.cell_diameter

    def _require_same_grid(self, other: BoxSet) -> None:
        """Raise unless ``other`` lives on the same grid.

        Parameters
        ----------
        other : BoxSet
            Set to compare.

        Raises
        ------
        DomainError
            If the grids differ.
        """
        if other.grid != self.grid:
            raise DomainError("Set operations need both sets on the same grid")

    def union(self, other: BoxSet) -> BoxSet:
        """Return the union with ``other``.

        Parameters
        ----------
        other : BoxSet
            Set on the same grid.

        Returns
        -------
        BoxSet
            Union of the occupied cells.
        """
        self._require_same_grid(other)
        return BoxSet(self.grid, self.occupancy | other.occupancy)

    def dilate(self, cells: int = 1) -> BoxSet:
        """Grow the set by ``cells`` neighbours in every direction, diagonals included.

        Parameters
        ----------
        cells : int, default=1
            Number of dilation steps.

        Returns
        -------
        BoxSet
            Dilated set.
        """
        if cells <= 0 or self.is_empty():
            return BoxSet(self.grid, self.occupancy.copy())
        structure = np.ones((3,) * self.grid.dimension, dtype=bool)
        return BoxSet(self.grid, binary_dilation(self.occupancy, structure=structure, iterations=cells))

    def contained_in(self, other: BoxSet, dilation: int = 0) -> bool:
        """Report whether every occupied cell is also occupied in ``other`` grown by ``dilation`` cells.

        Parameters
        ----------
        other : BoxSet
            Candidate superset on the same grid.
        dilation : int, default=0
            Number of cells by which ``other`` is grown first.

        Returns
        -------
        bool
            Containment result.
        """
        self._require_same_grid(other)
        grown = other.dilate(dilation).occupancy
        return bool(np.all(grown[self.occupancy]))

    def neighbourhood(self, eps: float) -> BoxSet:
        """Return the cells whose centre lies within ``eps`` of an occupied centre.

        Parameters
        ----------
        eps : float
            Radius of the neighbourhood.

        Returns
        -------
        BoxSet
            Closed ``eps``-neighbourhood in cell resolution.

        Raises
        ------
        DomainError
            If the set is empty.
        """
        if self.is_empty():
            raise DomainError("Neighbourhood of the empty set is undefined")
        distance = distance_transform_edt(~self.occupancy, sampling=self.grid.widths)
        return BoxSet(self.grid, distance <= eps * (1.0 + _EDGE_TOL))

    def lattice_points(self, density: int) -> np.ndarray:
        """Return a regular lattice of seed points inside the occupied cells.

        The lattice spans the bounding box of the occupied cells with ``density`` points per axis; only
        points that fall into occupied cells are kept.

        Parameters
        ----------
        density : int
            Points per axis.

        Returns
        -------
        numpy.ndarray
            Seeds of shape ``(count, dimension)``.

        Raises
        ------
        DomainError
            If the set is empty.
        """
        if self.is_empty():
            raise DomainError("Cannot seed a lattice inside the empty set")
        cells = np.argwhere(self.occupancy)
        lo = np.asarray(self.grid.lo) + cells.min(axis=0) * self.grid.widths
        hi = np.asarray(self.grid.lo) + (cells.max(axis=0) + 1) * self.grid.widths
        axes = [np.linspace(a, b, density) for a, b in zip(lo, hi)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.grid.dimension)
        # Points on the upper face of the bounding box belong to the last occupied cell.
        idx = np.clip(self.grid.cells_of(mesh), cells.min(axis=0), cells.max(axis=0))
        keep = self.occupancy[tuple(idx.T)]
        return mesh[keep]

    def map_points(self, transform: Callable[[np.ndarray], np.ndarray]) -> BoxSet:
        """Push the cell centres through ``transform`` and rasterise the images on the same grid.

        Parameters
        ----------
        transform : callable
            Map acting on arrays of shape ``(count, dimension)``.

        Returns
        -------
        BoxSet
            Image set.
        """
        return BoxSet.from_points(self.grid, transform(self.centers()))


@dataclass(frozen=True, slots=True, eq=False)
class OmegaLimitReport:
    """Uniform omega-limit estimate with its monotonicity check.

    Parameters
    ----------
    boxes : BoxSet
        Cells visited during ``[t_burn, t_tail]``.
    late_boxes : BoxSet or None
        Cells visited during the later window ``[2 t_burn, 2 t_burn + (t_tail - t_burn)]``.
    nested : bool
        Whether the later cells lie within the earlier ones grown by one cell.
    """

    boxes: BoxSet
    late_boxes: Optional[BoxSet]
    nested: bool


@dataclass(frozen=True, slots=True, eq=False)
class RateTable:
    """Attraction-rate samples ``t -> dist(phi(t, Theta_s b) B0, A)`` uniform in ``s``.

    Parameters
    ----------
    times : numpy.ndarray
        Elapsed times.
    distances : numpy.ndarray
        Semi-distances at those times.
    """

    times: np.ndarray
    distances: np.ndarray

    def rows(self) -> List[Tuple[float, float]]:
        """Return the table as ``(t, distance)`` pairs.

        Returns
        -------
        list of tuple
            Table rows in time order.
        """
        return [(float(t), float(d)) for t, d in zip(self.times, self.distances)]


def hausdorff_semidist(A: BoxSet, B: BoxSet) -> float:
    """Return ``sup_{a in A} inf_{b in B} |a - b|`` measured between cell centres.

    Parameters
    ----------
    A : BoxSet
        Set being attracted.
    B : BoxSet
        Attracting set; may live on a different grid.

    Returns
    -------
    float
        Hausdorff semi-distance.

    Raises
    ------
    DomainError
        If either set is empty.
    """
    if A.is_empty() or B.is_empty():
        raise DomainError("Hausdorff semi-distance is undefined for empty sets")
    return point_semidist(A.centers(), B)


def point_semidist(points: np.ndarray, B: BoxSet) -> float:
    """Return the largest distance from a point cloud to the centres of ``B``.

    Parameters
    ----------
    points : numpy.ndarray
        Points of shape ``(..., dimension)``.
    B : BoxSet
        Non-empty target set.

    Returns
    -------
    float
        ``max_p min_b |p - b|``.
    """
    if B.is_empty():
        raise DomainError("Distance to the empty set is undefined")
    distances, _ = cKDTree(B.centers()).query(np.asarray(points).reshape(-1, B.grid.dimension))
    return float(np.max(distances))


def hausdorff_distance(A: BoxSet, B: BoxSet) -> float:
    """Return the symmetric Hausdorff distance between cell centres.

    Parameters
    ----------
    A : BoxSet
        First set.
    B : BoxSet
        Second set.

    Returns
    -------
    float
        ``max(dist(A, B), dist(B, A))``.
    """
    return max(hausdorff_semidist(A, B), hausdorff_semidist(B, A))


def _tail_states(
    phi: Cocycle,
    x0: np.ndarray,
    bases: Sequence[BasePoint],
    cfg: LimitConfig,
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Integrate a seed cloud from every base point and cut out the tail windows.

    Parameters
    ----------
    phi : Cocycle
        Cocycle to integrate.
    x0 : numpy.ndarray
        Seed points of shape ``(points, dimension)``.
    bases : sequence of BasePoint
        Starting base points.
    cfg : LimitConfig
        Tail windows and sampling stride.

    Returns
    -------
    tuple
        States sampled in ``[t_burn, t_tail]`` and, with the monotonicity check, in the late window.
    """
    record_every = step_count(cfg.stride, phi.config.step)
    times, states = phi.flow(bases, x0, cfg.horizon, record_every=record_every)
    slack = 1e-9 * max(1.0, cfg.horizon)
    tail = states[(times >= cfg.t_burn - slack) & (times <= cfg.t_tail + slack)]
    late = None
    if cfg.check_monotonicity:
        late = states[times >= 2.0 * cfg.t_burn - slack]
    return tail, late


def _report_from_states(
    grid: BoxGrid, tail: np.ndarray, late: Optional[np.ndarray]
) -> OmegaLimitReport:
    """Rasterise tail states into an :class:`OmegaLimitReport`.

    Parameters
    ----------
    grid : BoxGrid
        Output partition.
    tail : numpy.ndarray
        States sampled in the main window.
    late : numpy.ndarray or None
        States sampled in the late window.

    Returns
    -------
    OmegaLimitReport
        Estimate and nestedness flag.
    """
    boxes = BoxSet.from_points(grid, tail)
    if late is None:
        return OmegaLimitReport(boxes=boxes, late_boxes=None, nested=True)
    late_boxes = BoxSet.from_points(grid, late)
    return OmegaLimitReport(boxes=boxes, late_boxes=late_boxes, nested=late_boxes.contained_in(boxes, dilation=1))


def uniform_omega_limit_report(
    phi: Cocycle,
    B0: BoxSet,
    b: BasePoint,
    cfg: LimitConfig,
    grid: BoxGrid | None = None,
) -> OmegaLimitReport:
    """Estimate the uniform omega-limit set of ``B0`` at ``b`` and check its monotonicity.

    Parameters
    ----------
    phi : Cocycle
        Cocycle to integrate.
    B0 : BoxSet
        Initial set, seeded by a lattice of ``cfg.density`` points per axis.
    b : BasePoint
        Base point ``(tau, w)``.
    cfg : LimitConfig
        Shift set, tail windows and stride.
    grid : BoxGrid, optional
        Output partition; defaults to the grid of ``B0``.

    Returns
    -------
    OmegaLimitReport
        Estimate and nestedness flag.

    Raises
    ------
    DomainError
        If a tail state leaves the output grid.
    """
    bases = [theta_big(b, s) for s in cfg.s_grid]
    tail, late = _tail_states(phi, B0.lattice_points(cfg.density), bases, cfg)
    return _report_from_states(grid or B0.grid, tail, late)


def uniform_omega_limit(
    phi: Cocycle,
    B0: BoxSet,
    b: BasePoint,
    cfg: LimitConfig,
    grid: BoxGrid | None = None,
) -> BoxSet:
    """Estimate ``L_U(B0, tau, w)``, the omega-limit taken uniformly over initial-time shifts.

    Parameters
    ----------
    phi : Cocycle
        Cocycle to integrate.
    B0 : BoxSet
        Initial set.
    b : BasePoint
        Base point.
    cfg : LimitConfig
        Shift set, tail windows and stride.
    grid : BoxGrid, optional
        Output partition; defaults to the grid of ``B0``.

    Returns
    -------
    BoxSet
        Cells visited by ``phi(t, Theta_s b) B0`` for ``s`` in the shift set and ``t`` in the tail.
    """
    return uniform_omega_limit_report(phi, B0, b, cfg, grid).boxes


def forward_omega_limit(
    phi: Cocycle,
    B0: BoxSet,
    b: BasePoint,
    cfg: LimitConfig,
    grid: BoxGrid | None = None,
) -> BoxSet:
    """Estimate the forward omega-limit set, the uniform construction with the single shift ``s = 0``.

    Parameters
    ----------
    phi : Cocycle
        Cocycle to integrate.
    B0 : BoxSet
        Initial set.
    b : BasePoint
        Base point.
    cfg : LimitConfig
        Tail windows and stride; the shift set is replaced by ``(0,)``.
    grid : BoxGrid, optional
        Output partition; defaults to the grid of ``B0``.

    Returns
    -------
    BoxSet
        Forward omega-limit estimate.
    """
    return uniform_omega_limit(phi, B0, b, replace(cfg, s_grid=(0.0,)), grid)


def estimate_mjua(
    phi: Cocycle,
    library: Sequence[BoxSet],
    b: BasePoint,
    cfg: LimitConfig,
    grid: BoxGrid | None = None,
) -> BoxSet:
    """Estimate the minimal uniform attractor at ``b`` as the union over an initial-set library.

    Parameters
    ----------
    phi : Cocycle
        Cocycle to integrate.
    library : sequence of BoxSet
        Initial sets, typically nested balls.
    b : BasePoint
        Base point.
    cfg : LimitConfig
        Omega-limit settings.
    grid : BoxGrid, optional
        Output partition; defaults to the grid of the first library entry.

    Returns
    -------
    BoxSet
        Union of the per-set uniform omega-limits.
    """
    return _union(estimate_mjua_parts(phi, library, b, cfg, grid))


def estimate_mjua_parts(
    phi: Cocycle,
    library: Sequence[BoxSet],
    b: BasePoint,
    cfg: LimitConfig,
    grid: BoxGrid | None = None,
) -> List[BoxSet]:
    """Return the uniform omega-limit of every library entry.

    Parameters
    ----------
    phi : Cocycle
        Cocycle to integrate.
    library : sequence of BoxSet
        Initial sets.
    b : BasePoint
        Base point.
    cfg : LimitConfig
        Omega-limit settings.
    grid : BoxGrid, optional
        Output partition; defaults to the grid of the first library entry.

    Returns
    -------
    list of BoxSet
        One estimate per library entry, all on the same grid.
    """
    if not library:
        raise DomainError("The initial-set library is empty")
    target = grid or library[0].grid
    return [uniform_omega_limit(phi, B0, b, cfg, target) for B0 in library]


def library_sensitivity(parts: Sequence[BoxSet]) -> List[float]:
    """Measure how much of the union each library entry misses.

    Parameters
    ----------
    parts : sequence of BoxSet
        Per-entry estimates on a common grid.

    Returns
    -------
    list of float
        ``dist(union, part)`` for every entry; zeros mean the entry alone recovers the union.
    """
    union = _union(parts)
    return [hausdorff_semidist(union, part) for part in parts]


def _union(parts: Sequence[BoxSet]) -> BoxSet:
    """Return the union of a non-empty sequence of sets.

    Parameters
    ----------
    parts : sequence of BoxSet
        Sets on a common grid.

    Returns
    -------
    BoxSet
        Union.
    """
    result = parts[0]
    for part in parts[1:]:
        result = result.union(part)
    return result


def global_uniform_omega_limit(
    phi: Cocycle,
    B0: BoxSet,
    omega_samples: Sequence[Driver],
    cfg: LimitConfig,
    tau: float = 0.0,
    grid: BoxGrid | None = None,
) -> BoxSet:
    """Estimate ``L_{R x Omega}(B0)`` as a union over sampled noise realisations.

    Parameters
    ----------
    phi : Cocycle
        Cocycle to integrate.
    B0 : BoxSet
        Initial set.
    omega_samples : sequence of SamplePath or CircleState
        Realisations standing in for ``Omega``.
    cfg : LimitConfig
        Omega-limit settings.
    tau : float, default=0.0
        Initial time of every sampled base point; the shift set covers other times.
    grid : BoxGrid, optional
        Output partition; defaults to the grid of ``B0``.

    Returns
    -------
    BoxSet
        Union of the uniform omega-limits over the samples.
    """
    if not omega_samples:
        raise DomainError("At least one noise realisation is required")
    bases = [theta_big(BasePoint(tau, w), s) for w in omega_samples for s in cfg.s_grid]
    tail, _ = _tail_states(phi, B0.lattice_points(cfg.density), bases, replace(cfg, check_monotonicity=False))
    return BoxSet.from_points(grid or B0.grid, tail)


def attraction_rate(
    phi: Cocycle,
    B0: BoxSet,
    A: BoxSet,
    b: BasePoint,
    cfg: LimitConfig,
) -> RateTable:
    """Tabulate ``dist(phi(t, Theta_s b) B0, A)`` uniformly in ``s`` on a geometric time schedule.

    Parameters
    ----------
    phi : Cocycle
        Cocycle to integrate.
    B0 : BoxSet
        Initial set.
    A : BoxSet
        Attractor estimate.
    b : BasePoint
        Base point.
    cfg : LimitConfig
        Shift set, stride and final time ``t_tail``.

    Returns
    -------
    RateTable
        Rows at ``t = 0`` and ``t = stride * 2^k <= t_tail``; a stride beyond ``t_tail`` schedules
        ``t = t_tail`` alone.
    """
    schedule = [cfg.stride * 2**k for k in range(64) if cfg.stride * 2**k <= cfg.t_tail + 1e-12] or [cfg.t_tail]
    bases = [theta_big(b, s) for s in cfg.s_grid]
    record_every = step_count(min(cfg.stride, cfg.t_tail), phi.config.step)
    times, states = phi.flow(bases, B0.lattice_points(cfg.density), schedule[-1], record_every=record_every)
    tree = cKDTree(A.centers())
    rows_t = [0.0]
    rows_d = [hausdorff_semidist(B0, A)]
    for t in schedule:
        k = int(np.argmin(np.abs(times - t)))
        distances, _ = tree.query(states[k].reshape(-1, A.grid.dimension))
        rows_t.append(float(times[k]))
        rows_d.append(float(np.max(distances)))
    return RateTable(times=np.asarray(rows_t), distances=np.asarray(rows_d))
