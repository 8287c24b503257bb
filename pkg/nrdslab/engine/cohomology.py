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
"""Random conjugacy between a Stratonovich SDE and its random differential equation.

The SDE ``du = (A u + f(u)) dt + kappa(t) u o dW`` is mapped to a random ODE by
``T(tau, w, x) = exp(-kappa(tau) z(w)) x`` with ``z`` the stationary Ornstein-Uhlenbeck process.
The module also carries the explicit power-law cohomology family ``F, G`` with its residual checker.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Mapping, Sequence, Tuple

import numpy as np

from nrdslab.engine.cocycle import (
    Cocycle,
    FieldSpec,
    convergence_order,
    integrate_rde,
    integrate_stratonovich,
    ou_channel,
    time_channel,
)
from nrdslab.engine.config import LAB_CONFIG, IntegratorConfig
from nrdslab.engine.driver import BasePoint, OuEvaluator, SamplePath, ou_eval, ou_series, shift_path, theta_big
from nrdslab.engine.errors import DomainError

TimeFunction = Callable[[np.ndarray], np.ndarray]
StateMap = Callable[[float, np.ndarray], np.ndarray]


@dataclass(frozen=True, slots=True)
class KappaSpec:
    """Noise intensity ``kappa`` supplied together with its derivative.

    Parameters
    ----------
    kappa : callable
        Vectorised map ``t -> kappa(t)``.
    kappa_dot : callable
        Vectorised map ``t -> kappa'(t)``.
    window : tuple of float, default=(-100.0, 100.0)
        Time window on which finiteness and consistency are checked.
    """

    kappa: TimeFunction
    kappa_dot: TimeFunction
    window: Tuple[float, float] = (-100.0, 100.0)

    def __post_init__(self) -> None:
        """Check finiteness and the derivative against a central difference on the window."""
        lo, hi = self.window
        t = np.linspace(lo, hi, 2001)
        values = np.asarray(self.kappa(t), dtype=float) * np.ones_like(t)
        slopes = np.asarray(self.kappa_dot(t), dtype=float) * np.ones_like(t)
        if not (np.all(np.isfinite(values)) and np.all(np.isfinite(slopes))):
            raise DomainError(f"kappa must be finite on {self.window}")
        h = 1e-4
        central = (np.asarray(self.kappa(t + h)) - np.asarray(self.kappa(t - h))) / (2.0 * h)
        gap = float(np.max(np.abs(central - slopes)))
        if gap > LAB_CONFIG.cohomology.kappa_tolerance:
            raise DomainError(f"kappa_dot disagrees with a central difference of kappa by {gap:.3g}")

    @classmethod
    def constant(cls, value: float, window: Tuple[float, float] = (-100.0, 100.0)) -> KappaSpec:
        """Return the constant intensity ``kappa = value``.

        Parameters
        ----------
        value : float
            Constant intensity.
        window : tuple of float, default=(-100.0, 100.0)
            Check window.

        Returns
        -------
        KappaSpec
            Constant pair with zero derivative.
        """
        return cls(
            kappa=lambda t: np.full(np.shape(t), float(value)),
            kappa_dot=lambda t: np.zeros(np.shape(t)),
            window=window,
        )

    @classmethod
    def lorentzian(cls, window: Tuple[float, float] = (-100.0, 100.0)) -> KappaSpec:
        """Return ``kappa(t) = 1 / (1 + t^2)``, which decays fast enough to tame the OU growth.

        Parameters
        ----------
        window : tuple of float, default=(-100.0, 100.0)
            Check window.

        Returns
        -------
        KappaSpec
            Lorentzian pair.
        """
        return cls(
            kappa=lambda t: 1.0 / (1.0 + np.square(t)),
            kappa_dot=lambda t: -2.0 * np.asarray(t) / np.square(1.0 + np.square(t)),
            window=window,
        )

    def value(self, t: float) -> float:
        """Evaluate ``kappa`` at a scalar time.

        Parameters
        ----------
        t : float
            Time.

        Returns
        -------
        float
            ``kappa(t)``.
        """
        return float(np.asarray(self.kappa(np.array([t]))).reshape(-1)[0])


@dataclass(frozen=True, slots=True)
class ConjugacyTransform:
    """Random map ``T(tau, w, x) = exp(-kappa(tau) z(w)) x``.

    Parameters
    ----------
    kappa : KappaSpec
        Noise intensity.
    ou : OuEvaluator
        Quadrature settings for ``z``.
    """

    kappa: KappaSpec
    ou: OuEvaluator = field(default_factory=OuEvaluator)

    @staticmethod
    def factor(kappa_value: float, z: float) -> float:
        """Return the multiplier ``exp(-kappa z)``.

        Parameters
        ----------
        kappa_value : float
            ``kappa(tau)``.
        z : float
            ``z(w)``.

        Returns
        -------
        float
            Forward multiplier.
        """
        return math.exp(-kappa_value * z)

    def _factor_at(self, tau: float, p: SamplePath) -> float:
        """Return ``exp(-kappa(tau) z(p))`` with ``z`` read at the origin of ``p``.

        Parameters
        ----------
        tau : float
            Initial time.
        p : SamplePath
            Noise realisation ``w``.

        Returns
        -------
        float
            Forward multiplier.
        """
        return self.factor(self.kappa.value(tau), ou_eval(self.ou, p, 0.0).value)

    def forward(self, tau: float, p: SamplePath, x: np.ndarray) -> np.ndarray:
        """Apply ``T(tau, w, x)``.

        Parameters
        ----------
        tau : float
            Initial time.
        p : SamplePath
            Noise realisation.
        x : numpy.ndarray
            State.

        Returns
        -------
        numpy.ndarray
            Transformed state.
        """
        return self._factor_at(tau, p) * np.asarray(x, dtype=float)

    def inverse(self, tau: float, p: SamplePath, x: np.ndarray) -> np.ndarray:
        """Apply ``T^{-1}(tau, w, x)``.

        Parameters
        ----------
        tau : float
            Initial time.
        p : SamplePath
            Noise realisation.
        x : numpy.ndarray
            Transformed state.

        Returns
        -------
        numpy.ndarray
            Original state.
        """
        return np.asarray(x, dtype=float) / self._factor_at(tau, p)


@dataclass(frozen=True, slots=True)
class PowerCohomology:
    """Explicit power-law cohomology family.

    Parameters
    ----------
    p : int
        Positive power.
    k : callable
        Vectorised map ``t -> k(t)``.
    k2 : callable
        Vectorised map ``t -> k2(t)``.
    """

    p: int
    k: TimeFunction
    k2: TimeFunction

    def __post_init__(self) -> None:
        """Validate the power."""
        if int(self.p) != self.p or self.p < 1:
            raise DomainError(f"Power p must be a positive integer, got {self.p}")

    def _product(self, t: float) -> float:
        """Return ``k(t) k2(t)``, rejecting zero.

        Parameters
        ----------
        t : float
            Time.

        Returns
        -------
        float
            Product of the two coefficients.
        """
        value = float(np.asarray(self.k(t)) * np.asarray(self.k2(t)))
        if value == 0.0:
            raise DomainError(f"k(t) k2(t) vanishes at t={t}")
        return value

    def g(self, t: float, s: np.ndarray) -> np.ndarray:
        """Return ``g(t, s) = 1 / (k2(t) s^p (p + 1))``.

        Parameters
        ----------
        t : float
            Time.
        s : numpy.ndarray
            Non-zero arguments.

        Returns
        -------
        numpy.ndarray
            Values of ``g``.
        """
        s = np.asarray(s, dtype=float)
        if np.any(s == 0.0):
            raise DomainError("g is singular at s = 0")
        return 1.0 / (float(np.asarray(self.k2(t))) * np.power(s, self.p) * (self.p + 1))

    def F(self, t: float, u: np.ndarray) -> np.ndarray:
        """Return the stated transform ``exp(k k2 u^{p+1})``.

        Parameters
        ----------
        t : float
            Time.
        u : numpy.ndarray
            State.

        Returns
        -------
        numpy.ndarray
            Transformed values.
        """
        return np.exp(self._product(t) * np.power(np.asarray(u, dtype=float), self.p + 1))

    def F_corrected(self, t: float, u: np.ndarray) -> np.ndarray:
        """Return ``exp(-k k2 u^{p+1})``, the transform that solves ``dF/du g + k F = 0``.

        Parameters
        ----------
        t : float
            Time.
        u : numpy.ndarray
            State.

        Returns
        -------
        numpy.ndarray
            Transformed values.
        """
        return np.exp(-self._product(t) * np.power(np.asarray(u, dtype=float), self.p + 1))

    def G(self, t: float, v: np.ndarray) -> np.ndarray:
        """Return ``(ln v / (k k2))^{1/(p+1)}`` on the branch ``u >= 0``.

        Parameters
        ----------
        t : float
            Time.
        v : numpy.ndarray
            Positive values with ``ln v / (k k2) >= 0``.

        Returns
        -------
        numpy.ndarray
            Pre-images under :meth:`F`.

        Raises
        ------
        DomainError
            If ``v <= 0`` or the logarithm has the wrong sign for the branch.
        """
        v = np.asarray(v, dtype=float)
        if np.any(v <= 0.0):
            raise DomainError("G is defined for v > 0 only")
        ratio = np.log(v) / self._product(t)
        if np.any(ratio < 0.0):
            raise DomainError("G has no real pre-image on the branch u >= 0 for these values")
        return np.power(ratio, 1.0 / (self.p + 1))


@dataclass(frozen=True, slots=True)
class ConvergenceReport:
    """Conjugacy convergence study.

    Parameters
    ----------
    steps : list of float
        Step sizes.
    errors : list of float
        Sup-norm gap between the SDE and transformed RDE solutions per step.
    order : float
        Fitted log-log slope of error against step.
    """

    steps: List[float]
    errors: List[float]
    order: float

    def rows(self) -> List[Tuple[float, float]]:
        """Return ``(dt, sup_error)`` rows.

        Returns
        -------
        list of tuple
            Table rows.
        """
        return list(zip(self.steps, self.errors))


@dataclass(frozen=True, slots=True)
class KappaBound:
    """Windowed noise bounds.

    Parameters
    ----------
    S : float
        Half width of the window.
    sup_kz : float
        ``sup |kappa(t) z(theta_t w)|``.
    sup_kdotz : float
        ``sup |(kappa(t) - kappa'(t)) z(theta_t w)|``.
    """

    S: float
    sup_kz: float
    sup_kdotz: float


def transform(T: ConjugacyTransform, tau: float, p: SamplePath, x: np.ndarray) -> np.ndarray:
    """Apply the conjugacy ``T(tau, w, x)``.

    Parameters
    ----------
    T : ConjugacyTransform
        Transform.
    tau : float
        Initial time.
    p : SamplePath
        Noise realisation.
    x : numpy.ndarray
        State.

    Returns
    -------
    numpy.ndarray
        ``exp(-kappa(tau) z(w)) x``.
    """
    return T.forward(tau, p, x)


def inverse_transform(T: ConjugacyTransform, tau: float, p: SamplePath, x: np.ndarray) -> np.ndarray:
    """Apply the inverse conjugacy.

    Parameters
    ----------
    T : ConjugacyTransform
        Transform.
    tau : float
        Initial time.
    p : SamplePath
        Noise realisation.
    x : numpy.ndarray
        Transformed state.

    Returns
    -------
    numpy.ndarray
        ``exp(kappa(tau) z(w)) x``.
    """
    return T.inverse(tau, p, x)


def _diagonal(A: np.ndarray, dimension: int) -> np.ndarray:
    """Return the diagonal of a scalar or diagonal linear part.

    Parameters
    ----------
    A : numpy.ndarray
        Scalar, vector of diagonal entries or diagonal matrix.
    dimension : int
        Phase-space dimension.

    Returns
    -------
    numpy.ndarray
        Diagonal entries of length ``dimension``.

    Raises
    ------
    DomainError
        If ``A`` has off-diagonal entries or the wrong size.
    """
    matrix = np.asarray(A, dtype=float)
    if matrix.ndim == 0:
        return np.full(dimension, float(matrix))
    if matrix.ndim == 1 and matrix.shape[0] == dimension:
        return matrix.copy()
    if matrix.shape == (dimension, dimension):
        if np.any(matrix - np.diag(np.diag(matrix))):
            raise DomainError("The conjugated field needs a diagonal linear part")
        return np.diag(matrix).copy()
    raise DomainError(f"Linear part of shape {matrix.shape} does not match dimension {dimension}")


def drift_field(A: np.ndarray, f: FieldSpec) -> FieldSpec:
    """Assemble the drift ``A u + f(u)`` as a field.

    Parameters
    ----------
    A : numpy.ndarray
        Scalar or diagonal linear part.
    f : FieldSpec
        Nonlinearity.

    Returns
    -------
    FieldSpec
        Drift field with the channels of ``f``.
    """
    diag = _diagonal(A, f.dimension)

    def rhs(c: Mapping[str, np.ndarray], u: np.ndarray) -> np.ndarray:
        return diag * u + f.rhs(c, u)

    return FieldSpec(f"{f.name}_drift", f.dimension, rhs, f.channels)


def conjugated_field(A: np.ndarray, f: FieldSpec, kappa: KappaSpec, ou: OuEvaluator) -> FieldSpec:
    """Return the random ODE obtained from the SDE by the conjugacy.

    ``v' = A v + exp(-kappa z) f(exp(kappa z) v) + (kappa - kappa') z v`` with ``z = z(theta_t w)`` and
    ``kappa`` evaluated at the absolute time ``tau + t``.

    Parameters
    ----------
    A : numpy.ndarray
        Scalar or diagonal linear part.
    f : FieldSpec
        Nonlinearity; its channels are kept.
    kappa : KappaSpec
        Noise intensity.
    ou : OuEvaluator
        OU settings for the ``ou_z`` channel.

    Returns
    -------
    FieldSpec
        Conjugated field with channels ``ou_z``, ``kappa`` and ``kappa_dot`` added.
    """
    diag = _diagonal(A, f.dimension)

    def rhs(c: Mapping[str, np.ndarray], v: np.ndarray) -> np.ndarray:
        z = c["ou_z"][..., None]
        k = c["kappa"][..., None]
        scale = np.exp(k * z)
        return diag * v + f.rhs(c, scale * v) / scale + (k - c["kappa_dot"][..., None]) * z * v

    channels = f.channels + (
        ou_channel("ou_z", ou),
        time_channel("kappa", kappa.kappa),
        time_channel("kappa_dot", kappa.kappa_dot),
    )
    return FieldSpec(f"{f.name}_conjugated", f.dimension, rhs, channels)


def conjugate_flow(phi_v: Cocycle, T: ConjugacyTransform, t: float, b: BasePoint, x: np.ndarray) -> np.ndarray:
    """Evaluate the SDE cocycle ``T^{-1}(Theta_t b, phi_v(t, b) T(b) x)``.

    Parameters
    ----------
    phi_v : Cocycle
        Cocycle of the conjugated field.
    T : ConjugacyTransform
        Conjugacy.
    t : float
        Elapsed time.
    b : BasePoint
        Base point with a Wiener driver.
    x : numpy.ndarray
        State in SDE coordinates.

    Returns
    -------
    numpy.ndarray
        State in SDE coordinates at ``Theta_t b``.
    """
    moved = theta_big(b, t)
    v = phi_v(t, b, T.forward(b.tau, b.driver, x))
    return T.inverse(moved.tau, moved.driver, v)


def verify_conjugacy(
    A: np.ndarray,
    f: FieldSpec,
    kappa: KappaSpec,
    p: SamplePath,
    tau: float,
    x0: np.ndarray,
    T: float,
    dt_list: Sequence[float],
    ou: OuEvaluator | None = None,
) -> ConvergenceReport:
    """Compare the Stratonovich solution with the transformed random-ODE solution.

    The SDE runs on the absolute path over ``[tau, tau + T]``. The random ODE starts from
    ``T(tau, theta_tau p) x0`` at the base point ``(tau, theta_tau p)`` and is mapped back node by node.

    Parameters
    ----------
    A : numpy.ndarray
        Scalar or diagonal linear part.
    f : FieldSpec
        Channel-free nonlinearity.
    kappa : KappaSpec
        Noise intensity.
    p : SamplePath
        Absolute Brownian path; its step must divide every ``dt``.
    tau : float
        Initial time.
    x0 : numpy.ndarray
        Initial state.
    T : float
        Horizon.
    dt_list : sequence of float
        Step sizes.
    ou : OuEvaluator, optional
        OU settings; defaults to ``OuEvaluator()``.

    Returns
    -------
    ConvergenceReport
        Sup errors per step and the fitted order.

    Raises
    ------
    DomainError
        If ``f`` reads channels.
    DivergenceError
        If either leg crosses the blow-up guard.
    """
    if f.channels:
        raise DomainError("Conjugacy verification needs a channel-free nonlinearity")
    evaluator = ou or OuEvaluator()
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    matrix = np.diag(_diagonal(A, f.dimension))
    base = BasePoint(tau, shift_path(p, tau))
    transform_ = ConjugacyTransform(kappa, evaluator)
    field_v = conjugated_field(A, f, kappa, evaluator)

    def nonlinearity(u: np.ndarray) -> np.ndarray:
        return f.rhs({}, u.reshape(1, 1, -1)).reshape(u.shape)

    errors: List[float] = []
    for dt in dt_list:
        sde = integrate_stratonovich(matrix, nonlinearity, kappa, p, x0, tau, T, dt)
        rde = integrate_rde(field_v, base, transform_.forward(tau, base.driver, x0), T, IntegratorConfig("rk4", dt))
        nodes, z = ou_series(evaluator, base.driver, 0.0, T)
        z_at = np.interp(rde.times, nodes, z)
        back = np.exp(np.asarray(kappa.kappa(tau + rde.times)) * z_at)[:, None] * rde.states
        errors.append(float(np.max(np.abs(sde.states - back))))
    steps = [float(d) for d in dt_list]
    return ConvergenceReport(steps=steps, errors=errors, order=convergence_order(steps, errors))


def kappa_noise_bound(kappa: KappaSpec, p: SamplePath, S: float, ou: OuEvaluator | None = None) -> KappaBound:
    """Return windowed suprema of ``kappa z`` and ``(kappa - kappa') z`` on ``[-S, S]``.

    Parameters
    ----------
    kappa : KappaSpec
        Noise intensity.
    p : SamplePath
        Brownian path covering ``[-S - T_trunc, S]``.
    S : float
        Window half width.
    ou : OuEvaluator, optional
        OU settings; defaults to ``OuEvaluator()``.

    Returns
    -------
    KappaBound
        Both suprema.
    """
    times, z = ou_series(ou or OuEvaluator(), p, -S, S)
    k = np.asarray(kappa.kappa(times), dtype=float) * np.ones_like(times)
    kd = np.asarray(kappa.kappa_dot(times), dtype=float) * np.ones_like(times)
    return KappaBound(S=float(S), sup_kz=float(np.max(np.abs(k * z))), sup_kdotz=float(np.max(np.abs((k - kd) * z))))


def power_pair(pc: PowerCohomology) -> Tuple[StateMap, StateMap]:
    """Return the stated transform pair ``(F, G)``.

    Parameters
    ----------
    pc : PowerCohomology
        Family parameters.

    Returns
    -------
    tuple of callable
        ``F(t, u)`` and its branch inverse ``G(t, v)``.
    """
    return pc.F, pc.G


def residual(
    F: StateMap,
    g: StateMap,
    k: TimeFunction,
    grid: np.ndarray,
    t: float = 0.0,
    h: float | None = None,
) -> float:
    """Return ``sup_grid |dF/du g + k F|`` with ``dF/du`` from central differences.

    Parameters
    ----------
    F : callable
        Candidate transform ``F(t, u)``.
    g : callable
        Coefficient ``g(t, s)``; the grid must avoid its singularity at ``0``.
    k : callable
        Coefficient ``k(t)``.
    grid : numpy.ndarray
        State samples.
    t : float, default=0.0
        Time at which the identity is checked.
    h : float, optional
        Difference step; defaults to ``LAB_CONFIG.cohomology.fd_step``.

    Returns
    -------
    float
        Residual supremum.
    """
    step = h or LAB_CONFIG.cohomology.fd_step
    u = np.asarray(grid, dtype=float)
    derivative = (F(t, u + step) - F(t, u - step)) / (2.0 * step)
    return float(np.max(np.abs(derivative * g(t, u) + float(np.asarray(k(t))) * F(t, u))))
