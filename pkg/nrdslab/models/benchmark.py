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
"""Benchmark problems with closed-form attractor references where they are known."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np

from nrdslab.engine.cocycle import Channel, FieldSpec, circle_channel, frozen_channel, ou_channel, time_channel
from nrdslab.engine.cohomology import ConjugacyTransform, KappaSpec, conjugated_field
from nrdslab.engine.driver import BasePoint, CircleState, Driver, OuEvaluator, SamplePath, ou_eval, pull_back
from nrdslab.engine.errors import ConfigError, DomainError
from nrdslab.engine.setvalued import BoxGrid, BoxSet

ParameterValue = Union[float, str]
Parameters = Mapping[str, ParameterValue]

WIENER = "wiener"
CIRCLE = "circle"
REFERENCE_SAMPLES = 2001


@dataclass(frozen=True, slots=True)
class SdeSetup:
    """Stratonovich problem ``du = (A u + f(u)) dt + kappa(t) u o dW``.

    Parameters
    ----------
    A : numpy.ndarray
        Diagonal linear part.
    nonlinearity : FieldSpec
        Nonlinearity ``f``; may read frozen random parameters.
    kappa : KappaSpec
        Noise intensity.
    check_nonlinearity : FieldSpec
        Channel-free instance of ``f`` used for conjugacy verification.
    """

    A: np.ndarray
    nonlinearity: FieldSpec
    kappa: KappaSpec
    check_nonlinearity: FieldSpec


@dataclass(frozen=True, slots=True)
class BenchmarkProblem:
    """Registry entry describing one benchmark.

    Parameters
    ----------
    problem_id : str
        Registry key.
    description : str
        One-line summary shown by the CLI.
    dimension : int
        Phase-space dimension.
    driver_kinds : tuple of str
        Supported drivers, ``"wiener"`` and/or ``"circle"``; the first is the default.
    parameters : dict of str to float or str
        Declared parameters with their defaults.
    field_factory : callable
        ``field_factory(params, driver_kind, ou)`` returning the random ODE driving the experiment.
    reference : callable or None, default=None
        ``reference(b, params, ou)`` returning points that sample the closed-form attractor.
    sde : callable or None, default=None
        ``sde(params)`` returning the Stratonovich setup for SDE problems.
    tolerance : float or None, default=None
        Acceptance tolerance on the reference distance.
    """

    problem_id: str
    description: str
    dimension: int
    driver_kinds: Tuple[str, ...]
    parameters: Dict[str, ParameterValue]
    field_factory: Callable[[Parameters, str, OuEvaluator], FieldSpec]
    reference: Optional[Callable[[BasePoint, Parameters, OuEvaluator], np.ndarray]] = None
    sde: Optional[Callable[[Parameters], SdeSetup]] = None
    tolerance: Optional[float] = None

    def resolve_parameters(self, overrides: Mapping[str, object]) -> Dict[str, ParameterValue]:
        """Merge overrides into the declared defaults, converting numbers from text.

        Parameters
        ----------
        overrides : mapping
            Parameter values, typically strings read from a config file.

        Returns
        -------
        dict
            Complete parameter set.

        Raises
        ------
        ConfigError
            If an override names an undeclared parameter or a number fails to parse.
        """
        resolved: Dict[str, ParameterValue] = dict(self.parameters)
        for name, raw in overrides.items():
            if name not in self.parameters:
                raise ConfigError(f"Problem '{self.problem_id}' has no parameter '{name}'")
            if isinstance(self.parameters[name], str):
                resolved[name] = str(raw)
                continue
            try:
                resolved[name] = float(raw)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"Parameter '{name}' expects a number, got {raw!r}") from exc
        return resolved

    def check_driver(self, driver_kind: str) -> None:
        """Reject drivers the problem does not support.

        Parameters
        ----------
        driver_kind : str
            Requested driver.

        Raises
        ------
        ConfigError
            If the driver is not supported.
        """
        if driver_kind not in self.driver_kinds:
            raise ConfigError(
                f"Problem '{self.problem_id}' supports drivers {list(self.driver_kinds)}, not '{driver_kind}'"
            )

    def build_field(self, params: Parameters, driver_kind: str, ou: OuEvaluator) -> FieldSpec:
        """Instantiate the random ODE for a parameter set and driver.

        Parameters
        ----------
        params : mapping
            Resolved parameters.
        driver_kind : str
            Driver kind.
        ou : OuEvaluator
            OU settings for channels reading ``z``.

        Returns
        -------
        FieldSpec
            Field of the experiment.
        """
        self.check_driver(driver_kind)
        return self.field_factory(params, driver_kind, ou)

    def reference_set(self, b: BasePoint, params: Parameters, ou: OuEvaluator, grid: BoxGrid) -> Optional[BoxSet]:
        """Rasterise the closed-form attractor at ``b``.

        Parameters
        ----------
        b : BasePoint
            Base point.
        params : mapping
            Resolved parameters.
        ou : OuEvaluator
            OU settings.
        grid : BoxGrid
            Output partition.

        Returns
        -------
        BoxSet or None
            Reference attractor, or ``None`` when the problem has no closed form.

        Raises
        ------
        ConfigError
            If the reference leaves the configured box.
        """
        if self.reference is None:
            return None
        points = np.asarray(self.reference(b, params, ou), dtype=float).reshape(-1, self.dimension)
        try:
            return BoxSet.from_points(grid, points)
        except DomainError as exc:
            raise ConfigError(f"Reference attractor of '{self.problem_id}' leaves the box: {exc}") from exc


def _ou_at_origin(w: Driver, ou: OuEvaluator) -> float:
    """Return ``z(w)`` for a Wiener driver.

    Parameters
    ----------
    w : SamplePath or CircleState
        Driver; must be a sample path.
    ou : OuEvaluator
        OU settings.

    Returns
    -------
    float
        ``z(w)``.
    """
    if not isinstance(w, SamplePath):
        raise DomainError("z(w) needs a Wiener driver")
    return ou_eval(ou, w, 0.0).value


def _amplitude(params: Parameters, w: Driver, ou: OuEvaluator) -> float:
    """Return the random amplitude ``a(w)`` of the cubic problems.

    Parameters
    ----------
    params : mapping
        Resolved parameters; ``a_variant`` is ``"constant"``, ``"bounded"`` or ``"unbounded"``.
    w : SamplePath or CircleState
        Pulled-back driver ``theta_{-tau} w``.
    ou : OuEvaluator
        OU settings.

    Returns
    -------
    float
        Positive amplitude.

    Raises
    ------
    ConfigError
        If the variant is unknown.
    """
    variant = params["a_variant"]
    if variant == "constant":
        return float(params["a_constant"])
    if isinstance(w, CircleState):
        return 1.0 + 0.5 * abs(np.sin(w.angle))
    z = abs(_ou_at_origin(w, ou))
    if variant == "bounded":
        return 1.0 + min(z, 2.0)
    if variant == "unbounded":
        return 1.0 + z
    raise ConfigError(f"Unknown a_variant '{variant}'")


def _amplitude_channel(params: Parameters, ou: OuEvaluator) -> Channel:
    """Build the frozen channel carrying ``a(theta_{-tau} w)``.

    Parameters
    ----------
    params : mapping
        Resolved parameters.
    ou : OuEvaluator
        OU settings.

    Returns
    -------
    Channel
        Channel named ``a``.
    """
    return frozen_channel("a", lambda w: _amplitude(params, w, ou))


def _sin_field(params: Parameters, driver_kind: str, ou: OuEvaluator) -> FieldSpec:
    """Return ``x' = -x + sin(theta_{-tau} w) + beta(Theta_t(tau, w))`` on the circle.

    Parameters
    ----------
    params : mapping
        Resolved parameters; ``beta_amplitude`` scales the decaying pulse ``exp(-t^2)``.
    driver_kind : str
        Driver kind, always ``"circle"``.
    ou : OuEvaluator
        Unused OU settings.

    Returns
    -------
    FieldSpec
        One-dimensional field.
    """
    amplitude = float(params["beta_amplitude"])

    def rhs(c: Mapping[str, np.ndarray], u: np.ndarray) -> np.ndarray:
        return -u + c["sin_pulled"][..., None] + c["beta"][..., None]

    channels = (
        frozen_channel("sin_pulled", lambda w: float(np.sin(w.angle))),
        time_channel("beta", lambda t: amplitude * np.exp(-np.square(t))),
    )
    return FieldSpec("sin_example", 1, rhs, channels)


def _sin_reference(b: BasePoint, params: Parameters, ou: OuEvaluator) -> np.ndarray:
    """Return the singleton ``{sin(w - tau)}``.

    Parameters
    ----------
    b : BasePoint
        Base point on the circle.
    params : mapping
        Unused parameters.
    ou : OuEvaluator
        Unused OU settings.

    Returns
    -------
    numpy.ndarray
        One point.
    """
    pulled = pull_back(b)
    return np.array([[np.sin(pulled.angle)]])


def _cubic_field(params: Parameters, driver_kind: str, ou: OuEvaluator) -> FieldSpec:
    """Return ``x' = x - x^3 / a^2 + |gamma exp(-t^2) xi(Theta_t b)| x^3``.

    ``xi`` is the OU process on the Wiener driver and ``sin`` of the rotated angle on the circle.

    Parameters
    ----------
    params : mapping
        Resolved parameters.
    driver_kind : str
        ``"wiener"`` or ``"circle"``.
    ou : OuEvaluator
        OU settings.

    Returns
    -------
    FieldSpec
        One-dimensional field.
    """
    gamma = float(params["gamma"])
    if driver_kind == WIENER:
        noise = ou_channel("xi", ou, lambda z, t: gamma * np.exp(-np.square(t)) * z)
    else:
        noise = circle_channel("xi", lambda angle, t: gamma * np.exp(-np.square(t)) * np.sin(angle))

    def rhs(c: Mapping[str, np.ndarray], u: np.ndarray) -> np.ndarray:
        a = c["a"][..., None]
        cube = u * u * u
        return u - cube / (a * a) + np.abs(c["xi"][..., None]) * cube

    return FieldSpec("cubic_example", 1, rhs, (_amplitude_channel(params, ou), noise))


def _cubic_reference(b: BasePoint, params: Parameters, ou: OuEvaluator) -> np.ndarray:
    """Return samples of ``[-a(theta_{-tau} w), a(theta_{-tau} w)]``.

    Parameters
    ----------
    b : BasePoint
        Base point.
    params : mapping
        Resolved parameters.
    ou : OuEvaluator
        OU settings.

    Returns
    -------
    numpy.ndarray
        Interval samples.
    """
    a = _amplitude(params, pull_back(b), ou)
    return np.linspace(-a, a, REFERENCE_SAMPLES)[:, None]


def _coupled_field(params: Parameters, driver_kind: str, ou: OuEvaluator) -> FieldSpec:
    """Return the diffusively coupled pair of cubic oscillators with random damping ``beta``.

    Parameters
    ----------
    params : mapping
        Resolved parameters; ``k`` is the coupling strength.
    driver_kind : str
        ``"wiener"`` or ``"circle"``.
    ou : OuEvaluator
        OU settings.

    Returns
    -------
    FieldSpec
        Two-dimensional odd field.
    """
    k = float(params["k"])
    if driver_kind == WIENER:
        beta = ou_channel("beta", ou, lambda z, t: 1.0 + 0.5 * np.tanh(z))
    else:
        beta = circle_channel("beta", lambda angle, t: 1.0 + 0.5 * np.sin(angle))

    def rhs(c: Mapping[str, np.ndarray], u: np.ndarray) -> np.ndarray:
        x1 = u[..., 0]
        x2 = u[..., 1]
        damping = c["beta"]
        coupling = k * (x2 - x1)
        return np.stack((coupling + x1 - damping * x1**3, -coupling + x2 - damping * x2**3), axis=-1)

    return FieldSpec("coupled_example", 2, rhs, (beta,))


def _ou_field(params: Parameters, driver_kind: str, ou: OuEvaluator) -> FieldSpec:
    """Return ``u' = -u + z(theta_t w)``, whose pullback attractor is a random Gaussian singleton.

    Parameters
    ----------
    params : mapping
        Unused parameters.
    driver_kind : str
        Always ``"wiener"``.
    ou : OuEvaluator
        OU settings.

    Returns
    -------
    FieldSpec
        One-dimensional field.
    """

    def rhs(c: Mapping[str, np.ndarray], u: np.ndarray) -> np.ndarray:
        return -u + c["ou_z"][..., None]

    return FieldSpec("ou_counterexample", 1, rhs, (ou_channel("ou_z", ou),))


def _kappa(params: Parameters) -> KappaSpec:
    """Return the noise intensity selected by the parameters.

    Parameters
    ----------
    params : mapping
        Resolved parameters; ``kappa`` is ``"lorentzian"`` or ``"constant"``.

    Returns
    -------
    KappaSpec
        Noise intensity.

    Raises
    ------
    ConfigError
        If the kappa name is unknown.
    """
    if params["kappa"] == "lorentzian":
        return KappaSpec.lorentzian()
    if params["kappa"] == "constant":
        return KappaSpec.constant(float(params["kappa_value"]))
    raise ConfigError(f"Unknown kappa '{params['kappa']}'")


def _cubic_nonlinearity(params: Parameters, ou: OuEvaluator) -> FieldSpec:
    """Return ``f(u) = -u^3 / a^2`` with ``a`` read from a frozen channel.

    Parameters
    ----------
    params : mapping
        Resolved parameters.
    ou : OuEvaluator
        OU settings.

    Returns
    -------
    FieldSpec
        Nonlinearity.
    """

    def rhs(c: Mapping[str, np.ndarray], u: np.ndarray) -> np.ndarray:
        a = c["a"][..., None]
        return -(u * u * u) / (a * a)

    return FieldSpec("cubic_nonlinearity", 1, rhs, (_amplitude_channel(params, ou),))


def _unit_cubic(c: Mapping[str, np.ndarray], u: np.ndarray) -> np.ndarray:
    """Return ``-u^3``, the cubic nonlinearity at ``a = 1``.

    Parameters
    ----------
    c : mapping
        Unused channel values.
    u : numpy.ndarray
        States.

    Returns
    -------
    numpy.ndarray
        ``-u^3``.
    """
    return -(u * u * u)


def _stochastic_cubic_sde(params: Parameters) -> SdeSetup:
    """Return the Stratonovich cubic ``dx = (x - x^3 / a^2) dt + kappa(t) x o dW``.

    Parameters
    ----------
    params : mapping
        Resolved parameters.

    Returns
    -------
    SdeSetup
        SDE description.
    """
    return SdeSetup(
        A=np.array([[1.0]]),
        nonlinearity=_cubic_nonlinearity(params, OuEvaluator()),
        kappa=_kappa(params),
        check_nonlinearity=FieldSpec("unit_cubic", 1, _unit_cubic),
    )


def _stochastic_cubic_field(params: Parameters, driver_kind: str, ou: OuEvaluator) -> FieldSpec:
    """Return the random ODE conjugated to the Stratonovich cubic.

    Parameters
    ----------
    params : mapping
        Resolved parameters.
    driver_kind : str
        Always ``"wiener"``.
    ou : OuEvaluator
        OU settings.

    Returns
    -------
    FieldSpec
        ``v' = v - exp(2 kappa z) v^3 / a^2 + (kappa - kappa') z v``.
    """
    return conjugated_field(np.array([[1.0]]), _cubic_nonlinearity(params, ou), _kappa(params), ou)


def _stochastic_cubic_reference(b: BasePoint, params: Parameters, ou: OuEvaluator) -> np.ndarray:
    """Return samples of ``T^{-1}(tau, w) [-a, a]`` in SDE coordinates.

    Parameters
    ----------
    b : BasePoint
        Base point with a Wiener driver.
    params : mapping
        Resolved parameters.
    ou : OuEvaluator
        OU settings.

    Returns
    -------
    numpy.ndarray
        Interval samples.
    """
    interval = _cubic_reference(b, params, ou)
    return ConjugacyTransform(_kappa(params), ou).inverse(b.tau, b.driver, interval)


def registry() -> List[BenchmarkProblem]:
    """Return the benchmark problems in their canonical order.

    Returns
    -------
    list of BenchmarkProblem
        ``sin_example``, ``cubic_example``, ``coupled_example``, ``ou_counterexample``,
        ``stochastic_cubic``.
    """
    return [
        BenchmarkProblem(
            problem_id="sin_example",
            description="x' = -x + sin(w - tau) + beta(t); attractor {sin(w - tau)} on the circle driver",
            dimension=1,
            driver_kinds=(CIRCLE,),
            parameters={"beta_amplitude": 1.0},
            field_factory=_sin_field,
            reference=_sin_reference,
            tolerance=1e-2,
        ),
        BenchmarkProblem(
            problem_id="cubic_example",
            description="x' = x - x^3/a(w)^2 + |g(t) xi| x^3; attractor [-a, a]",
            dimension=1,
            driver_kinds=(WIENER, CIRCLE),
            parameters={"a_variant": "bounded", "a_constant": 1.0, "gamma": 0.02},
            field_factory=_cubic_field,
            reference=_cubic_reference,
            tolerance=5e-2,
        ),
        BenchmarkProblem(
            problem_id="coupled_example",
            description="coupled cubic pair with random damping beta(z); no closed form",
            dimension=2,
            driver_kinds=(WIENER, CIRCLE),
            parameters={"k": 1.0},
            field_factory=_coupled_field,
        ),
        BenchmarkProblem(
            problem_id="ou_counterexample",
            description="u' = -u + z(theta_t w); pullback attractor without a uniform attractor",
            dimension=1,
            driver_kinds=(WIENER,),
            parameters={},
            field_factory=_ou_field,
        ),
        BenchmarkProblem(
            problem_id="stochastic_cubic",
            description="dx = (x - x^3/a^2) dt + kappa(t) x o dW via its conjugated random ODE",
            dimension=1,
            driver_kinds=(WIENER,),
            parameters={"a_variant": "constant", "a_constant": 1.0, "kappa": "lorentzian", "kappa_value": 1.0},
            field_factory=_stochastic_cubic_field,
            reference=_stochastic_cubic_reference,
            sde=_stochastic_cubic_sde,
            tolerance=5e-2,
        ),
    ]


def get_problem(problem_id: str) -> BenchmarkProblem:
    """Look up a registry entry.

    Parameters
    ----------
    problem_id : str
        Registry key.

    Returns
    -------
    BenchmarkProblem
        Matching problem.

    Raises
    ------
    ConfigError
        If the id is unknown.
    """
    for problem in registry():
        if problem.problem_id == problem_id:
            return problem
    known = ", ".join(p.problem_id for p in registry())
    raise ConfigError(f"Unknown problem id '{problem_id}'; known problems: {known}")
