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
"""Convergence study of the integrators and of the SDE/RDE conjugacy.

Usage:
    python tools/convergence_study.py [seed]
"""
import sys

import numpy as np

from nrdslab.engine.cocycle import convergence_order, integrate_rde
from nrdslab.engine.cohomology import verify_conjugacy
from nrdslab.engine.config import IntegratorConfig
from nrdslab.engine.driver import BasePoint, CircleState, OuEvaluator, wiener_sample
from nrdslab.models.benchmark import CIRCLE, get_problem


def integrator_study(steps: tuple[float, ...] = (0.2, 0.1, 0.05, 0.025), horizon: float = 5.0) -> None:
    """Print the step-refinement error of both schemes on the sine benchmark.

    Parameters
    ----------
    steps : tuple of float
        Step sizes, coarse to fine.
    horizon : float
        Integration time.
    """
    problem = get_problem("sin_example")
    field = problem.build_field(problem.resolve_parameters({}), CIRCLE, OuEvaluator())
    b = BasePoint(0.0, CircleState(0.7))
    x0 = np.array([2.0])
    # Reference at a quarter of the finest step
    reference = integrate_rde(field, b, x0, horizon, IntegratorConfig(step=steps[-1] / 4)).states[-1]
    for scheme in ("rk4", "heun"):
        errors = []
        for step in steps:
            final = integrate_rde(field, b, x0, horizon, IntegratorConfig(scheme=scheme, step=step)).states[-1]
            errors.append(float(np.max(np.abs(final - reference))))
        print(f"{scheme:>5}: " + "  ".join(f"dt={s:g} err={e:.2e}" for s, e in zip(steps, errors)))
        print(f"       fitted order {convergence_order(steps, errors):.2f}")


def conjugacy_study(seed: int = 0, horizon: float = 2.0) -> None:
    """Print the strong convergence of the SDE solver towards the transformed RDE flow.

    Parameters
    ----------
    seed : int
        Noise seed.
    horizon : float
        Integration time.
    """
    problem = get_problem("stochastic_cubic")
    setup = problem.sde(problem.resolve_parameters({}))
    steps = [2.0**-k for k in range(5, 11)]
    p = wiener_sample(seed, -30.0, horizon + 5.0, steps[-1])
    report = verify_conjugacy(
        setup.A, setup.check_nonlinearity, setup.kappa, p, 0.0, np.array([0.5]), horizon, steps, OuEvaluator()
    )
    print(f"conjugacy (seed {seed}):")
    for dt, error in report.rows():
        print(f"  dt=2^{int(round(np.log2(dt)))} sup_error={error:.3e}")
    print(f"  fitted order {report.order:.2f}")


if __name__ == "__main__":
    integrator_study()
    conjugacy_study(int(sys.argv[1]) if len(sys.argv) > 1 else 0)
