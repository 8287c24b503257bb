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
"""Exception hierarchy shared by the numerical modules and the experiment runner."""

from __future__ import annotations

from typing import Optional


class LabError(Exception):
    """Base class for every error raised by nrdslab.

    Parameters
    ----------
    message : str
        Human-readable description of the failure.
    """

    def __init__(self, message: str) -> None:
        """Store the message on the exception.

        Parameters
        ----------
        message : str
            Human-readable description of the failure.
        """
        super().__init__(message)
        self.message = message


class GridError(LabError, ValueError):
    """Raised for malformed time grids, non-dividing steps and off-grid shifts.

    Parameters
    ----------
    message : str
        Description of the offending grid request.
    """


class SupportError(LabError, ValueError):
    """Raised when a request leaves the stored window of a path or symbol function.

    Parameters
    ----------
    message : str
        Description of the out-of-window request.
    """


class DomainError(LabError, ValueError):
    """Raised when an argument lies outside the domain of an operation.

    Parameters
    ----------
    message : str
        Description of the domain violation.
    """


class ConfigError(LabError, ValueError):
    """Raised for invalid configuration values, unknown keys and unknown problem ids.

    Parameters
    ----------
    message : str
        Description of the configuration problem.
    """


class ToleranceError(LabError):
    """Raised when an experiment misses its acceptance tolerance.

    Parameters
    ----------
    message : str
        Description of the missed tolerance.
    """


class DivergenceError(LabError, ArithmeticError):
    """Raised when an integrated state crosses the blow-up guard.

    Parameters
    ----------
    message : str
        Description of the divergence.
    escape_time : float
        Elapsed integration time at which the guard was first exceeded.
    batch_index : int, optional
        Index of the offending base point in a batched integration.
    point_index : int, optional
        Index of the offending initial state inside its batch row.
    """

    def __init__(
        self,
        message: str,
        escape_time: float,
        batch_index: Optional[int] = None,
        point_index: Optional[int] = None,
    ) -> None:
        """Record where and when the trajectory escaped.

        Parameters
        ----------
        message : str
            Description of the divergence.
        escape_time : float
            Elapsed integration time at which the guard was first exceeded.
        batch_index : int, optional
            Index of the offending base point in a batched integration.
        point_index : int, optional
            Index of the offending initial state inside its batch row.
        """
        super().__init__(message)
        self.escape_time = escape_time
        self.batch_index = batch_index
        self.point_index = point_index
