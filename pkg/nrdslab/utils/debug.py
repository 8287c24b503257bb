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
"""Structured logging utilities used to trace experiment runs."""
import time
from collections import deque
from pathlib import Path
from threading import Lock
from typing import Deque, List, Optional, TextIO, Tuple


class RunDebugger:
    """Line logger that streams experiment telemetry to disk.

    Parameters
    ----------
    output_dir : str, default="debug_logs"
        Directory where new session logs are created; created automatically when missing.
    """

    def __init__(self, output_dir: str = "debug_logs") -> None:
        """Initialise the debugger and start the first logging session.

        Parameters
        ----------
        output_dir : str
            Filesystem directory where log files are created.
        """
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.log_file: Optional[TextIO] = None
        self.session_start = time.strftime("%Y%m%d_%H%M%S")
        self._lock = Lock()
        self._line_number = 1
        self._recent_events: Deque[Tuple[int, str]] = deque(maxlen=200)
        self.start_new_session()

    @property
    def log_path(self) -> Path:
        """Path of the current session log.

        Returns
        -------
        Path
            ``<output_dir>/run_debug_<session>.txt``.
        """
        return self.output_dir / f"run_debug_{self.session_start}.txt"

    def start_new_session(self) -> None:
        """Start a new debug logging session."""
        if self.log_file:
            self.log_file.close()

        self.log_file = open(self.log_path, "w", encoding="utf-8")
        self.log_file.write(f"=== Run Debug Session: {time.strftime('%Y-%m-%d %H:%M:%S')} ===\n\n")

    def log_job_start(self, job_id: int, problem_id: str, seed: int, tau: float) -> None:
        """Log the start of a job.

        Parameters
        ----------
        job_id : int
            Job position.
        problem_id : str
            Registry key.
        seed : int
            Noise seed.
        tau : float
            Initial time.
        """
        self._write_log("JOB_START", f"Job {job_id} | Problem: {problem_id} | Seed: {seed} | Tau: {tau:g}")

    def log_job_end(self, job_id: int, runtime_ms: float, distance: float | None = None) -> None:
        """Log the end of a job.

        Parameters
        ----------
        job_id : int
            Job position.
        runtime_ms : float
            Wall-clock runtime in milliseconds.
        distance : float | None
            Reference distance, when the problem has a reference attractor.
        """
        distance_str = f" | Distance: {distance:.3e}" if distance is not None else ""
        self._write_log("JOB_END", f"Job {job_id} | Runtime: {runtime_ms:.0f}ms{distance_str}")

    def log_limit_report(self, job_id: int, cells: int, nested: bool, forward_contained: bool) -> None:
        """Log the outcome of an omega-limit estimate.

        Parameters
        ----------
        job_id : int
            Job position.
        cells : int
            Occupied cells of the estimate.
        nested : bool
            Whether the late window nests inside the main one.
        forward_contained : bool
            Whether the forward limit lies inside the uniform one.
        """
        self._write_log(
            "LIMIT_REPORT",
            f"Job {job_id} | Cells: {cells} | Nested: {nested} | Forward contained: {forward_contained}",
        )

    def log_divergence(self, job_id: int, escape_time: float, description: str) -> None:
        """Log a blow-up guard violation.

        Parameters
        ----------
        job_id : int
            Job position.
        escape_time : float
            Elapsed integration time at the violation.
        description : str
            Error message.
        """
        self._write_log("DIVERGENCE", f"Job {job_id} | Escape: {escape_time:.3f} | Details: {description}")

    def log_tolerance(self, job_id: int, distance: float, tolerance: float) -> None:
        """Log a reference distance above the acceptance tolerance.

        Parameters
        ----------
        job_id : int
            Job position.
        distance : float
            Measured reference distance.
        tolerance : float
            Acceptance tolerance.
        """
        self._write_log("TOLERANCE", f"Job {job_id} | Distance: {distance:.3e} > {tolerance:.3e}")

    def log_conjugacy(self, job_id: int, sup_error: float, order: float) -> None:
        """Log the conjugacy convergence study.

        Parameters
        ----------
        job_id : int
            Job position.
        sup_error : float
            Error at the finest step.
        order : float
            Fitted convergence order.
        """
        self._write_log("CONJUGACY", f"Job {job_id} | Finest error: {sup_error:.3e} | Order: {order:.2f}")

    def log_symbol_stage(self, job_id: int, net_size: int, alpha: float, best_delta: Optional[float]) -> None:
        """Log the symbol-space stage of a job.

        Parameters
        ----------
        job_id : int
            Job position.
        net_size : int
            Number of hull net elements.
        alpha : float
            Estimated Holder exponent.
        best_delta : float or None
            Largest passing stability radius.
        """
        delta = "none" if best_delta is None else f"{best_delta:g}"
        self._write_log("SYMBOLS", f"Job {job_id} | Net: {net_size} | Alpha: {alpha:.3f} | Best delta: {delta}")

    def log_probe(self, seeds: int, fraction_increasing: float, variance: float) -> None:
        """Log the OU non-existence probe summary.

        Parameters
        ----------
        seeds : int
            Number of probed seeds.
        fraction_increasing : float
            Share of seeds with strictly increasing suprema.
        variance : float
            Sample variance of ``z``.
        """
        self._write_log(
            "PROBE", f"Seeds: {seeds} | Increasing: {fraction_increasing:.3f} | Variance: {variance:.4f}"
        )

    def log_error(self, error_type: str, description: str) -> None:
        """Log an error or warning.

        Parameters
        ----------
        error_type : str
            Label describing the error classification.
        description : str
            Human-readable explanation of the issue.
        """
        self._write_log("ERROR", f"Type: {error_type} | Details: {description}")

    def _write_log(self, event_type: str, details: str) -> None:
        """Write a log entry to the file.

        Parameters
        ----------
        event_type : str
            Category label for the log entry.
        details : str
            Formatted message body to persist.
        """
        timestamp = time.strftime("%H:%M:%S")
        log_entry = f"[{timestamp}] {event_type}: {details}"

        with self._lock:
            line_no = self._line_number
            self._line_number += 1
            self._recent_events.append((line_no, log_entry))

            if self.log_file:
                self.log_file.write(f"{log_entry}\n")
                self.log_file.flush()

    def get_recent_events(self, limit: int = 20) -> List[str]:
        """Return the latest entries with line numbers for console display.

        Parameters
        ----------
        limit : int
            Maximum number of entries to return.

        Returns
        -------
        List[str]
            Up to ``limit`` most recent log lines with prefixed line numbers.
        """
        with self._lock:
            selected = list(self._recent_events)[-limit:]
        return [f"{line_no:05d} {entry}" for line_no, entry in selected]

    def close(self) -> None:
        """Close the log file."""
        with self._lock:
            if self.log_file:
                self.log_file.close()
                self.log_file = None
