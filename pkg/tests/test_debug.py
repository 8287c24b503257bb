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
"""Tests for the run debugger log."""

from nrdslab.utils.debug import RunDebugger


class TestRunDebugger:
    """Session files and the in-memory event buffer."""

    def test_session_file(self, tmp_path) -> None:
        """A session file is created under the output directory with a banner."""
        debugger = RunDebugger(str(tmp_path / "logs"))
        debugger.log_job_start(0, "sin_example", 0, 0.0)
        debugger.close()
        text = debugger.log_path.read_text(encoding="utf-8")
        assert debugger.log_path.parent == tmp_path / "logs"
        assert debugger.log_path.name.startswith("run_debug_")
        assert text.startswith("=== Run Debug Session")
        assert "JOB_START: Job 0 | Problem: sin_example" in text

    def test_event_kinds(self, tmp_path) -> None:
        """Every logging method writes its own event label."""
        debugger = RunDebugger(str(tmp_path))
        debugger.log_job_start(1, "cubic_example", 4, 0.5)
        debugger.log_limit_report(1, 12, True, True)
        debugger.log_divergence(1, 0.75, "state left the guard")
        debugger.log_tolerance(1, 0.2, 0.05)
        debugger.log_conjugacy(1, 1e-3, 0.98)
        debugger.log_symbol_stage(1, 7, 0.46, None)
        debugger.log_probe(200, 0.1, 0.49)
        debugger.log_error("GridError", "off grid")
        debugger.log_job_end(1, 35.0, 0.01)
        debugger.close()
        text = debugger.log_path.read_text(encoding="utf-8")
        for label in ("DIVERGENCE", "TOLERANCE", "CONJUGACY", "SYMBOLS", "PROBE", "ERROR", "JOB_END"):
            assert f"] {label}: " in text
        assert "Escape: 0.750" in text
        assert "Order: 0.98" in text
        assert "Net: 7 | Alpha: 0.460 | Best delta: none" in text

    def test_recent_events_numbered(self, tmp_path) -> None:
        """Recent events carry increasing line numbers and respect the limit."""
        debugger = RunDebugger(str(tmp_path))
        for job_id in range(5):
            debugger.log_job_end(job_id, float(job_id))
        events = debugger.get_recent_events(limit=3)
        debugger.close()
        assert len(events) == 3
        numbers = [int(event.split()[0]) for event in events]
        assert numbers == sorted(numbers)
        assert "Job 4" in events[-1]

    def test_close_is_idempotent(self, tmp_path) -> None:
        """Closing twice leaves the debugger closed and logging still buffers events."""
        debugger = RunDebugger(str(tmp_path))
        debugger.close()
        debugger.close()
        assert debugger.log_file is None
        debugger.log_error("ConfigError", "late")
        assert "late" in debugger.get_recent_events()[-1]
