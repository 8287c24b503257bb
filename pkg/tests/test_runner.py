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
"""End-to-end tests for the experiment runner and the OU probe."""

import dataclasses
import json
from pathlib import Path

import pytest

from nrdslab.engine.config import IntegratorConfig, LimitConfig, symmetric_shifts
from nrdslab.engine.errors import DomainError, ToleranceError
from nrdslab.engine.runner import enforce_tolerance, mua_nonexistence_probe, path_window, run_experiment
from nrdslab.models.experiment import ExperimentConfig, JobResult, JobSpec, ResultRecord
from nrdslab.utils.debug import RunDebugger
from nrdslab.utils.persistence import load_boxset, parse_config, read_csv

SMALL_RUN = """
[problem]
id = {problem}

[driver]
angles = 0.7
dt = 0.05

[integrator]
step = 0.05

[limits]
s_max = 2
s_count = 5
t_burn = 10
t_tail = 12
stride = 0.5
density = 8
library = 0.5, 1.5

[boxes]
lo = {lo}
hi = {hi}
cells = {cells}

[output]
directory = {directory}
tolerance = 0.05
probe_seeds = 2
probe_windows = 10, 20
"""


def _small_config(
    directory: Path, problem: str = "sin_example", lo: float = -2.0, hi: float = 2.0, extra: str = ""
) -> ExperimentConfig:
    """Return a fast configuration writing into ``directory``.

    Parameters
    ----------
    directory : Path
        Output directory.
    problem : str, default="sin_example"
        Registry key.
    lo : float, default=-2.0
        Lower box bound.
    hi : float, default=2.0
        Upper box bound.
    extra : str, default=""
        INI text appended to the template.

    Returns
    -------
    ExperimentConfig
        Parsed configuration.
    """
    cells = int(round((hi - lo) * 100))
    text = SMALL_RUN.format(problem=problem, lo=lo, hi=hi, cells=cells, directory=directory)
    return parse_config(text + extra)


class TestRunExperiment:
    """Runs of the sine benchmark on the circle driver."""

    def test_artefacts_and_distance(self, tmp_path) -> None:
        """A run writes its echo, summary and per-job files and meets the tolerance."""
        record = run_experiment(_small_config(tmp_path))
        assert len(record.jobs) == 1
        result = record.jobs[0]
        assert result.error is None
        assert result.distance is not None and result.distance <= 0.05
        assert result.forward_contained
        for name in ("config.ini", "summary.json", "job000_estimate.box", "job000_forward.box", "job000_rate.csv"):
            assert (tmp_path / name).exists(), name
        assert not (tmp_path / "job000_path.txt").exists()
        assert load_boxset(tmp_path / "job000_estimate.box").count == result.estimate.count
        assert read_csv(tmp_path / "job000_distance.csv")[0] == ["distance", "coverage_gap"]
        assert read_csv(tmp_path / "job000_rate.csv")[0] == ["t", "dist"]
        assert list((tmp_path / "debug_logs").glob("run_debug_*.txt"))
        enforce_tolerance(record)

    def test_replay_is_bit_exact(self, tmp_path) -> None:
        """Two runs of the same configuration write identical sets and tables."""
        run_experiment(_small_config(tmp_path / "a"))
        run_experiment(_small_config(tmp_path / "b"))
        for name in ("job000_estimate.box", "job000_forward.box", "job000_rate.csv", "job000_library.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name

    def test_external_debugger(self, tmp_path) -> None:
        """A supplied debugger receives the job events and stays open."""
        debugger = RunDebugger(str(tmp_path / "logs"))
        run_experiment(_small_config(tmp_path / "out"), debugger=debugger)
        events = debugger.get_recent_events()
        assert any("JOB_START" in event for event in events)
        assert any("JOB_END" in event for event in events)
        assert debugger.log_file is not None
        debugger.close()

    def test_wiener_run_with_probe(self, tmp_path) -> None:
        """The OU benchmark stores its path and the probe tables."""
        record = run_experiment(_small_config(tmp_path, problem="ou_counterexample", lo=-5.0, hi=5.0))
        assert record.jobs[0].error is None
        assert record.jobs[0].distance is None
        assert (tmp_path / "job000_path.txt").exists()
        assert record.probe is not None
        assert len(record.probe.rows) == 2
        assert len(read_csv(tmp_path / "probe.csv")) == 3
        assert (tmp_path / "probe_summary.csv").exists()

    def test_symbol_stage_artefacts(self, tmp_path) -> None:
        """The symbol stage writes its hull, Holder, skew-product and stability files."""
        extra = "\n[symbols]\nenabled = true\n"
        cfg = dataclasses.replace(_small_config(tmp_path, "ou_counterexample", -5.0, 5.0, extra), trajectory=True)
        record = run_experiment(cfg)
        result = record.jobs[0]
        assert result.error is None
        assert result.hull is not None and result.hull.shifts[0] == 0.0
        assert result.holder is not None and result.projection is not None
        assert result.relation_deviation is not None and result.relation_deviation <= 1e-6
        for suffix in ("trajectory.csv", "hull.txt", "holder.csv", "projection.box", "skew.csv", "stability.csv"):
            assert (tmp_path / f"job000_{suffix}").exists(), suffix
        assert (tmp_path / "job000_hull.txt").read_text(encoding="utf-8").startswith("0.05 10\n")
        assert read_csv(tmp_path / "job000_trajectory.csv")[0] == ["t", "u_1"]
        assert read_csv(tmp_path / "job000_stability.csv")[0] == ["delta", "pass", "escape_s", "escape_t"]
        assert read_csv(tmp_path / "job000_skew.csv")[0] == ["projection_gap", "relation_deviation"]
        payload = json.loads((tmp_path / "summary.json").read_text(encoding="utf-8"))
        assert "best_delta" in payload["jobs"][0]
        assert payload["jobs"][0]["hull_size"] == len(result.hull.net)


class TestPathWindow:
    """Sizing of the stored Brownian window."""

    def test_window_covers_shifts_and_truncation(self) -> None:
        """The window reaches the OU truncation behind the earliest shift and the horizon after the latest."""
        limits = LimitConfig(s_grid=symmetric_shifts(2.0, 5), t_burn=10.0, t_tail=12.0, stride=0.5)
        cfg = ExperimentConfig(
            problem_id="ou_counterexample",
            dt=0.05,
            integrator=IntegratorConfig(step=0.05),
            limits=limits,
        )
        t_min, t_max = path_window(cfg, 1.0)
        assert t_min == pytest.approx(-27.0)
        assert t_max == pytest.approx(30.0)
        assert t_min < 0.0 < t_max


class TestTolerance:
    """Acceptance of reference distances."""

    def test_enforce_tolerance(self) -> None:
        """Jobs above the tolerance are named in the error."""
        cfg = ExperimentConfig(problem_id="sin_example", tolerance=0.1)
        jobs = [
            JobResult(job=JobSpec(0, 0, 0.0, 0.0), distance=0.01),
            JobResult(job=JobSpec(1, 0, 0.0, 0.0), distance=1.0),
        ]
        record = ResultRecord(config=cfg, config_text="", config_hash="", jobs=jobs)
        with pytest.raises(ToleranceError, match="job001"):
            enforce_tolerance(record)
        record.jobs.pop()
        enforce_tolerance(record)


class TestOuProbe:
    """Windowed suprema of the OU process."""

    def test_table_and_statistics(self) -> None:
        """Suprema grow with the window and the expected fraction follows the window ratios."""
        probe = mua_nonexistence_probe([0, 1, 2], [10.0, 100.0], dt=0.05)
        assert probe.S_list == [10.0, 100.0]
        assert [row.seed for row in probe.rows] == [0, 1, 2]
        assert all(row.suprema[1] >= row.suprema[0] > 0.0 for row in probe.rows)
        assert probe.expected_fraction == pytest.approx(0.9)
        assert probe.fraction_increasing in (0.0, 1 / 3, 2 / 3, 1.0)
        assert probe.samples > 100
        assert probe.variance > 0.0
        assert 0.0 <= probe.ks_pvalue <= 1.0

    def test_invalid_inputs(self) -> None:
        """Empty seed lists and unordered windows are rejected."""
        with pytest.raises(DomainError):
            mua_nonexistence_probe([], [10.0])
        with pytest.raises(DomainError):
            mua_nonexistence_probe([0], [10.0, 5.0])
        with pytest.raises(DomainError):
            mua_nonexistence_probe([0], [0.0, 5.0])
