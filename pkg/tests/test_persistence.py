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
"""Tests for run artefact readers and writers."""

import json
from pathlib import Path

import numpy as np
import pytest

from nrdslab.engine.cocycle import TrajectorySegment
from nrdslab.engine.driver import wiener_sample
from nrdslab.engine.errors import ConfigError, DomainError
from nrdslab.engine.setvalued import BoxGrid, BoxSet
from nrdslab.engine.symbolspace import HullSample, StabilityReport, StabilityRow, constant_symbol, translate
from nrdslab.models.experiment import ExperimentConfig, JobResult, JobSpec, ResultRecord
from nrdslab.utils.persistence import (
    config_hash,
    config_text,
    dump_boxset,
    dump_hull,
    dump_path,
    load_boxset,
    load_experiment_config,
    load_hull,
    load_path,
    parse_config,
    read_csv,
    stability_to_csv,
    trajectory_to_csv,
    write_csv,
    write_summary,
)


class TestPathDump:
    """Brownian paths survive a dump bit for bit."""

    def test_round_trip(self, tmp_path) -> None:
        """Values, window and seed are restored exactly."""
        p = wiener_sample(3, -1.0, 2.0, 0.05)
        dump_path(p, tmp_path / "path.txt")
        restored = load_path(tmp_path / "path.txt")
        assert (restored.t_min, restored.t_max, restored.dt, restored.seed) == (p.t_min, p.t_max, p.dt, 3)
        assert np.array_equal(restored.values, p.values)

    def test_missing_file(self, tmp_path) -> None:
        """Loading a missing dump raises ``FileNotFoundError``."""
        with pytest.raises(FileNotFoundError):
            load_path(tmp_path / "absent.txt")


class TestBoxSetDump:
    """Box sets are stored as their grid and occupied cells."""

    def test_round_trip(self, tmp_path) -> None:
        """Grid and occupancy are restored."""
        grid = BoxGrid.cube(-1.0, 1.0, 8, 2)
        boxes = BoxSet.from_points(grid, np.array([[0.1, 0.1], [-0.9, 0.6], [0.95, -0.95]]))
        dump_boxset(boxes, tmp_path / "set.box")
        restored = load_boxset(tmp_path / "set.box")
        assert restored.grid == grid
        assert np.array_equal(restored.occupancy, boxes.occupancy)

    def test_header_line(self, tmp_path) -> None:
        """The first line is ``d n lo_1 hi_1 lo_2 hi_2``."""
        grid = BoxGrid.cube(-1.0, 1.0, 8, 2)
        dump_boxset(BoxSet.from_points(grid, np.array([[0.1, 0.1]])), tmp_path / "set.box")
        lines = (tmp_path / "set.box").read_text(encoding="utf-8").splitlines()
        assert lines[0] == "2 8 -1.0 1.0 -1.0 1.0"
        assert lines[1:] == ["4 4"]

    def test_mixed_cell_counts(self, tmp_path) -> None:
        """Axes with different cell counts list every count."""
        grid = BoxGrid(lo=(0.0, 0.0), hi=(1.0, 2.0), n=(4, 6))
        boxes = BoxSet.from_points(grid, np.array([[0.1, 1.9]]))
        dump_boxset(boxes, tmp_path / "mixed.box")
        assert (tmp_path / "mixed.box").read_text(encoding="utf-8").startswith("2 4,6 0.0 1.0 0.0 2.0\n")
        restored = load_boxset(tmp_path / "mixed.box")
        assert restored.grid == grid
        assert np.array_equal(restored.occupancy, boxes.occupancy)

    def test_empty_set(self, tmp_path) -> None:
        """An empty set has a header and no cells."""
        boxes = BoxSet.empty(BoxGrid.cube(0.0, 1.0, 4, 1))
        dump_boxset(boxes, tmp_path / "empty.box")
        assert (tmp_path / "empty.box").read_text(encoding="utf-8") == "1 4 0.0 1.0\n"
        assert load_boxset(tmp_path / "empty.box").is_empty()

    def test_malformed_files(self, tmp_path) -> None:
        """Bad headers and out-of-grid cells are rejected."""
        bad_header = tmp_path / "bad.box"
        bad_header.write_text("lo 0.0\nhi 1.0\nn 4\n", encoding="utf-8")
        with pytest.raises(DomainError):
            load_boxset(bad_header)
        short_header = tmp_path / "short.box"
        short_header.write_text("2 4 0.0 1.0\n", encoding="utf-8")
        with pytest.raises(DomainError):
            load_boxset(short_header)
        outside = tmp_path / "outside.box"
        outside.write_text("1 4 0.0 1.0\n7\n", encoding="utf-8")
        with pytest.raises(DomainError):
            load_boxset(outside)


class TestHullDump:
    """Hull nets are stored as a radius line and one sample block per element."""

    def _hull(self) -> HullSample:
        """Return a two-element net of constants.

        Returns
        -------
        HullSample
            Net with an orbit element and a closure point.
        """
        return HullSample(
            net=[translate(constant_symbol(0.0, 8.0, 0.5), 1.5), constant_symbol(1.0, 8.0, 0.5)],
            eps=0.1,
            levels=4,
            shifts=[1.5, None],
        )

    def test_round_trip(self, tmp_path) -> None:
        """Net elements, radius and shifts are restored."""
        hull = self._hull()
        dump_hull(hull, tmp_path / "hull.txt")
        restored = load_hull(tmp_path / "hull.txt")
        assert restored.eps == 0.1
        assert restored.levels == 4
        assert restored.shifts == [1.5, None]
        assert [float(sigma.values[0]) for sigma in restored.net] == [0.0, 1.0]
        assert restored.net[0].window() == hull.net[0].window()

    def test_block_layout(self, tmp_path) -> None:
        """The file starts with ``eps N`` and every block with its symbol header."""
        dump_hull(self._hull(), tmp_path / "hull.txt")
        lines = (tmp_path / "hull.txt").read_text(encoding="utf-8").splitlines()
        assert lines[0] == "0.1 4"
        assert lines[1] == "symbol 1.5 8.0 0.5 1.5 33"
        assert lines[35] == "symbol none 8.0 0.5 0.0 33"
        assert len(lines) == 1 + 2 * 34

    def test_truncated_block(self, tmp_path) -> None:
        """A block shorter than its declared count is rejected."""
        dump_hull(self._hull(), tmp_path / "hull.txt")
        lines = (tmp_path / "hull.txt").read_text(encoding="utf-8").splitlines()
        (tmp_path / "short.txt").write_text("\n".join(lines[:-3]) + "\n", encoding="utf-8")
        with pytest.raises(DomainError):
            load_hull(tmp_path / "short.txt")


class TestCsv:
    """Plot-ready tables."""

    def test_floats_written_with_repr(self, tmp_path) -> None:
        """Floats keep every digit and other values are written as text."""
        write_csv(tmp_path / "t.csv", ("a", "b"), [(0.1 + 0.2, 3), (1e-300, "x")])
        rows = read_csv(tmp_path / "t.csv")
        assert rows[0] == ["a", "b"]
        assert float(rows[1][0]) == 0.1 + 0.2
        assert rows[1][1] == "3"
        assert rows[2] == ["1e-300", "x"]

    def test_trajectory(self, tmp_path) -> None:
        """Trajectories become ``t, u_1, ..., u_d`` rows."""
        times = np.array([0.0, 0.5, 1.0])
        states = np.array([[1.0, 2.0], [0.5, 1.0], [0.25, 0.5]])
        trajectory_to_csv(TrajectorySegment(times, states), tmp_path / "traj.csv")
        rows = read_csv(tmp_path / "traj.csv")
        assert rows[0] == ["t", "u_1", "u_2"]
        assert [float(v) for v in rows[3]] == [1.0, 0.25, 0.5]

    def test_stability_report(self, tmp_path) -> None:
        """Stability reports become ``delta, pass, escape_s, escape_t`` rows."""
        report = StabilityReport(
            best_delta=0.05,
            rows=[StabilityRow(0.05, True), StabilityRow(0.1, False, -2.0, 3, 1.25)],
        )
        stability_to_csv(report, tmp_path / "stability.csv")
        rows = read_csv(tmp_path / "stability.csv")
        assert rows == [["delta", "pass", "escape_s", "escape_t"], ["0.05", "1", "", ""], ["0.1", "0", "-2.0", "1.25"]]


class TestConfigFiles:
    """INI echoes parse back to the same configuration."""

    def test_echo_is_stable(self) -> None:
        """Echo, parse and echo again give identical text and hash."""
        cfg = ExperimentConfig(
            problem_id="cubic_example",
            parameters={"a_variant": "constant", "gamma": "0.05"},
            driver_kind="wiener",
            seeds=(1, 2),
            taus=(0.0, 0.5),
            tolerance=0.2,
        )
        text = config_text(cfg)
        again = parse_config(text)
        assert again == cfg
        assert config_text(again) == text
        assert config_hash(config_text(again)) == config_hash(text)
        assert len(config_hash(text)) == 64

    def test_load_from_file(self, tmp_path) -> None:
        """Configuration files are read from disk."""
        path = tmp_path / "run.ini"
        path.write_text("[problem]\nid = sin_example\n\n[driver]\nangles = 0.25\n", encoding="utf-8")
        cfg = load_experiment_config(path)
        assert cfg.angles == (0.25,)

    def test_missing_and_malformed(self, tmp_path) -> None:
        """Missing files and broken INI syntax are configuration errors."""
        with pytest.raises(ConfigError):
            load_experiment_config(tmp_path / "absent.ini")
        with pytest.raises(ConfigError):
            parse_config("id = sin_example\n")

    def test_shipped_configs_parse(self) -> None:
        """Every config under data/configs is valid and names its own problem."""
        paths = sorted((Path(__file__).parent.parent / "data" / "configs").glob("*.ini"))
        assert paths
        ids = {load_experiment_config(path).problem_id for path in paths}
        assert ids == {"sin_example", "cubic_example", "coupled_example", "ou_counterexample", "stochastic_cubic"}


class TestSummary:
    """The JSON run summary."""

    def test_one_entry_per_job(self, tmp_path) -> None:
        """Each job reports its base point, distance and the config hash."""
        cfg = ExperimentConfig(problem_id="sin_example")
        jobs = [
            JobResult(job=JobSpec(0, 0, 0.0, 0.5), distance=0.003, coverage_gap=0.004, nested=True),
            JobResult(job=JobSpec(1, 0, 1.0, 0.5), error="blew up", error_kind="DivergenceError"),
        ]
        record = ResultRecord(config=cfg, config_text="", config_hash="abc", jobs=jobs, runtime_ms=12.0)
        write_summary(record, tmp_path / "summary.json")
        payload = json.loads((tmp_path / "summary.json").read_text(encoding="utf-8"))
        assert payload["problem"] == "sin_example"
        assert payload["tolerance"] == 1e-2
        assert [job["job"] for job in payload["jobs"]] == [0, 1]
        assert payload["jobs"][0]["distance"] == 0.003
        assert payload["jobs"][0]["config_hash"] == "abc"
        assert payload["jobs"][1]["error"] == "blew up"
        assert payload["jobs"][1]["distance"] is None
        assert payload["jobs"][0]["best_delta"] is None
