"""End-to-end tests of the command-line entry point."""

import io
import json
import sys

import numpy as np
import pandas as pd
import pytest

from dataset_io import parse_dataset, read_dataset
from main import EXIT_OK, EXIT_OUTPUT, EXIT_PARSE, EXIT_USAGE, EXIT_VALIDATION, main
from pipeline import rotation_error, translation_error
from se3_core import RigidTransform, quat_to_rotation


@pytest.fixture
def dataset_path(tmp_path):
    path = str(tmp_path / "sim.json")
    assert main(["simulate", "--seed", "7", "--samples", "12", "--output", path]) == EXIT_OK
    return path


def _pose(record) -> RigidTransform:
    return RigidTransform(quat_to_rotation(np.array(record["q"])), record["t"])


class TestCalibrate:

    def test_recovers_simulated_ground_truth(self, tmp_path, dataset_path):
        out = tmp_path / "result.json"
        assert main(["calibrate", dataset_path, "--method", "YKronT'", "--output", str(out)]) == EXIT_OK

        result = json.loads(out.read_text(encoding="utf-8"))
        _, y_truth = read_dataset(dataset_path)[0].ground_truth_transforms()
        y = _pose(result["y"])
        assert rotation_error(y.rotation, y_truth.rotation) < 1e-6
        assert translation_error(y.translation, y_truth.translation) < 1e-6
        assert result["input_digest"].startswith("sha256:")

    def test_alias_and_summary(self, dataset_path, capsys):
        assert main(["calibrate", dataset_path, "--method", "Dornaika"]) == EXIT_OK
        printed = capsys.readouterr().out
        assert "solver YQuatR*" in printed
        assert "self-check Y" in printed

    def test_unknown_method(self, dataset_path, capsys):
        assert main(["calibrate", dataset_path, "--method", "NoSuchSolver"]) == EXIT_USAGE
        assert "YQuatT'" in capsys.readouterr().err

    def test_too_few_samples(self, tmp_path):
        path = str(tmp_path / "two.json")
        assert main(["simulate", "--seed", "1", "--samples", "2", "--output", path]) == EXIT_OK
        assert main(["calibrate", path, "--method", "YQuatR*"]) == EXIT_VALIDATION

    def test_malformed_file(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text('{"version": 1, "samples": [', encoding="utf-8")
        assert main(["calibrate", str(path), "--method", "YQuatT'"]) == EXIT_PARSE
        assert "parse error" in capsys.readouterr().err

    def test_sliding_window(self, dataset_path, capsys):
        assert main(["calibrate", dataset_path, "--method", "YQuatT'", "--window", "8"]) == EXIT_OK
        printed = capsys.readouterr().out
        assert printed.count("window ") == 5

    def test_point_dataset(self, tmp_path):
        path = str(tmp_path / "points.json")
        assert main(["simulate", "--seed", "4", "--samples", "10", "--points", "--output", path]) == EXIT_OK
        assert main(["calibrate", path, "--method", "YKronT'"]) == EXIT_OK
        assert main(["calibrate", path, "--method", "YQuatT'"]) == EXIT_VALIDATION

    def test_binary_file_is_parse_error(self, tmp_path, capsys):
        path = tmp_path / "binary.json"
        path.write_bytes(b"\xff\xfe{}")
        assert main(["calibrate", str(path), "--method", "YQuatT'"]) == EXIT_PARSE
        assert "UTF-8" in capsys.readouterr().err

    def test_unwritable_output(self, tmp_path, dataset_path, capsys):
        target = str(tmp_path / "missing" / "result.json")
        assert main(["calibrate", dataset_path, "--method", "YQuatT'", "--output", target]) == EXIT_OUTPUT
        assert "output error" in capsys.readouterr().err

    def test_simulate_piped_into_calibrate(self, monkeypatch, capsys):
        assert main(["simulate", "--seed", "7"]) == EXIT_OK
        text = capsys.readouterr().out
        _, y_truth = parse_dataset(text).ground_truth_transforms()

        outputs = []
        for _ in range(2):
            monkeypatch.setattr(sys, "stdin", io.StringIO(text))
            assert main(["calibrate", "-", "--method", "YKronT'", "--output", "-"]) == EXIT_OK
            outputs.append(capsys.readouterr().out)

        assert outputs[0] == outputs[1]
        y = _pose(json.loads(outputs[0])["y"])
        assert rotation_error(y.rotation, y_truth.rotation) < 1e-6
        assert translation_error(y.translation, y_truth.translation) < 1e-6


class TestSimulate:

    def test_output_is_deterministic(self, tmp_path):
        first, second = tmp_path / "a.json", tmp_path / "b.json"
        for path in (first, second):
            assert main(["simulate", "--seed", "7", "--noise", "standard", "--output", str(path)]) == EXIT_OK
        assert first.read_bytes() == second.read_bytes()

    def test_zero_samples_is_usage_error(self):
        assert main(["simulate", "--samples", "0"]) == EXIT_USAGE

    def test_missing_subcommand(self):
        assert main([]) == EXIT_USAGE


class TestBenchmark:

    def _run(self, path):
        return main(["benchmark", "--experiment", "1", "--rounds", "1", "--solvers", "YQuatT',XKronR*",
                     "--max-samples", "5", "--out", str(path)])

    def test_convergence_table(self, tmp_path):
        path = tmp_path / "curve.csv"
        assert self._run(path) == EXIT_OK
        table = pd.read_csv(path)
        assert list(table.columns) == ["solver", "x_value", "metric", "mean", "stddev"]
        assert len(table) == 18
        assert set(table["x_value"]) == {3, 4, 5}

    def test_deterministic(self, tmp_path):
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        assert self._run(first) == EXIT_OK
        assert self._run(second) == EXIT_OK
        assert first.read_bytes() == second.read_bytes()

    def test_noise_sweep(self, tmp_path):
        path = tmp_path / "sweep.csv"
        assert main(["benchmark", "--experiment", "2", "--rounds", "1", "--steps", "3", "--max-samples", "10",
                     "--solvers", "YQuatT'", "--out", str(path)]) == EXIT_OK
        assert set(pd.read_csv(path)["x_value"]) == {0, 1, 2}

    def test_experiment_is_required(self):
        assert main(["benchmark"]) == EXIT_USAGE

    def test_unknown_solver(self, tmp_path):
        assert main(["benchmark", "--experiment", "1", "--solvers", "Nope", "--out",
                     str(tmp_path / "x.csv")]) == EXIT_USAGE

    def test_too_few_max_samples(self, tmp_path):
        assert main(["benchmark", "--experiment", "1", "--max-samples", "2", "--rounds", "1",
                     "--out", str(tmp_path / "x.csv")]) == EXIT_USAGE

    def test_unwritable_table(self, tmp_path):
        assert main(["benchmark", "--experiment", "1", "--rounds", "1", "--solvers", "YQuatT'",
                     "--max-samples", "4", "--out", str(tmp_path / "missing" / "x.csv")]) == EXIT_OUTPUT
