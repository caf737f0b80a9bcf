import json

import numpy as np
import pytest
from click.testing import CliRunner

from evotree.cli import main

from conftest import TEN_RETURNS


@pytest.fixture
def runner():
    return CliRunner()


def _write_scenarios(path):
    path.write_text("".join(f"{r}\n" for r in TEN_RETURNS))
    return path


def _generate_args(scenario_file, tmp_path, **overrides):
    options = {
        "--scenarios": str(scenario_file),
        "--structure": "2",
        "--initial-population": "30",
        "--population": "15",
        "--iterations": "10",
        "--seed": "3",
        "--tree-out": str(tmp_path / "tree.json"),
        "--log-out": str(tmp_path / "log.csv"),
    }
    options.update(overrides)
    args = ["generate"]
    for key, value in options.items():
        args.extend([key, value])
    return args


class TestSimulate:
    def test_writes_csv_and_is_reproducible(self, runner, tmp_path):
        out = tmp_path / "sim.csv"
        args = ["simulate", "--s", "200", "--horizon", "2", "--mu", "0",
                "--omega", "1e-5", "--alpha", "0.08", "--beta", "0.90",
                "--seed", "7", "--out", str(out)]
        result = runner.invoke(main, args)
        assert result.exit_code == 0, result.output
        assert "s=200 horizon=2 seed=7" in result.output
        rows = out.read_text().splitlines()
        assert len(rows) == 200 and all(len(r.split(",")) == 2 for r in rows)
        first = out.read_bytes()
        assert runner.invoke(main, args).exit_code == 0
        assert out.read_bytes() == first

    def test_nonstationary_exits_2(self, runner, tmp_path):
        result = runner.invoke(main, [
            "simulate", "--s", "5", "--horizon", "1", "--omega", "1e-4",
            "--alpha", "0.6", "--beta", "0.5", "--out", str(tmp_path / "x.csv"),
        ])
        assert result.exit_code == 2

    def test_missing_required_flag_exits_2(self, runner):
        result = runner.invoke(main, ["simulate", "--s", "5"])
        assert result.exit_code == 2


class TestGenerate:
    def test_writes_tree_and_log(self, runner, tmp_path):
        scenario_file = _write_scenarios(tmp_path / "paths.csv")
        result = runner.invoke(main, _generate_args(scenario_file, tmp_path))
        assert result.exit_code == 0, result.output
        assert "best objective:" in result.output
        assert "wall time:" in result.output
        tree = json.loads((tmp_path / "tree.json").read_text())
        assert tree["structure"] == [2] and len(tree["nodes"]) == 3
        log_lines = (tmp_path / "log.csv").read_text().splitlines()
        assert log_lines[0] == "iter,best,mean,invalid_discarded"
        assert len(log_lines) == 12

    def test_nonmonotone_structure_exits_2(self, runner, tmp_path):
        scenario_file = _write_scenarios(tmp_path / "paths.csv")
        result = runner.invoke(
            main, _generate_args(scenario_file, tmp_path, **{"--structure": "5,3"})
        )
        assert result.exit_code == 2

    def test_missing_scenario_file_exits_2(self, runner, tmp_path):
        result = runner.invoke(
            main, _generate_args(tmp_path / "absent.csv", tmp_path)
        )
        assert result.exit_code == 2

    def test_retry_budget_exhaustion_exits_3(self, runner, tmp_path):
        rng = np.random.default_rng(0)
        scenario_file = tmp_path / "twelve.csv"
        scenario_file.write_text(
            "".join(f"{v}\n" for v in rng.normal(0, 0.02, 12))
        )
        result = runner.invoke(main, _generate_args(
            scenario_file, tmp_path,
            **{"--structure": "12", "--initial-population": "20",
               "--population": "10", "--iterations": "5",
               "--max-invalid-retries": "3"},
        ))
        assert result.exit_code == 3

    def test_reproducible_outputs(self, runner, tmp_path):
        scenario_file = _write_scenarios(tmp_path / "paths.csv")
        runner.invoke(main, _generate_args(scenario_file, tmp_path))
        first = (tmp_path / "tree.json").read_bytes()
        runner.invoke(main, _generate_args(scenario_file, tmp_path))
        assert (tmp_path / "tree.json").read_bytes() == first


class TestEmitLp:
    def _make_tree(self, runner, tmp_path):
        scenario_file = _write_scenarios(tmp_path / "paths.csv")
        assert runner.invoke(main, _generate_args(scenario_file, tmp_path)).exit_code == 0
        return tmp_path / "tree.json"

    def test_counts_and_file_output(self, runner, tmp_path):
        tree_file = self._make_tree(runner, tmp_path)
        out = tmp_path / "model.lp"
        result = runner.invoke(main, [
            "emit-lp", "--tree", str(tree_file), "--kappa", "0.5",
            "--budget", "100", "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        assert "variables=10 constraints=9" in result.output
        assert out.read_text().startswith("\\")

    def test_stdout_document(self, runner, tmp_path):
        tree_file = self._make_tree(runner, tmp_path)
        result = runner.invoke(main, [
            "emit-lp", "--tree", str(tree_file), "--kappa", "0", "--budget", "100",
        ])
        assert result.exit_code == 0
        assert "Maximize" in result.stdout and "End" in result.stdout

    def test_missing_tree_exits_2(self, runner, tmp_path):
        result = runner.invoke(main, [
            "emit-lp", "--tree", str(tmp_path / "none.json"),
            "--kappa", "0", "--budget", "100",
        ])
        assert result.exit_code == 2

    def test_corrupt_tree_exits_2(self, runner, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        result = runner.invoke(main, [
            "emit-lp", "--tree", str(bad), "--kappa", "0", "--budget", "100",
        ])
        assert result.exit_code == 2


class TestExperiment:
    def test_single_repetition_collapses_columns(self, runner, tmp_path):
        scenario_file = _write_scenarios(tmp_path / "paths.csv")
        out_dir = tmp_path / "exp"
        result = runner.invoke(main, [
            "experiment", "--scenarios", str(scenario_file), "--structure", "2",
            "--initial-population", "20", "--population", "10",
            "--iterations", "5", "--seed", "2", "--repetitions", "1",
            "--ops", "20,10,10,20,10,10,20,10,30",
            "--out-dir", str(out_dir),
        ])
        assert result.exit_code == 0, result.output
        (csv_file,) = sorted(out_dir.glob("*.csv"))
        lines = csv_file.read_text().splitlines()
        assert lines[0] == (
            "iter,best_mean,best_min,best_max,popmean_mean,popmean_min,popmean_max"
        )
        for line in lines[1:]:
            _, b_mean, b_min, b_max, p_mean, p_min, p_max = line.split(",")
            assert b_mean == b_min == b_max
            assert p_mean == p_min == p_max

    def test_two_mixes_two_files(self, runner, tmp_path):
        scenario_file = _write_scenarios(tmp_path / "paths.csv")
        out_dir = tmp_path / "exp"
        result = runner.invoke(main, [
            "experiment", "--scenarios", str(scenario_file), "--structure", "2",
            "--initial-population", "20", "--population", "10",
            "--iterations", "5", "--seed", "2", "--repetitions", "2",
            "--ops", "20,10,10,20,10,10,20,10,30",
            "--ops", "50,0,0,0,0,0,50,10,30",
            "--out-dir", str(out_dir),
        ])
        assert result.exit_code == 0, result.output
        names = sorted(p.name for p in out_dir.glob("*.csv"))
        assert names == [
            "convergence_20-10-10-20-10-10-20-10-30.csv",
            "convergence_50-0-0-0-0-0-50-10-30.csv",
        ]

    def test_spec_file_overrides_flags(self, runner, tmp_path):
        scenario_file = _write_scenarios(tmp_path / "paths.csv")
        spec_file = tmp_path / "spec.json"
        spec_file.write_text(json.dumps({
            "repetitions": 1,
            "iterations": 4,
            "operator_mixes": [[30, 0, 0, 0, 30, 30, 10, 10, 30]],
        }))
        out_dir = tmp_path / "exp"
        result = runner.invoke(main, [
            "experiment", "--scenarios", str(scenario_file), "--structure", "2",
            "--initial-population", "20", "--population", "10",
            "--iterations", "99", "--seed", "2", "--spec", str(spec_file),
            "--out-dir", str(out_dir),
        ])
        assert result.exit_code == 0, result.output
        (csv_file,) = sorted(out_dir.glob("*.csv"))
        assert csv_file.name == "convergence_30-0-0-0-30-30-10-10-30.csv"
        assert len(csv_file.read_text().splitlines()) == 6  # header + iters 0..4

    def test_no_mix_exits_2(self, runner, tmp_path):
        scenario_file = _write_scenarios(tmp_path / "paths.csv")
        result = runner.invoke(main, [
            "experiment", "--scenarios", str(scenario_file), "--structure", "2",
        ])
        assert result.exit_code == 2
