"""CLI commands: exit codes, emitted files, determinism."""

from __future__ import annotations

import csv
import json
import shutil
from pathlib import Path

import pytest

from pipecast.cli import main
from conftest import FIXTURES

SINGLE = str(FIXTURES / "scenario_single_node.json")
SWARM = str(FIXTURES / "scenario_swarm.json")


def _read_csv(path: Path) -> list[dict]:
    with path.open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _scenario_with(tmp_path: Path, **overrides) -> str:
    """Copy the single-node scenario, overriding referenced files."""
    for name in ("pipeline.json", "batch.json", "cluster_single_node.json",
                 "spark_config_20-2-4-16.json", "spark_config_10-8-1-6.json",
                 "perf_model.json", "pricing.json",
                 "observations_preprocessing_scaling.csv"):
        shutil.copy(FIXTURES / name, tmp_path / name)
    scenario = json.loads((FIXTURES / "scenario_single_node.json").read_text())
    scenario.update(overrides)
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(scenario))
    return str(path)


class TestValidate:
    def test_reference_scenario_is_valid(self, capsys):
        assert main(["validate", "--scenario", SINGLE]) == 0
        assert "valid" in capsys.readouterr().out

    def test_swarm_scenario_is_valid(self):
        assert main(["validate", "--scenario", SWARM]) == 0

    def test_ram_warning_goes_to_stderr(self, tmp_path, capsys):
        scenario = _scenario_with(tmp_path, spark_config="spark_config_10-8-1-6.json")
        assert main(["validate", "--scenario", scenario]) == 0
        captured = capsys.readouterr()
        assert "ram-oversubscribed" in captured.err
        assert "ram-oversubscribed" not in captured.out

    def test_core_violation_exits_one(self, tmp_path, capsys):
        (tmp_path / "too_big.json").write_text(json.dumps(
            {"driver_mem_gb": 1, "num_executors": 3, "cores_per_executor": 4,
             "executor_mem_gb": 1}))
        scenario = _scenario_with(tmp_path, spark_config="too_big.json")
        assert main(["validate", "--scenario", scenario]) == 1
        assert "executor-cores-exceed-cluster" in capsys.readouterr().out

    def test_unparseable_config_exits_two(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["validate", "--scenario", str(bad)]) == 2
        err = capsys.readouterr().err
        assert "bad.json" in err
        assert "line" in err

    def test_missing_scenario_exits_two(self, tmp_path):
        assert main(["validate", "--scenario", str(tmp_path / "ghost.json")]) == 2


class TestSimulate:
    def test_emits_data_files(self, tmp_path):
        out = tmp_path / "out"
        assert main(["simulate", "--scenario", SINGLE, "--out", str(out)]) == 0
        for name in ("timeline.csv", "stage_breakdown.csv", "phase_shares.csv",
                     "cost_report.csv"):
            assert (out / name).exists()

    def test_breakdown_rows_per_sample_and_stage(self, tmp_path):
        out = tmp_path / "out"
        main(["simulate", "--scenario", SINGLE, "--out", str(out)])
        rows = _read_csv(out / "stage_breakdown.csv")
        preprocessing = [r for r in rows if r["stage"] in ("BWA/MD", "BQSRP", "HC")]
        assert len(preprocessing) == 6 * 3
        batch_rows = [r for r in rows if r["sample"] == "*"]
        assert [r["stage"] for r in batch_rows] == ["VariantDiscovery", "CallsetRefinement"]

    def test_phase_shares_sum_to_hundred(self, tmp_path):
        out = tmp_path / "out"
        main(["simulate", "--scenario", SINGLE, "--out", str(out)])
        rows = _read_csv(out / "phase_shares.csv")
        total = sum(float(r["share_pct"]) for r in rows)
        assert total == pytest.approx(100.0, abs=0.1)
        shares = {r["phase"]: float(r["share_pct"]) for r in rows}
        assert shares["HC"] == pytest.approx(39.0, abs=3.0)

    def test_json_format(self, tmp_path):
        out = tmp_path / "out"
        assert main(["simulate", "--scenario", SINGLE, "--out", str(out),
                     "--format", "json"]) == 0
        payload = json.loads((out / "phase_shares.json").read_text())
        assert {row["phase"] for row in payload} >= {"BWA/MD", "BQSRP", "HC", "residual"}

    def test_swarm_needs_interpolation(self, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["simulate", "--scenario", SWARM, "--out", str(out)]) == 1
        assert "3 nodes" in capsys.readouterr().err
        assert main(["simulate", "--scenario", SWARM, "--out", str(out),
                     "--interpolate-efficiency"]) == 0


class TestPlan:
    def test_writes_plan_and_prints_table(self, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["plan", "--scenario", SWARM, "--out", str(out)]) == 0
        captured = capsys.readouterr().out
        assert "DataTransfer" in captured
        payload = json.loads((out / "plan.json").read_text())
        assert payload["cluster"] == "swarm-3"
        assert payload["config"] == "20/2/4/16"
        kinds = {step["kind"] for step in payload["steps"]}
        assert kinds == {"StageRun", "DataTransfer"}


class TestCalibrate:
    def test_fits_and_writes_model(self, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["calibrate", "--scenario", SINGLE, "--out", str(out)]) == 0
        captured = capsys.readouterr().out
        assert "core_cap: 16" in captured
        model = json.loads((out / "fitted_model.json").read_text())
        assert set(model["scaleout_efficiency"]) == {"1", "2", "4"}
        residuals = _read_csv(out / "calibration_residuals.csv")
        assert len(residuals) == 4
        for row in residuals:
            assert abs(float(row["relative_error"])) <= 0.05

    def test_round_trip_predictions_identical(self, tmp_path):
        from pipecast import calibrate, predict_observation
        from pipecast.config import load_observations, load_perf_model, load_scenario

        out = tmp_path / "out"
        main(["calibrate", "--scenario", SINGLE, "--out", str(out)])
        scenario = load_scenario(Path(SINGLE))
        observations = load_observations(scenario.observations_path)
        fit = calibrate(observations, scenario.pipeline, scenario.perf_model)
        reloaded = load_perf_model(out / "fitted_model.json")
        assert reloaded == fit.model
        for obs in observations:
            assert predict_observation(obs, scenario.pipeline, reloaded) == \
                predict_observation(obs, scenario.pipeline, fit.model)

    def test_missing_observations_exits_two(self, tmp_path):
        scenario = json.loads((FIXTURES / "scenario_single_node.json").read_text())
        del scenario["observations"]
        for name in ("pipeline.json", "batch.json", "cluster_single_node.json",
                     "spark_config_20-2-4-16.json", "perf_model.json", "pricing.json"):
            shutil.copy(FIXTURES / name, tmp_path / name)
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps(scenario))
        assert main(["calibrate", "--scenario", str(path)]) == 2


class TestSweep:
    @pytest.fixture
    def fitted_model(self, tmp_path_factory) -> str:
        out = tmp_path_factory.mktemp("fit")
        main(["calibrate", "--scenario", SINGLE, "--out", str(out)])
        return str(out / "fitted_model.json")

    def test_cores_sweep_reproduces_scale_up(self, tmp_path, fitted_model):
        out = tmp_path / "out"
        assert main(["sweep", "--scenario", SINGLE, "--axis", "cores",
                     "--values", "8,16,32", "--stages", "BWA/MD+BQSRP",
                     "--sample", "PFC-0028", "--model", fitted_model,
                     "--out", str(out)]) == 0
        rows = _read_csv(out / "sweep.csv")
        assert [r["stages"] for r in rows] == ["BWA/MD+BQSRP"] * 3
        predicted = [float(r["predicted_min"]) for r in rows]
        assert predicted[0] >= predicted[1]
        assert predicted[1] == pytest.approx(predicted[2])  # flat beyond the cap
        assert predicted[1] == pytest.approx(165.0, rel=0.05)

    def test_nodes_sweep_reproduces_scale_out(self, tmp_path, fitted_model):
        out = tmp_path / "out"
        assert main(["sweep", "--scenario", SINGLE, "--axis", "nodes",
                     "--values", "2,4", "--stages", "BWA/MD+BQSRP",
                     "--sample", "PFC-0028", "--model", fitted_model,
                     "--out", str(out)]) == 0
        rows = _read_csv(out / "sweep.csv")
        assert float(rows[0]["predicted_min"]) == pytest.approx(229.0, rel=0.05)
        assert float(rows[1]["predicted_min"]) == pytest.approx(168.0, rel=0.05)

    def test_single_node_sweep_matches_simulate(self, tmp_path):
        out = tmp_path / "out"
        main(["simulate", "--scenario", SINGLE, "--out", str(out)])
        timeline = _read_csv(out / "timeline.csv")
        makespan = max(float(r["end_min"]) for r in timeline)
        main(["sweep", "--scenario", SINGLE, "--axis", "nodes", "--values", "1",
              "--out", str(out)])
        rows = _read_csv(out / "sweep.csv")
        assert float(rows[0]["predicted_min"]) == pytest.approx(makespan, rel=1e-12)

    def test_config_sweep_is_flat(self, tmp_path):
        out = tmp_path / "out"
        assert main(["sweep", "--scenario", SINGLE, "--axis", "config",
                     "--values", "20/2/4/16,20/4/2/8,10/4/2/8,10/8/1/6",
                     "--out", str(out)]) == 0
        rows = _read_csv(out / "sweep.csv")
        values = {float(r["predicted_min"]) for r in rows}
        assert len(values) == 1

    def test_uncalibrated_node_count_exits_one(self, tmp_path, fitted_model, capsys):
        out = tmp_path / "out"
        assert main(["sweep", "--scenario", SINGLE, "--axis", "nodes", "--values", "3",
                     "--stages", "BWA/MD+BQSRP", "--model", fitted_model,
                     "--out", str(out)]) == 1
        assert "3 nodes" in capsys.readouterr().err

    def test_unknown_stage_exits_one(self, tmp_path):
        assert main(["sweep", "--scenario", SINGLE, "--axis", "cores", "--values", "8",
                     "--stages", "ghost", "--out", str(tmp_path / "out")]) == 1


class TestCompare:
    def test_reports_costs_and_ratios(self, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["compare", "--scenario", SINGLE, "--out", str(out),
                     "--format", "json"]) == 0
        payload = json.loads((out / "cost_report.json").read_text())
        assert payload["service_cost"] == pytest.approx(18.61, abs=0.01)
        assert payload["cluster_cost"] == pytest.approx(28.0, rel=0.10)
        captured = capsys.readouterr().out
        assert "cost ratio" in captured


class TestDeterminism:
    @pytest.mark.parametrize("argv", [
        ["simulate", "--scenario", SINGLE],
        ["calibrate", "--scenario", SINGLE],
        ["sweep", "--scenario", SINGLE, "--axis", "cores", "--values", "8,16,32",
         "--stages", "BWA/MD+BQSRP", "--sample", "PFC-0028"],
        ["compare", "--scenario", SINGLE],
    ])
    def test_byte_identical_outputs(self, tmp_path, argv):
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        assert main(argv + ["--out", str(out_a)]) == 0
        assert main(argv + ["--out", str(out_b)]) == 0
        files_a = sorted(p.name for p in out_a.iterdir())
        files_b = sorted(p.name for p in out_b.iterdir())
        assert files_a == files_b and files_a
        for name in files_a:
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()
