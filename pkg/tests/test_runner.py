import csv
import json

import pytest

import pregsim
from pregsim.cli import main, parse_scenarios
from pregsim.config import ConfigurationError
from pregsim.runner import RESULT_FIELDS, run_matrix, write_outputs


@pytest.fixture(scope="module")
def small_result(sched):
    run = pregsim.RunConfig(n_pregnancies=4_000, scenario_filter=[1, 22],
                            threads=2)
    return run_matrix(run, sched)


class TestRunMatrix:
    def test_seven_rows_per_scenario(self, small_result):
        assert len(small_result.scenarios) == 2
        for s in small_result.scenarios:
            assert s.error is None
            assert len(s.rows) == 7
            kinds = [r["estimator"] for r in s.rows]
            assert kinds[:3] == ["deliveries", "outcomes", "pregnancies"]
            assert all(k.startswith("bound_") for k in kinds[3:])
            for r in s.rows:
                assert set(r) == set(RESULT_FIELDS)

    def test_truth_shared_within_treatment_effect(self, sched):
        run = pregsim.RunConfig(n_pregnancies=4_000,
                                scenario_filter=[19, 20, 24])
        res = run_matrix(run, sched)
        truths = {s.rows[0]["true_rd"] for s in res.scenarios}
        assert len(truths) == 1

    def test_thread_count_invariance(self, sched, small_result):
        run = pregsim.RunConfig(n_pregnancies=4_000, scenario_filter=[1, 22],
                                threads=1)
        serial = run_matrix(run, sched)
        assert list(serial.result_rows()) == list(small_result.result_rows())

    def test_single_scenario_filter(self, sched):
        run = pregsim.RunConfig(n_pregnancies=1_000, scenario_filter=[36])
        res = run_matrix(run, sched)
        assert [s.scenario.id for s in res.scenarios] == [36]


class TestOutputs:
    def test_csv_outputs(self, tmp_path, sched, small_result):
        small_result.config.output_dir = str(tmp_path / "out")
        paths = write_outputs(small_result, sched)
        names = {p.name for p in paths}
        assert {"results.csv", "study_samples.csv", "analytic_samples.csv",
                "manifest.json"} <= names
        with open(tmp_path / "out" / "results.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 14
        float(rows[0]["rr"])  # parses as a number

        manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
        assert manifest["n_pregnancies"] == 4_000
        assert manifest["scenario_ids"] == [1, 22]
        assert len(manifest["config_sha256"]) == 64
        assert manifest["failed_scenarios"] == {}

    def test_json_format(self, tmp_path, sched):
        run = pregsim.RunConfig(n_pregnancies=1_000, scenario_filter=[4],
                                output_dir=str(tmp_path / "j"),
                                out_format="json")
        res = run_matrix(run, sched)
        write_outputs(res, sched)
        data = json.loads((tmp_path / "j" / "results.json").read_text())
        assert len(data) == 7


class TestCli:
    def test_parse_scenarios(self):
        assert parse_scenarios("1,4,7-9") == [1, 4, 7, 8, 9]
        assert parse_scenarios(None) is None
        with pytest.raises(ConfigurationError):
            parse_scenarios(" , ")

    def test_end_to_end(self, tmp_path, capsys):
        code = main(["--n", "2000", "--scenarios", "22", "--out",
                     str(tmp_path / "cli"), "--threads", "2"])
        assert code == 0
        assert (tmp_path / "cli" / "results.csv").exists()

    def test_verify_small_run_skips_mc_checks(self, tmp_path, capsys):
        code = main(["--n", "3000", "--scenarios", "1-36", "--out",
                     str(tmp_path / "v"), "--verify", "--threads", "4"])
        out = capsys.readouterr().out
        assert code == 0
        assert "[SKIP] check 1" in out
        assert "[PASS] check 6" in out
        assert "[PASS] check 8" in out

    def test_config_error_exit_code(self, tmp_path, capsys):
        assert main(["--config", str(tmp_path / "missing.yaml")]) == 1
        assert main(["--n", "0"]) == 1
        bad = tmp_path / "bad.yaml"
        bad.write_text("schema_version: 1\n")
        assert main(["--config", str(bad)]) == 1

    def test_dump_cohort(self, tmp_path):
        code = main(["--n", "500", "--scenarios", "1", "--out",
                     str(tmp_path / "d"), "--dump-cohort"])
        assert code == 0
        with open(tmp_path / "d" / "cohort_dump.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 500
