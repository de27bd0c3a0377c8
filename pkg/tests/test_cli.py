"""The command line interface, run in process through main(argv)."""

from __future__ import annotations

import json

import pytest

import soplan.cli as cli
from soplan import PlanningError, dump_source, induced_table, load_plan
from tests.conftest import make_five_user, make_cyclic_triple


@pytest.fixture
def five_user_file(tmp_path):
    path = tmp_path / "five.json"
    dump_source(make_five_user(), path)
    return str(path)


@pytest.fixture
def cyclic_file(tmp_path):
    path = tmp_path / "cyclic.json"
    dump_source(make_cyclic_triple(), path)
    return str(path)


class TestMinrate:
    def test_asymptotic(self, five_user_file, capsys):
        assert cli.main(["minrate", five_user_file]) == 0
        out = capsys.readouterr().out
        assert "min sum-rate: 13/2" in out
        assert "maximizing partition: {1,2,5} | {3} | {4}" in out
        assert "optimal rates: (1:9/2, 2:0, 3:1/2, 4:1/2, 5:1)" in out

    def test_non_asymptotic(self, five_user_file, capsys):
        assert cli.main(["minrate", five_user_file, "--model", "non-asymptotic"]) == 0
        out = capsys.readouterr().out
        assert "min sum-rate: 7" in out
        assert "maximizing partition" not in out

    def test_order_flag_changes_sweep_not_value(self, five_user_file, capsys):
        assert cli.main(["minrate", five_user_file, "--order", "5,4,3,2,1"]) == 0
        out = capsys.readouterr().out
        assert "users: {5,4,3,2,1}" in out
        assert "min sum-rate: 13/2" in out

    def test_unknown_order_label(self, five_user_file, capsys):
        assert cli.main(["minrate", five_user_file, "--order", "5,4,3,2,9"]) == 2
        assert "unknown user" in capsys.readouterr().err


class TestCompset:
    def test_exact_default(self, five_user_file, capsys):
        assert cli.main(["compset", five_user_file]) == 0
        out = capsys.readouterr().out
        assert "alpha: 13/2 (exact)" in out
        assert "complementary subset: {1,2}" in out
        assert "found at position: 2" in out
        assert "certified complementary" in out

    def test_lower_bound(self, five_user_file, capsys):
        assert cli.main(["compset", five_user_file, "--alpha", "lower-bound"]) == 0
        out = capsys.readouterr().out
        assert "alpha: 23/4 (lower_bound)" in out
        assert "complementary subset: {1,2}" in out

    def test_completion_reports_rates(self, cyclic_file, capsys):
        assert cli.main(["compset", cyclic_file]) == 0
        out = capsys.readouterr().out
        assert "no complementary subset found" in out
        assert "rates: (1:1/2, 2:1/2, 3:1/2)" in out


class TestEnumerate:
    def test_lists_subsets(self, five_user_file, capsys):
        assert cli.main(["enumerate", five_user_file, "--verify"]) == 0
        out = capsys.readouterr().out
        assert "complementary subsets: 4" in out
        for rendered in ("{1,2}", "{1,5}", "{1,2,5}", "{1,3,4,5}"):
            assert rendered in out

    def test_non_asymptotic_count(self, five_user_file, capsys):
        assert (
            cli.main(["enumerate", five_user_file, "--model", "non-asymptotic"]) == 0
        )
        assert "complementary subsets: 18" in capsys.readouterr().out


class TestPlan:
    def test_plan_artifact_and_summary(self, five_user_file, tmp_path, capsys):
        out_path = tmp_path / "plan.json"
        assert cli.main(["plan", five_user_file, "--out", str(out_path)]) == 0
        captured = capsys.readouterr()
        assert captured.out == ""  # artifact went to the file
        assert "total sum-rate: 13/2" in captured.err
        plan = load_plan(out_path)
        assert plan.total_rates.total.numerator == 13

    def test_plan_to_stdout_is_json(self, five_user_file, capsys):
        assert cli.main(["plan", five_user_file, "--model", "non-asymptotic"]) == 0
        data = json.loads(capsys.readouterr().out)
        assert data["model"] == "non_asymptotic"
        assert data["total_rates"]["1"] == "5"

    def test_byte_identical_reruns(self, five_user_file, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert cli.main(["plan", five_user_file, "--out", str(a)]) == 0
        assert cli.main(["plan", five_user_file, "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_planning_error_maps_to_exit_3(self, five_user_file, monkeypatch, capsys):
        def boom(*args, **kwargs):
            raise PlanningError("synthetic failure")

        monkeypatch.setattr(cli, "plan_multistage", boom)
        assert cli.main(["plan", five_user_file]) == 3
        assert "synthetic failure" in capsys.readouterr().err


class TestSimulate:
    def test_end_to_end(self, five_user_file, tmp_path, capsys):
        plan_path = tmp_path / "plan.json"
        assert cli.main(["plan", five_user_file, "--out", str(plan_path)]) == 0
        capsys.readouterr()
        out_path = tmp_path / "transcript.jsonl"
        code = cli.main(["simulate", five_user_file, str(plan_path), "--out", str(out_path)])
        assert code == 0
        captured = capsys.readouterr()
        assert "all users decoded" in captured.err
        lines = out_path.read_text().strip().split("\n")
        assert json.loads(lines[-1])["ok"] is True

    def test_decode_failure_exits_4(self, five_user_file, tmp_path, capsys):
        plan_path = tmp_path / "starved.json"
        plan_path.write_text(
            json.dumps(
                {
                    "model": "asymptotic",
                    "users": [1, 2, 3, 4, 5],
                    "chunk_factor": 1,
                    "field_order": 53,
                    "seed": 0,
                    "stages": [
                        {"target": [1, 2, 3, 4, 5], "rates": {"1": "1"}},
                    ],
                }
            )
        )
        assert cli.main(["simulate", five_user_file, str(plan_path)]) == 4
        assert "decode failed" in capsys.readouterr().err

    def test_source_plan_mismatch_exits_2(self, cyclic_file, five_user_file, tmp_path, capsys):
        plan_path = tmp_path / "plan.json"
        assert cli.main(["plan", five_user_file, "--out", str(plan_path)]) == 0
        capsys.readouterr()
        assert cli.main(["simulate", cyclic_file, str(plan_path)]) == 2


class TestValidate:
    def test_good_table(self, tmp_path, capsys):
        path = tmp_path / "table.json"
        dump_source(induced_table(make_cyclic_triple()), path)
        assert cli.main(["validate", str(path)]) == 0
        assert "axioms hold" in capsys.readouterr().out

    def test_packet_source_is_trivially_fine(self, five_user_file, capsys):
        assert cli.main(["validate", five_user_file]) == 0

    def test_bad_table(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(
            json.dumps(
                {
                    "model": "table",
                    "users": [1, 2],
                    "entropy": {"1": "2", "2": "2", "1,2": "1"},
                }
            )
        )
        assert cli.main(["validate", str(path)]) == 2
        out = capsys.readouterr().out
        assert "monotonicity" in out


class TestErrorPaths:
    def test_missing_source(self, capsys):
        assert cli.main(["minrate", "/nonexistent/source.json"]) == 2
        assert "error:" in capsys.readouterr().err

    def test_malformed_source(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text("{]")
        assert cli.main(["minrate", str(path)]) == 2

    def test_malformed_plan(self, five_user_file, tmp_path, capsys):
        path = tmp_path / "plan.json"
        path.write_text("[]")
        assert cli.main(["simulate", five_user_file, str(path)]) == 2
