import io
import json

import numpy as np
import pytest

from cashsubrisk import core
from cashsubrisk.cli import RunConfig, UsageError, load_scenarios, main, run
from cashsubrisk.duality import PenaltySurface


def write_spec(path, spec, claimed=None):
    doc = spec.to_dict()
    if claimed is not None:
        doc["claimed_axioms"] = claimed
    path.write_text(json.dumps(doc))
    return str(path)


def strip_timestamp(text):
    doc = json.loads(text)
    doc.pop("timestamp")
    return doc


def without_timestamp_line(text):
    return [line for line in text.splitlines() if not line.lstrip().startswith('"timestamp"')]


@pytest.fixture
def files(tmp_path):
    out = {
        "entropic": write_spec(tmp_path / "entropic.json", core.entropic(1.0, (0.5, 0.5))),
        "worst": write_spec(tmp_path / "worst_case.json", core.worst_case()),
        "scaled": write_spec(tmp_path / "scaled.json", core.scaled_worst_case(2.0),
                             claimed=["A2", "A3", "A5"]),
        "loss": write_spec(tmp_path / "loss.json", core.loss_based((0.5, 0.5))),
    }
    data = tmp_path / "data.csv"
    data.write_text("s1,s2\n1,2\n-1,0.5\n")
    out["data"] = str(data)
    ragged = tmp_path / "ragged.csv"
    ragged.write_text("s1,s2\n1\n")
    out["ragged"] = str(ragged)
    out["dir"] = tmp_path
    return out


class TestLoadScenarios:
    def test_single_row(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("s1,s2\n1,2\n")
        np.testing.assert_array_equal(load_scenarios(p), [[1.0, 2.0]])

    def test_three_columns(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("s1,s2,s3\n0,0,0\n-1,2,3\n")
        data = load_scenarios(p)
        assert data.shape == (2, 3)

    def test_ragged(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("s1,s2\n1\n")
        with pytest.raises(UsageError, match="ragged row 2"):
            load_scenarios(p)

    @pytest.mark.parametrize("text, msg", [
        ("", "empty"),
        ("s1,s2\n", "no data rows"),
        ("a,b\n1,2\n", "header"),
        ("s1,s2\n1,x\n", "non-numeric"),
        ("s1,s2\n1,inf\n", "non-finite"),
    ])
    def test_format_errors(self, tmp_path, text, msg):
        p = tmp_path / "a.csv"
        p.write_text(text)
        with pytest.raises(UsageError, match=msg):
            load_scenarios(p)


class TestCommands:
    def test_eval(self, files):
        out = files["dir"] / "eval.json"
        code = main(["eval", "--spec", files["worst"], "--data", files["data"], "--out", str(out)])
        assert code == 0
        doc = json.loads(out.read_text())
        assert list(doc) == ["tool", "version", "command", "timestamp", "seed", "config", "spec",
                             "status", "results"]
        assert [r["risk"] for r in doc["results"]["records"]] == [-1.0, 1.0]
        assert [r["row"] for r in doc["results"]["records"]] == [1, 2]

    def test_eval_to_stdout(self, files):
        buf = io.StringIO()
        code = run(RunConfig("eval", files["entropic"], files["data"]), stdout=buf)
        assert code == 0
        assert json.loads(buf.getvalue())["command"] == "eval"

    def test_check_pass(self, files):
        out = files["dir"] / "check.json"
        code = main(["check", "--spec", files["entropic"], "--trials", "2000", "--seed", "7",
                     "--out", str(out)])
        assert code == 0
        reports = json.loads(out.read_text())["results"]["reports"]
        assert [r["axiom"] for r in reports] == ["A1", "A2", "A3", "A5", "A5-left", "A5-right"]

    def test_check_fail_carries_counterexample(self, files):
        out = files["dir"] / "check.json"
        code = main(["check", "--spec", files["scaled"], "--dim", "2", "--trials", "1000",
                     "--out", str(out)])
        assert code == 1
        doc = json.loads(out.read_text())
        assert doc["status"] == "fail"
        failed = [r for r in doc["results"]["reports"] if r["verdict"] == "fail"]
        assert {r["axiom"] for r in failed} == {"A5", "A5-left", "A5-right"}
        assert all(r["counterexample"]["violation"] > r["tolerance"] for r in failed)

    def test_check_loss_based(self, files):
        code = main(["check", "--spec", files["loss"], "--trials", "1000",
                     "--out", str(files["dir"] / "c.json")])
        assert code == 0

    def test_check_needs_dimension(self, files, capsys):
        assert main(["check", "--spec", files["worst"]]) == 2
        assert "cannot infer N" in capsys.readouterr().err

    def test_lift_check(self, files):
        out = files["dir"] / "lift.json"
        assert main(["lift-check", "--spec", files["entropic"], "--trials", "1000",
                     "--out", str(out)]) == 0
        assert main(["lift-check", "--spec", files["scaled"], "--dim", "2", "--trials", "1000",
                     "--out", str(out)]) == 1

    def test_penalty_writes_table(self, files):
        out = files["dir"] / "pen.json"
        code = main(["penalty", "--spec", files["worst"], "--dim", "2", "--grid-step", "0.25",
                     "--mode", "paper", "--out", str(out)])
        assert code == 0
        results = json.loads(out.read_text())["results"]
        table = files["dir"] / results["table"]
        assert table.name == "pen.penalty.csv"
        surface = PenaltySurface.from_csv(table)
        assert len(surface) == results["points"] == 15

    def test_penalty_needs_out(self, files):
        assert main(["penalty", "--spec", files["worst"], "--dim", "2"]) == 2

    def test_reconstruct(self, files):
        probes = files["dir"] / "probes.csv"
        probes.write_text("s1,s2\n1,2\n-3,0.5\n2,2\n")
        out = files["dir"] / "rec.json"
        code = main(["reconstruct", "--spec", files["worst"], "--grid-step", "0.05", "--box", "10",
                     "--data", str(probes), "--out", str(out)])
        assert code == 0
        records = json.loads(out.read_text())["results"]["records"]
        assert [r["within"] for r in records] == [True] * 3
        assert all("gap" in r for r in records)

    def test_reconstruct_from_table(self, files):
        out = files["dir"] / "pen.json"
        main(["penalty", "--spec", files["worst"], "--dim", "2", "--grid-step", "0.25",
              "--out", str(out)])
        code = main(["reconstruct", "--spec", files["worst"], "--data", files["data"],
                     "--table", str(files["dir"] / "pen.penalty.csv"), "--tol", "1e-9",
                     "--out", str(files["dir"] / "rec.json")])
        assert code == 0

    def test_reconstruct_gap_beyond_tolerance(self, files):
        code = main(["reconstruct", "--spec", files["entropic"], "--grid-step", "0.5",
                     "--data", files["data"], "--tol", "1e-9", "--out", str(files["dir"] / "r.json")])
        assert code == 1


class TestUsageErrors:
    @pytest.mark.parametrize("extra", [
        ["--trials", "0"],
        ["--tol", "-1"],
        ["--grid-step", "1.5"],
        ["--box", "0"],
    ])
    def test_bad_numbers(self, files, extra):
        assert main(["check", "--spec", files["entropic"], *extra]) == 2

    def test_bad_mode_is_argparse_error(self, files):
        with pytest.raises(SystemExit) as exc:
            main(["penalty", "--spec", files["entropic"], "--mode", "nope"])
        assert exc.value.code == 2

    def test_missing_spec_file(self, files):
        assert main(["eval", "--spec", str(files["dir"] / "missing.json"), "--data", files["data"]]) == 2

    def test_bad_json(self, files):
        bad = files["dir"] / "bad.json"
        bad.write_text("{not json")
        assert main(["eval", "--spec", str(bad), "--data", files["data"]]) == 2

    def test_bad_spec(self, files):
        bad = files["dir"] / "bad.json"
        bad.write_text(json.dumps({"kind": "entropic", "params": {"beta": 0, "weights": [1]}}))
        assert main(["eval", "--spec", str(bad), "--data", files["data"]]) == 2

    def test_ragged(self, files, capsys):
        assert main(["eval", "--spec", files["entropic"], "--data", files["ragged"]]) == 2
        assert "ragged row 2" in capsys.readouterr().err

    def test_dimension_mismatch(self, files, tmp_path):
        data = tmp_path / "three.csv"
        data.write_text("s1,s2,s3\n1,2,3\n")
        assert main(["eval", "--spec", files["entropic"], "--data", str(data)]) == 2


class TestDeterminism:
    @pytest.mark.parametrize("argv", [
        ["check", "--trials", "500", "--seed", "3"],
        ["lift-check", "--trials", "500", "--seed", "3"],
        ["reconstruct", "--grid-step", "0.25"],
    ])
    def test_reports_identical_modulo_timestamp(self, files, argv):
        out = files["dir"] / "r.json"
        args = [argv[0], "--spec", files["entropic"], "--data", files["data"], *argv[1:],
                "--out", str(out)]
        main(args)
        first = out.read_text()
        main(args)
        second = out.read_text()
        assert strip_timestamp(first) == strip_timestamp(second)
        assert without_timestamp_line(first) == without_timestamp_line(second)
