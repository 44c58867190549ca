import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from qenum import cli


def call(capsys, *argv):
    code = cli.run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestSubcommands:
    def test_simulate_roundtrips_state(self, capsys):
        from qenum.state import load

        code, out, _ = call(capsys, "simulate", "--machine", "builtin:split", "--horizon", "12")
        assert code == 0
        psi = load(io.StringIO(out))
        assert len(psi) == 2 and psi.norm2() == pytest.approx(1)

    def test_paths(self, capsys):
        code, out, _ = call(capsys, "paths", "--machine", "builtin:three-way", "--horizon", "16")
        data = json.loads(out)
        assert code == 0
        assert [p["path"] for p in data["paths"]] == ["P(P)@1 P@6", "~P(~)@1", "P(~)@1 ~@6"]
        assert sum(p["probability"] for p in data["paths"]) == pytest.approx(1)

    def test_paths_csv(self, capsys):
        _, out, _ = call(capsys, "paths", "--machine", "builtin:split", "--horizon", "12", "--format", "csv")
        rows = list(csv.reader(io.StringIO(out)))
        assert rows[0] == ["path", "probability"] and len(rows) == 3

    def test_check(self, capsys):
        code, out, _ = call(capsys, "check", "--machine", "builtin:adversarial", "--horizon", "20",
                            "--max-len", "4")
        rep = json.loads(out)
        assert code == 0
        assert rep["summary"]["inconsistent"] == ["~"]
        assert "~P(~)" in rep["summary"]["invalid"]

    def test_check_text(self, capsys):
        _, out, _ = call(capsys, "check", "--machine", "builtin:p-only", "--horizon", "10",
                         "--sentence", "P(~)", "--format", "text")
        assert "INVALID" in out and out.startswith("machine p-only")

    def test_measure_one_and_two(self, capsys):
        _, out, _ = call(capsys, "measure", "--machine", "builtin:split-uneven", "--horizon", "14",
                         "--sentence", "P(~)")
        one = json.loads(out)
        assert sum(one["branches"].values()) == pytest.approx(1)
        assert one["branches"]["0i"] == pytest.approx(0.7)
        _, out, _ = call(capsys, "measure", "--machine", "builtin:split-uneven", "--horizon", "14",
                         "--sentence", "P(~)", "--sentence", "~P(~)", "--m", "2")
        two = json.loads(out)
        assert len(two["branches"]) == 9

    def test_construct(self, capsys):
        code, out, _ = call(capsys, "construct", "--nmax", "2")
        data = json.loads(out)
        assert code == 0
        assert data["report"]["summary"]["valid"] == data["report"]["summary"]["sentences"] == 40
        assert data["efficiency"]["sentences_exact"] == 40

    def test_qft_defaults_to_csv(self, capsys):
        _, out, _ = call(capsys, "qft", "--n", "2")
        rows = list(csv.DictReader(io.StringIO(out)))
        neg = np.array([float(r["probability"]) for r in rows if r["branch"] == "~P"])
        assert len(rows) == 32 and neg[0] == pytest.approx(0.5)

    def test_chain(self, capsys):
        _, out, _ = call(capsys, "chain", "--x", "PN(PN", "--steps", "6")
        assert json.loads(out)["pn_counts"] == [3, 4, 6, 10, 18, 34]
        _, out, _ = call(capsys, "chain", "--x", "P", "--format", "text")
        assert out.startswith("PN(P) -> P(P)")

    def test_count(self, capsys):
        _, out, _ = call(capsys, "count", "--n", "5", "--n", "7")
        data = json.loads(out)
        assert [(d["exact"], d["formula"], d["match"]) for d in data] == [(20, "20", True), (316, "320", False)]


class TestExitCodes:
    def test_missing_subcommand(self, capsys):
        assert call(capsys)[0] == 1

    @pytest.mark.parametrize("argv", [
        ["check", "--horizon", "0"],
        ["check", "--epsilon", "0.5"],
        ["measure", "--sentence", "P(~)", "--m", "-1"],
        ["measure", "--sentence", "P(~)", "--sentence", "P(P)", "--sentence", "P(()"],
        ["construct", "--nmax", "9"],
        ["check", "--sentence", "P(x)"],
        ["chain", "--x", ""],
    ])
    def test_config_errors(self, capsys, argv):
        code, _, err = call(capsys, *argv)
        assert code == 1 and err.startswith("error:")

    def test_unknown_builtin(self, capsys):
        assert call(capsys, "simulate", "--machine", "builtin:nope")[0] == 2

    def test_wrong_dimension(self, capsys, tmp_path):
        path = tmp_path / "m.json"
        path.write_text(json.dumps({"kind": "dense", "L": 2, "entries": [[[1, 0]] * 25] * 25}))
        code, _, err = call(capsys, "simulate", "--machine", str(path))
        assert code == 2 and "50 rows" in err

    def test_not_unitary(self, capsys, tmp_path):
        entries = [[[1.0 if i == j else 0.0, 0.0] for j in range(25)] for i in range(25)]
        entries[4][4][0] = 1.001
        path = tmp_path / "m.json"
        path.write_text(json.dumps({"kind": "dense", "L": 1, "entries": entries}))
        code, _, err = call(capsys, "simulate", "--machine", str(path))
        assert code == 2 and "2.001e-03" in err

    def test_equivalence_violation(self, capsys, monkeypatch):
        import qenum.semantics as sem

        monkeypatch.setattr(sem, "_equivalent_form", lambda *a: 0.25)
        code, _, err = call(capsys, "check", "--machine", "builtin:p-tilde", "--sentence", "P(~)")
        assert code == 3 and "equivalence" in err


class TestOutput:
    def test_deterministic(self, capsys):
        argv = ["check", "--machine", "builtin:random-internal", "--horizon", "12", "--max-len", "4"]
        assert call(capsys, *argv)[1] == call(capsys, *argv)[1]

    def test_seed_override(self, capsys):
        base = ["simulate", "--machine", "builtin:random-internal", "--horizon", "6"]
        a = call(capsys, *base, "--seed", "1")[1]
        b = call(capsys, *base, "--seed", "2")[1]
        assert a != b and a == call(capsys, *base, "--seed", "1")[1]

    def test_output_dir_from_environment(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path))
        code, out, _ = call(capsys, "count", "--n", "4", "--output", "sub/counts.json")
        assert code == 0 and out == ""
        assert json.loads((tmp_path / "sub" / "counts.json").read_text())[0]["exact"] == 4

    def test_absolute_output_ignores_environment(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "elsewhere"))
        target = tmp_path / "out.csv"
        call(capsys, "qft", "--n", "1", "--output", str(target))
        assert target.read_text().startswith("Y,branch,probability")


def test_console_module_entry():
    proc = subprocess.run([sys.executable, "-m", "qenum.cli", "count", "--n", "6", "--format", "text"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stdout.strip() == "n=6: exact 80, formula 80"
