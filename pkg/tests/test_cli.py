import csv
import io
import json
from pathlib import Path

import pytest

from qtsim.cli import EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION, build_parser, dispatch

GOLDEN = Path(__file__).parent / "golden"


def run(capsys, *argv):
    code = dispatch(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestHelp:
    @pytest.mark.parametrize("command", ["main", "simulate", "attack-conformance", "resources", "calibrate",
                                         "run-suite"])
    def test_matches_golden(self, capsys, monkeypatch, command):
        monkeypatch.setenv("COLUMNS", "100")
        argv = ["--help"] if command == "main" else [command, "--help"]
        code, out, _ = run(capsys, *argv)
        assert code == EXIT_OK
        assert out == (GOLDEN / f"help_{command}.txt").read_text()

    def test_subcommands(self):
        sub = build_parser()._subparsers._group_actions[0]
        assert list(sub.choices) == ["simulate", "attack-conformance", "resources", "calibrate", "run-suite"]


class TestResources:
    def test_qfa6_row(self, capsys):
        code, out, _ = run(capsys, "resources", "--adder", "qfa:6")
        assert code == EXIT_OK
        rows = list(csv.DictReader(io.StringIO(out)))
        assert rows == [dict(adder="qfa:6", qubits="11", toffoli_count="9", cnot_count="20",
                             toffoli_depth="9", cnot_depth="13")]

    def test_json_format(self, capsys):
        code, out, _ = run(capsys, "resources", "--adder", "qma:4", "--adder", "qma:3:minus", "--format", "json")
        assert code == EXIT_OK
        assert [r["adder"] for r in json.loads(out)] == ["qma:4:2^n", "qma:3:2^n-1"]


class TestConformance:
    def test_apc_records(self, capsys):
        code, out, _ = run(capsys, "attack-conformance", "--kind", "apc", "--max-n", "8")
        assert code == EXIT_OK
        records = json.loads(out)
        assert [r["layer"] for r in records] == list(range(1, 9))
        assert all({"full_entropy", "reduced_entropy", "overlap", "passed"} <= set(r) for r in records)

    def test_written_to_out_dir(self, capsys, tmp_path):
        code, out, _ = run(capsys, "attack-conformance", "--kind", "existing", "--max-n", "32", "--x", "1",
                           "--format", "csv", "--out", str(tmp_path))
        assert code == EXIT_OK
        path = tmp_path / "conformance_existing_literal.csv"
        assert out.strip() == str(path)
        rows = list(csv.DictReader(path.open()))
        assert len(rows) == 32 and all(r["passed"] == "True" for r in rows)


class TestSimulate:
    def test_zero_noise(self, capsys):
        code, out, _ = run(capsys, "simulate", "--adder", "qma:5", "--attack", "apc", "--shots", "3",
                           "--noise", "p1=0", "--noise", "p2=0", "--noise", "p_meas=0", "--noise", "ct_strength=0",
                           "--noise", "ct_coherent_angle=0")
        assert code == EXIT_OK
        row = json.loads(out)
        assert row["case_probabilities"] == [1.0, 1.0, 1.0]
        assert row["trajectories"] == 9

    def test_config_file_and_flag_override(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"experiment": {"shots": 4, "seed": 1}, "noise": {"p2": 0.0}}))
        code, out, _ = run(capsys, "simulate", "--config", str(cfg), "--adder", "qfa:3", "--seed", "5")
        assert code == EXIT_OK
        row = json.loads(out)
        assert (row["seed"], row["trajectories"]) == (5, 12)

    def test_attack_needs_tenant(self, capsys):
        code, _, err = run(capsys, "simulate", "--adder", "qfa:3", "--attack", "sac", "--tenancy", "none")
        assert code == EXIT_VALIDATION
        assert "no attacker" in err


class TestRunSuite:
    ARGS = ("run-suite", "--seed", "3", "--shots", "2", "--noise", "p2=0.02")

    @pytest.mark.parametrize("fmt", ["json", "csv"])
    def test_byte_identical_files(self, capsys, tmp_path, fmt):
        paths = []
        for sub in ("a", "b"):
            code, out, _ = run(capsys, *self.ARGS, "--format", fmt, "--out", str(tmp_path / sub))
            assert code == EXIT_OK
            paths.append(Path(out.strip()))
        assert paths[0].name == paths[1].name
        assert paths[0].name.startswith("report_seed3_") and paths[0].suffix == f".{fmt}"
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_golden_mode(self, capsys):
        code, out, _ = run(capsys, "run-suite", "--golden")
        assert code == EXIT_OK
        assert json.loads(out)["improvement"]["9"]["EXISTING"] == pytest.approx(133.5, abs=0.1)


class TestExitCodes:
    @pytest.mark.parametrize("argv", [
        [],
        ["frobnicate"],
        ["simulate"],
        ["simulate", "--adder", "qfa:99"],
        ["simulate", "--adder", "qfa:4", "--attack", "laser"],
        ["simulate", "--adder", "qfa:4", "--noise", "p2"],
        ["simulate", "--adder", "qfa:4", "--noise", "p2=abc"],
        ["simulate", "--adder", "qfa:4", "--noise", "p2=1.5"],
        ["simulate", "--adder", "qfa:4", "--shots", "0"],
        ["simulate", "--adder", "qfa:4", "--config", "/nonexistent/cfg.json"],
        ["attack-conformance", "--kind", "apc", "--max-n", "0"],
        ["calibrate", "--budget", "10"],
    ])
    def test_validation_errors(self, capsys, argv):
        code, _, err = run(capsys, *argv)
        assert code == EXIT_VALIDATION
        assert err.startswith("qtsim: error:")

    def test_malformed_config(self, capsys, tmp_path):
        cfg = tmp_path / "bad.json"
        cfg.write_text("{not json")
        code, _, err = run(capsys, "resources", "--adder", "qfa:6", "--config", str(cfg))
        assert code == EXIT_VALIDATION
        assert "malformed config" in err

    def test_runtime_error(self, capsys, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        # --out points below a regular file, so writing the result fails at runtime
        code, _, err = run(capsys, "resources", "--adder", "qfa:6", "--out", str(blocker / "sub"))
        assert code == EXIT_RUNTIME
        assert err.startswith("qtsim: runtime error:")
