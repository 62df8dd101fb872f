import json
import subprocess
import sys

import pytest

from shiftgames.cli import SUBCOMMANDS, run
from shiftgames.fixtures import g_loop_document


@pytest.fixture
def loop_file(tmp_path):
    path = tmp_path / "loop.json"
    path.write_text(json.dumps(g_loop_document()))
    return str(path)


def _report(capsys):
    return json.loads(capsys.readouterr().out)


@pytest.mark.parametrize("command", SUBCOMMANDS)
def test_every_subcommand_succeeds_on_loop(command, loop_file, capsys):
    assert run([command, "--input", loop_file, "--runs", "20", "--horizon", "50"]) == 0
    report = _report(capsys)
    assert report["command"] == command
    assert "values" in report


def test_missing_file_is_an_error(tmp_path, capsys):
    assert run(["values", "--input", str(tmp_path / "nope.json")]) == 1
    assert "not found" in capsys.readouterr().err


def test_malformed_json_is_an_error(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{")
    assert run(["values", "--input", str(path)]) == 1


def test_bad_option_is_an_error(loop_file, capsys):
    assert run(["values", "--input", loop_file, "--lambda-grid", "0.5,2"]) == 1


def test_verify_absorbing_fixture_passes(capsys):
    assert run(["verify", "--input", "G_abs", "--epsilon", "0.1"]) == 0
    assert _report(capsys)["verification"]["verdict"] == "PASS"


def test_decompose_reports_exit_set(loop_file, capsys):
    assert run(["decompose", "--input", loop_file]) == 0
    dec = _report(capsys)["decomposition"]
    assert dec["F1"]


def test_uncertified_auxiliary_profile_exits_with_two(capsys):
    assert run(["aux", "--input", "rec_refuse"]) == 2
    assert _report(capsys)["certificate"]["status"] == "UNCERTIFIED"


def test_report_written_to_output_directory(loop_file, tmp_path, capsys):
    out = tmp_path / "reports"
    assert run(["values", "--input", loop_file, "--out", str(out)]) == 0
    assert json.loads((out / "values.json").read_text()) == _report(capsys)


def test_simulation_output_is_deterministic(loop_file):
    cmd = [sys.executable, "-m", "shiftgames.cli", "simulate", "--input", loop_file,
           "--runs", "30", "--horizon", "40", "--seed", "7"]
    first = subprocess.run(cmd, capture_output=True, check=True).stdout
    second = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert first == second
    assert json.loads(first)["simulation"]["seed"] == 7
