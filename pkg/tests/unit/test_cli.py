"""Tests for the command-line interface."""
import sys
import os

# Add the parent directory to sys.path
current_dir = os.path.dirname(os.path.abspath(__file__))
parent_dir = os.path.abspath(os.path.join(current_dir, "../../"))
sys.path.insert(0, parent_dir)

import json

import pandas as pd
import pytest
from click.testing import CliRunner
from teleport_noise.cli.main import cli
from teleport_noise.core.chain import exact_infidelity_series
from teleport_noise.core.schemas import ChainConfig

CHAIN_INPUT = {"T": 6, "error": {"type": "rot_axis", "theta": 0.04, "axis": [3, 1, 2]}}
FOLIATION_INPUT = {
    "code": {"preset": "four_qubit"},
    "L": 1,
    "noise": {"code_qubits": {"theta": 0.02}, "ancillas": {"theta": 0.01}},
}


@pytest.fixture
def runner():
    return CliRunner(mix_stderr=False)


def test_chain_writes_csv(runner, tmp_path):
    """Test the chain subcommand with a file input and a CSV output."""
    source = tmp_path / "chain.json"
    source.write_text(json.dumps(CHAIN_INPUT))
    target = tmp_path / "out" / "chain.csv"
    result = runner.invoke(cli, ["chain", "--input", str(source), "--output", str(target)])
    assert result.exit_code == 0, result.stderr
    table = pd.read_csv(target)
    assert list(table.columns) == ["t", "r_exact", "r_free", "r_rc", "r_mc", "mc_stderr"]
    expected = exact_infidelity_series(ChainConfig.model_validate(CHAIN_INPUT).to_chain_spec())
    assert table["r_exact"].tolist() == pytest.approx(expected.tolist(), rel=1e-15)

def test_chain_monte_carlo_is_seeded(runner):
    """Test that the same seed prints the same table."""
    args = ["chain", "--input", json.dumps(CHAIN_INPUT), "--samples", "500", "--seed", "9"]
    first = runner.invoke(cli, args)
    second = runner.invoke(cli, args)
    assert first.exit_code == 0, first.stderr
    assert first.stdout == second.stdout

def test_bounds_to_stdout(runner):
    """Test the bounds subcommand printing CSV."""
    result = runner.invoke(cli, ["bounds", "--input", json.dumps(CHAIN_INPUT)])
    assert result.exit_code == 0, result.stderr
    header = result.stdout.splitlines()[0]
    assert header == "t,r_exact,r_lo2,r_hi2,r_lo3,r_hi3,r_simple,r_corollary"

def test_bounds_precondition_failure(runner):
    """Test that a large coherence ratio exits with status 1."""
    payload = {"T": 5, "error": {"type": "rot_z", "theta": 0.4}}
    result = runner.invoke(cli, ["bounds", "--input", json.dumps(payload)])
    assert result.exit_code == 1
    assert "PreconditionError" in result.stderr

def test_foliate_outputs(runner, tmp_path):
    """Test the foliate subcommand with JSON and CSV outputs."""
    target = tmp_path / "replacement.json"
    flat = tmp_path / "replacement.csv"
    result = runner.invoke(
        cli,
        [
            "foliate",
            "--input", json.dumps(FOLIATION_INPUT),
            "--output", str(target),
            "--csv-output", str(flat),
        ],
    )
    assert result.exit_code == 0, result.stderr
    payload = json.loads(target.read_text())
    assert payload["operation_count"] == 46
    assert len(payload["locations"]) == 46
    assert {row["axis"] for row in payload["locations"]} == {"X", "Z"}
    assert len(pd.read_csv(flat)) == 46
    assert payload["above_half"] == []

def test_foliate_even_root_failure(runner):
    """Test that an uninvertible flip probability exits with status 1."""
    payload = {"code": {"preset": "four_qubit"}, "L": 1, "noise": {"code_qubits": {"theta": 0.3}}}
    result = runner.invoke(cli, ["foliate", "--input", json.dumps(payload)])
    assert result.exit_code == 1
    assert "NoRealRootError" in result.stderr

def test_foliate_reports_probabilities_above_half(runner):
    """Test that the JSON output lists locations with replacement probability above 1/2."""
    payload = {
        "code": {"preset": "four_qubit"},
        "L": 1,
        "noise": {"code_qubits": {"theta": 0.9}, "slots": {str(g): 1 for g in range(1, 5)}},
    }
    result = runner.invoke(cli, ["foliate", "--input", json.dumps(payload)])
    assert result.exit_code == 0, result.stderr
    report = json.loads(result.stdout)
    flagged = [(row["gamma"], row["t"], row["w"]) for row in report["locations"] if row["p"] > 0.5]
    assert flagged
    assert [(row["gamma"], row["t"], row["w"]) for row in report["above_half"]] == flagged

def test_verify(runner):
    """Test that verification reports matching channels."""
    result = runner.invoke(cli, ["verify", "--input", json.dumps(FOLIATION_INPUT)])
    assert result.exit_code == 0, result.stderr
    report = json.loads(result.stdout)
    assert report["max_deviation"] < 1e-10
    assert "raw" not in report

def test_threshold(runner):
    """Test the threshold subcommand without an input file."""
    result = runner.invoke(cli, ["threshold", "--B", "6", "--p-th", "0.03"])
    assert result.exit_code == 0, result.stderr
    report = json.loads(result.stdout)
    assert report["p_th_bound"] == pytest.approx(0.01)
    assert report["theta_bound"] == pytest.approx(0.020034, abs=1e-6)
    assert report["theta_numeric"] == pytest.approx(0.0349, abs=1e-4)

@pytest.mark.parametrize(
    "args",
    [
        ["chain"],
        ["chain", "--input", "{not json"],
        ["chain", "--input", "missing-file.json"],
        ["chain", "--input", json.dumps({"T": 2})],
        ["chain", "--input", json.dumps(CHAIN_INPUT), "--tol", "bogus=1"],
        ["chain", "--input", json.dumps(CHAIN_INPUT), "--tol", "purity"],
        ["foliate", "--input", json.dumps({"code": {"preset": "four_qubit"}, "L": -1})],
        ["threshold"],
        ["threshold", "--B", "1"],
        ["threshold", "--B", "6", "--log-level", "LOUD"],
    ],
)
def test_usage_errors(runner, args):
    """Test that malformed input exits with status 2."""
    result = runner.invoke(cli, args)
    assert result.exit_code == 2

def test_version(runner):
    """Test the version flag."""
    result = runner.invoke(cli, ["--version"])
    assert result.exit_code == 0
    assert "teleport-noise" in result.stdout

def test_chain_forwards_workers(runner, mocker):
    """Test that --workers reaches the Monte Carlo driver."""
    from teleport_noise.cli import main

    spy = mocker.spy(main, "chain_table")
    result = runner.invoke(
        cli, ["chain", "--input", json.dumps(CHAIN_INPUT), "--samples", "50", "--workers", "2"]
    )
    assert result.exit_code == 0, result.stderr
    assert spy.call_args.kwargs["workers"] == 2
    assert spy.call_args.kwargs["samples"] == 50
