import json

import pytest
from click.testing import CliRunner

from pipelines.cli_pipeline import EXIT_DOMAIN, EXIT_OK, EXIT_USAGE, RunConfig, dispatch, replay_config
from run_pipeline import cli


@pytest.fixture
def runner():
    return CliRunner()


def read_json(path):
    with open(path) as handle:
        return json.load(handle)


def test_basic_sequence_run_writes_artifacts(runner, tmp_path):
    out = tmp_path / "basic"
    result = runner.invoke(cli, ["basic-seq", "--delta", "central", "--kmax", "5", "--out", str(out)])
    assert result.exit_code == 0, result.output
    payload = read_json(out / "result.json")
    assert "x^3 - a^2*x" in payload["polynomials"]
    assert all(payload["checks"].values())
    manifest = read_json(out / "manifest.json")
    assert manifest["schema_version"] == "1.1"
    assert manifest["pipeline_run"]
    assert manifest["command"] == "basic-seq"
    assert manifest["outputs"] == ["sequence.csv", "result.json"]
    assert (out / "sequence.csv").exists()


def test_json_table_format(runner, tmp_path):
    out = tmp_path / "doubling"
    result = runner.invoke(cli, ["doubling", "--dim", "3", "--format", "json", "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert read_json(out / "result.json") == {"count": 8}
    assert len(read_json(out / "zeros.json")) == 8


def test_domain_error_exits_three_without_output(runner, tmp_path):
    out = tmp_path / "qp"
    result = runner.invoke(cli, ["qp-inverse", "--N", "8", "--out", str(out)])
    assert result.exit_code == 3
    assert "Q' singular" in result.output
    assert not out.exists()


@pytest.mark.parametrize("args", [["sphere", "--c", "1/0"], ["doubling", "--spacing", "half"], ["ff-rep", "--p", "9"]])
def test_bad_values_are_domain_errors(runner, tmp_path, args):
    result = runner.invoke(cli, args + ["--out", str(tmp_path / "x")])
    assert result.exit_code == 3
    assert '"kind": "DomainError"' in result.output


def test_unknown_flag_is_a_usage_error(runner, tmp_path):
    out = tmp_path / "bad"
    result = runner.invoke(cli, ["basic-seq", "--bogus", "--out", str(out)])
    assert result.exit_code == 2
    assert not out.exists()


def test_replay_reproduces_tables(runner, tmp_path):
    first, second = tmp_path / "first", tmp_path / "second"
    assert runner.invoke(cli, ["basic-seq", "--delta", "forward", "--kmax", "4", "--out", str(first)]).exit_code == 0
    result = runner.invoke(cli, ["replay", str(first / "manifest.json"), "--out", str(second)])
    assert result.exit_code == 0, result.output
    assert (first / "sequence.csv").read_text() == (second / "sequence.csv").read_text()


def test_replay_config_keeps_parameters(runner, tmp_path):
    out = tmp_path / "qp"
    assert runner.invoke(cli, ["qp-inverse", "--N", "6", "--out", str(out)]).exit_code == 0
    config = replay_config(str(out / "manifest.json"))
    assert config.command == "qp-inverse"
    assert config.params == {"N": 6}
    assert config.format == "csv"


def test_dispatch_exit_codes(tmp_path):
    assert dispatch(RunConfig("nope")).exit_code == EXIT_USAGE
    assert dispatch(RunConfig("doubling", {"dimension": 3}, output_dir=str(tmp_path / "x"))).exit_code == EXIT_USAGE
    assert dispatch(RunConfig("ff-rep", {"p": 4}, output_dir=str(tmp_path / "y"))).exit_code == EXIT_DOMAIN
    outcome = dispatch(RunConfig("doubling", {"dim": 2}, output_dir=str(tmp_path / "z")))
    assert outcome.exit_code == EXIT_OK
    assert outcome.residuals == {"count": 4}
    assert outcome.paths[-1].endswith("manifest.json")


def test_tolerance_is_checked_against_headline_residual(tmp_path):
    outcome = dispatch(RunConfig("dispersion", {"N": 21, "a": 0.5}, output_dir=str(tmp_path), tol=1e-9))
    assert outcome.exit_code == EXIT_OK
    assert outcome.residuals["within_tol"]
    manifest = read_json(tmp_path / "manifest.json")
    assert manifest["tolerances"]["requested"] == 1e-9


def test_newton_command_uses_umbral_basis(runner, tmp_path):
    out = tmp_path / "newton"
    result = runner.invoke(cli, ["newton", "--k", "1/2", "--kcut", "6", "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert read_json(out / "result.json")["basis"] == "umbral"
    assert (out / "coefficients.csv").exists()


def test_doubling_variant_option(runner, tmp_path):
    out = tmp_path / "forward"
    result = runner.invoke(cli, ["doubling", "--dim", "3", "--variant", "forward-basic", "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert read_json(out / "result.json") == {"count": 1}
