from unittest import mock

import pytest

from src import run_tracking
from src.config import CONFIG_ENV_VAR, OUTPUT_DIR_ENV_VAR, LabConfig, TrackingConfig, _load_from_path, load_config
from src.exceptions import DomainError
from src.run_tracking import log_manifest


@pytest.fixture(autouse=True)
def fresh_config():
    _load_from_path.cache_clear()
    yield
    _load_from_path.cache_clear()


def test_repository_config_matches_defaults():
    assert load_config() == LabConfig()


def test_missing_file_uses_defaults(tmp_path):
    assert load_config(str(tmp_path / "absent.yaml")) == LabConfig()


def test_yaml_overrides_single_keys(tmp_path):
    path = tmp_path / "lab.yaml"
    path.write_text("spectral:\n  quadrature_tol: 1e-7\noperators:\n  default_order: 10\n  unknown: 3\n")
    config = load_config(str(path))
    assert config.spectral.quadrature_tol == 1e-7
    assert config.spectral.norm_tol == 1e-10
    assert config.operators.default_order == 10
    assert config.exact.stirling_cap == 64


def test_config_path_from_environment(tmp_path, monkeypatch):
    path = tmp_path / "lab.yaml"
    path.write_text("exact:\n  stirling_cap: 32\n")
    monkeypatch.setenv(CONFIG_ENV_VAR, str(path))
    assert load_config().exact.stirling_cap == 32


def test_output_directory_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_DIR_ENV_VAR, str(tmp_path))
    config = load_config()
    assert config.output.directory == str(tmp_path)
    assert config.output.format == "csv"


@pytest.mark.parametrize("content", ["- 1\n- 2\n", "spectral: 3\n"])
def test_malformed_config_is_rejected(tmp_path, content):
    path = tmp_path / "lab.yaml"
    path.write_text(content)
    with pytest.raises(DomainError):
        load_config(str(path))


def test_as_dict_has_every_section():
    sections = LabConfig().as_dict()
    assert set(sections) == {"exact", "operators", "spectral", "output", "tracking"}
    assert sections["spectral"]["linalg_tol"] == 1e-12


def test_tracking_logs_params_and_numeric_residuals(tmp_path, monkeypatch):
    fake = mock.MagicMock()
    fake.active_run.return_value.info.run_id = "run-1"
    monkeypatch.setattr(run_tracking, "mlflow", fake)
    artifact = tmp_path / "result.json"
    artifact.write_text("{}")
    manifest = {
        "command": "doubling",
        "params": {"dim": 3, "spacing": "1"},
        "residuals": {"count[0]": 8, "label": "text"},
    }
    assert log_manifest(manifest, [str(artifact), str(tmp_path / "gone.csv")], TrackingConfig()) == "run-1"
    fake.log_params.assert_called_once_with({"dim": "3", "spacing": "1"})
    fake.log_metric.assert_called_once_with("count_0", 8.0)
    fake.log_artifact.assert_called_once_with(str(artifact))
    fake.end_run.assert_called_once()
