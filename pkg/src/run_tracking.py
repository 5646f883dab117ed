import logging
import os
from typing import Dict, Iterable, Optional

import mlflow

from src.config import TrackingConfig

# Setup logging configuration
logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(levelname)s - %(message)s")


def _flatten(prefix: str, value, out: Dict[str, object]):
    if isinstance(value, dict):
        for key, inner in value.items():
            _flatten(f"{prefix}.{key}" if prefix else str(key), inner, out)
    else:
        out[prefix] = value


def _metric_value(value) -> Optional[float]:
    if isinstance(value, bool):
        return float(value)
    try:
        number = float(value)
    except (TypeError, ValueError):
        return None
    return number if number == number else None


def log_manifest(manifest: dict, artifacts: Iterable[str], tracking: TrackingConfig) -> str:
    """
    Logs a run manifest to MLflow: parameters as params, residuals as metrics, files as artifacts.

    Parameters:
    manifest (dict): The run manifest written next to the outputs.
    artifacts (Iterable[str]): Paths of the files the run produced.
    tracking (TrackingConfig): Experiment name and tracking URI.

    Returns:
    str: The MLflow run id.
    """
    mlflow.set_tracking_uri(tracking.tracking_uri)
    mlflow.set_experiment(tracking.experiment)

    params: Dict[str, object] = {}
    _flatten("", manifest.get("params", {}), params)
    metrics: Dict[str, object] = {}
    _flatten("", manifest.get("residuals", {}), metrics)

    if not mlflow.active_run():
        mlflow.start_run(run_name=manifest.get("command"))
    try:
        run_id = mlflow.active_run().info.run_id
        mlflow.set_tag("command", manifest.get("command"))
        mlflow.log_params({key: str(value)[:250] for key, value in params.items()})
        for key, value in metrics.items():
            number = _metric_value(value)
            if number is not None:
                mlflow.log_metric(key.replace("[", "_").replace("]", ""), number)
        for path in artifacts:
            if os.path.exists(path):
                mlflow.log_artifact(path)
        logging.info(f"Logged run {run_id} to experiment '{tracking.experiment}'.")
    except Exception as e:
        logging.error(f"Error during run tracking: {e}")
        raise e
    finally:
        mlflow.end_run()
    return run_id
