import functools
import json
import logging
import os
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import metadata
from typing import Annotated, Any, Callable, Dict, List, Optional, Type

import numpy as np
import pandas as pd
from zenml import ArtifactConfig, get_step_context, step
from zenml.enums import ArtifactType
from zenml.io import fileio
from zenml.materializers.base_materializer import BaseMaterializer

from src.config import load_config
from src.exact_core import LaurentPoly, SpacingScalar
from src.exceptions import DomainError
from src.run_tracking import log_manifest

MANIFEST_SCHEMA_VERSION = "1.1"
TRACKED_PACKAGES = ("numpy", "pandas", "scipy", "sympy", "click", "PyYAML", "zenml", "mlflow")

# residual compared against --tol, per command
TOLERANCE_CHECKED = {
    "xhat-spectrum": "max_residual",
    "ground-state": "residual",
    "dispersion": "max_error",
    "evolve": "norm_drift",
}


@dataclass
class StepResult:
    """Tables for CSV/JSON files, a JSON payload and the residuals recorded in the manifest.

    ``error`` is set instead when the step stopped on a domain error.
    """

    tables: Dict[str, pd.DataFrame] = field(default_factory=dict)
    payload: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    error: Optional[Dict[str, str]] = None


def to_jsonable(value):
    """Converts exact and numpy values into plain JSON types."""
    if isinstance(value, (SpacingScalar, LaurentPoly)):
        return value.to_json()
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    if isinstance(value, np.generic):
        return to_jsonable(value.item())
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, float) and value != value:
        return None
    return value


class StepResultMaterializer(BaseMaterializer):
    """Stores a StepResult as one pickled frame per table next to a JSON document."""

    ASSOCIATED_TYPES = (StepResult,)
    ASSOCIATED_ARTIFACT_TYPE = ArtifactType.DATA

    def load(self, data_type: Type[Any]) -> StepResult:
        with fileio.open(os.path.join(self.uri, "result.json"), "r") as handle:
            stored = json.load(handle)
        tables = {}
        for name in stored["tables"]:
            with fileio.open(os.path.join(self.uri, f"{name}.pkl"), "rb") as handle:
                tables[name] = pd.read_pickle(handle)
        return StepResult(tables, stored["payload"], stored["residuals"], stored["error"])

    def save(self, data: StepResult) -> None:
        # pickled frames round-trip exactly
        for name, table in data.tables.items():
            with fileio.open(os.path.join(self.uri, f"{name}.pkl"), "wb") as handle:
                table.to_pickle(handle)
        stored = {
            "tables": list(data.tables),
            "payload": to_jsonable(data.payload),
            "residuals": to_jsonable(data.residuals),
            "error": data.error,
        }
        with fileio.open(os.path.join(self.uri, "result.json"), "w") as handle:
            json.dump(stored, handle)


def reports_domain_errors(func: Callable[..., StepResult]) -> Callable[..., StepResult]:
    """Turns a DomainError raised by a step body into a StepResult carrying the error."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs) -> StepResult:
        try:
            return func(*args, **kwargs)
        except DomainError as e:
            logging.error(f"{func.__name__} stopped on {type(e).__name__}: {e}")
            return StepResult(error={"kind": type(e).__name__, "message": str(e)})

    return wrapper


def package_versions() -> Dict[str, str]:
    versions = {}
    for name in TRACKED_PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "unavailable"
    return versions


def write_artifacts(
    result: StepResult,
    out_dir: str,
    fmt: str,
    command: str,
    params: dict,
    tolerances: dict,
    pipeline_run: Optional[str] = None,
) -> List[str]:
    """
    Writes the tables, the payload and the manifest of one run.

    Parameters:
    result (StepResult): Output of a step.
    out_dir (str): Target directory, created if missing.
    fmt (str): 'csv' or 'json' for the tables.
    command (str): Subcommand name.
    params (dict): Parameters the step was called with.
    tolerances (dict): Tolerances in force.
    pipeline_run (Optional[str]): Name of the pipeline run that produced the result.

    Returns:
    List[str]: Paths written, manifest last.
    """
    if fmt not in ("csv", "json"):
        raise ValueError(f"Unsupported output format: {fmt}")
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for name, table in result.tables.items():
        path = os.path.join(out_dir, f"{name}.{fmt}")
        if fmt == "csv":
            table.to_csv(path, index=False)
        else:
            table.to_json(path, orient="records", indent=2)
        paths.append(path)

    result_path = os.path.join(out_dir, "result.json")
    with open(result_path, "w") as handle:
        json.dump(to_jsonable(result.payload), handle, indent=2, sort_keys=True)
    paths.append(result_path)

    manifest = {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "command": command,
        "params": to_jsonable(params),
        "format": fmt,
        "tolerances": to_jsonable(tolerances),
        "residuals": to_jsonable(result.residuals),
        "versions": package_versions(),
        "pipeline_run": pipeline_run,
        "outputs": [os.path.basename(p) for p in paths],
    }
    manifest_path = os.path.join(out_dir, "manifest.json")
    with open(manifest_path, "w") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True)
    paths.append(manifest_path)
    logging.info(f"Wrote {len(paths)} files to {out_dir}.")
    return paths


def read_manifest(path: str) -> dict:
    with open(path, "r") as handle:
        manifest = json.load(handle)
    if manifest.get("schema_version") != MANIFEST_SCHEMA_VERSION:
        raise ValueError(f"Unsupported manifest schema: {manifest.get('schema_version')}")
    return manifest


def check_tolerance(result: StepResult, command: str, tol: Optional[float], tolerances: dict) -> None:
    """Records whether the headline residual of ``command`` is within ``tol``."""
    checked = TOLERANCE_CHECKED.get(command)
    if tol is None or checked is None:
        return
    tolerances["requested"] = tol
    result.residuals["within_tol"] = bool(result.residuals[checked] <= tol)
    if not result.residuals["within_tol"]:
        logging.warning(f"{checked} = {result.residuals[checked]:.3e} exceeds --tol {tol}.")


@step(enable_cache=False)
def export_artifacts_step(
    result: StepResult,
    out_dir: str,
    fmt: str,
    command: str,
    params: Dict[str, Any],
    tolerances: Dict[str, Any],
    tol: Optional[float] = None,
    track: bool = False,
) -> Annotated[Dict[str, Any], ArtifactConfig(name="lab_outputs")]:
    """
    Exports a step result as tables, result.json and manifest.json, and logs it to MLflow on request.

    Parameters:
    result (StepResult): Output of the computation step.
    out_dir (str): Target directory.
    fmt (str): 'csv' or 'json' for the tables.
    command (str): Subcommand name.
    params (Dict[str, Any]): Parameters of the computation step.
    tolerances (Dict[str, Any]): Tolerances in force.
    tol (Optional[float]): Requested tolerance for the headline residual.
    track (bool): Log the manifest and files to MLflow.

    Returns:
    Dict[str, Any]: Written paths (manifest last), residuals and the domain error, if any.
    """
    if result.error is not None:
        logging.error(f"'{command}' produced no output: {result.error['message']}")
        return {"paths": [], "residuals": {}, "error": result.error}

    tolerances = dict(tolerances)
    check_tolerance(result, command, tol, tolerances)
    run_name = get_step_context().pipeline_run.name
    paths = write_artifacts(result, out_dir, fmt, command, params, tolerances, run_name)
    if track:
        log_manifest(read_manifest(paths[-1]), paths, load_config().tracking)
    return {"paths": paths, "residuals": to_jsonable(result.residuals), "error": None}
