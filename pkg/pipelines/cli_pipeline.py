import inspect
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import click

from pipelines.lab_pipeline import COMMANDS, lab_pipeline
from src.config import load_config
from steps.artifact_writer import read_manifest

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_DOMAIN = 3


@dataclass(frozen=True)
class RunConfig:
    """One CLI invocation: subcommand, its parameters and where the artifacts go."""

    command: str
    params: Dict[str, Any] = field(default_factory=dict)
    output_dir: Optional[str] = None
    format: Optional[str] = None
    track: bool = False
    tol: Optional[float] = None


@dataclass
class DispatchOutcome:
    exit_code: int
    paths: List[str] = field(default_factory=list)
    residuals: Dict[str, Any] = field(default_factory=dict)
    error: Optional[Dict[str, str]] = None


def _report_error(kind: str, message: str) -> Dict[str, str]:
    report = {"status": "error", "kind": kind, "message": message}
    click.echo(json.dumps(report), err=True)
    return report


def _validate(config: RunConfig) -> None:
    if config.command not in COMMANDS:
        raise click.UsageError(f"Unknown subcommand '{config.command}'. Choose from: {', '.join(COMMANDS)}.")
    fmt = config.format or load_config().output.format
    if fmt not in ("csv", "json"):
        raise click.BadParameter(f"format must be csv or json, got '{fmt}'.")
    # zenml steps expose *args/**kwargs; the entrypoint keeps the real signature
    try:
        inspect.signature(COMMANDS[config.command].entrypoint).bind(**config.params)
    except TypeError as e:
        raise click.UsageError(f"Bad parameters for '{config.command}': {e}")


def dispatch(config: RunConfig) -> DispatchOutcome:
    """
    Runs one subcommand as a ZenML pipeline run and reads back what its export step wrote.

    The export step opens no file when the computation step reported a domain error,
    so a failing run leaves no partial output.

    Parameters:
    config (RunConfig): The invocation.

    Returns:
    DispatchOutcome: Exit code (0 ok, 1 failure, 2 usage, 3 domain), written paths and residuals.
    """
    lab_config = load_config()
    try:
        _validate(config)
    except click.ClickException as e:
        logging.error(f"Usage error: {e.format_message()}")
        return DispatchOutcome(EXIT_USAGE, error=_report_error("usage", e.format_message()))

    logging.info(f"Running '{config.command}' with {config.params}.")
    try:
        run = lab_pipeline(
            command=config.command,
            params=dict(config.params),
            out_dir=config.output_dir or os.path.join(lab_config.output.directory, config.command),
            fmt=config.format or lab_config.output.format,
            tolerances=dict(lab_config.as_dict()["spectral"]),
            tol=config.tol,
            track=config.track or lab_config.tracking.enabled,
        )
        outcome = run.steps["export_artifacts_step"].output.load()
    except Exception as e:
        logging.error(f"Error while running '{config.command}': {e}")
        return DispatchOutcome(EXIT_FAILURE, error=_report_error(type(e).__name__, str(e)))

    if outcome["error"] is not None:
        return DispatchOutcome(
            EXIT_DOMAIN, error=_report_error(outcome["error"]["kind"], outcome["error"]["message"])
        )
    return DispatchOutcome(EXIT_OK, outcome["paths"], outcome["residuals"])


def replay_config(manifest_path: str, output_dir: Optional[str] = None) -> RunConfig:
    """Rebuilds the RunConfig recorded in a manifest."""
    manifest = read_manifest(manifest_path)
    requested = manifest.get("tolerances", {}).get("requested")
    return RunConfig(
        command=manifest["command"],
        params=manifest.get("params", {}),
        output_dir=output_dir,
        format=manifest.get("format"),
        tol=requested,
    )
