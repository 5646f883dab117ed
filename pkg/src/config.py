import logging
import os
from dataclasses import dataclass, field, fields
from functools import lru_cache
from typing import Any, Dict, Optional

import yaml

from src.exceptions import DomainError

# Setup logging configuration
logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(levelname)s - %(message)s")

CONFIG_ENV_VAR = "UMBRAL_LAB_CONFIG"
OUTPUT_DIR_ENV_VAR = "UMBRAL_LAB_OUTPUT_DIR"
DEFAULT_CONFIG_PATH = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "config.yaml")


@dataclass(frozen=True)
class ExactConfig:
    stirling_cap: int = 64


@dataclass(frozen=True)
class OperatorConfig:
    default_order: int = 16
    order_slack: int = 8
    test_degree: int = 4


@dataclass(frozen=True)
class SpectralConfig:
    linalg_tol: float = 1e-12
    quadrature_tol: float = 1e-6
    residual_tol: float = 1e-8
    norm_tol: float = 1e-10
    energy_tol: float = 1e-8
    quadrature_nodes: int = 2048
    quadrature_panels: int = 8
    pair_gap_ratio: float = 1e-3
    divergence_threshold: float = 1e6
    divergence_terms: int = 50
    tail_tol: float = 0.05


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "outputs"
    format: str = "csv"


@dataclass(frozen=True)
class TrackingConfig:
    enabled: bool = False
    experiment: str = "umbral_lattice_lab"
    tracking_uri: str = "file:./mlruns"


@dataclass(frozen=True)
class LabConfig:
    exact: ExactConfig = field(default_factory=ExactConfig)
    operators: OperatorConfig = field(default_factory=OperatorConfig)
    spectral: SpectralConfig = field(default_factory=SpectralConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    tracking: TrackingConfig = field(default_factory=TrackingConfig)

    def as_dict(self) -> Dict[str, Dict[str, Any]]:
        """Plain nested dict, used for run manifests."""
        return {
            section.name: {f.name: getattr(getattr(self, section.name), f.name) for f in fields(getattr(self, section.name))}
            for section in fields(self)
        }


_SECTIONS = {
    "exact": ExactConfig,
    "operators": OperatorConfig,
    "spectral": SpectralConfig,
    "output": OutputConfig,
    "tracking": TrackingConfig,
}


def _build_section(name: str, raw: Optional[Dict[str, Any]]):
    section_cls = _SECTIONS[name]
    if raw is None:
        return section_cls()
    if not isinstance(raw, dict):
        logging.error(f"Config section '{name}' must be a mapping.")
        raise DomainError(f"Config section '{name}' must be a mapping, got {type(raw).__name__}.")
    known = {f.name: f for f in fields(section_cls)}
    unknown = set(raw) - set(known)
    if unknown:
        logging.warning(f"Ignoring unknown keys in config section '{name}': {sorted(unknown)}")
    values = {}
    for key, value in raw.items():
        if key not in known:
            continue
        default = known[key].default
        # YAML reads 1e-12 without a dot as a string
        if isinstance(default, float) and isinstance(value, (int, str)) and not isinstance(value, bool):
            value = float(value)
        values[key] = value
    return section_cls(**values)


@lru_cache(maxsize=None)
def _load_from_path(path: str) -> LabConfig:
    if not os.path.exists(path):
        logging.warning(f"Config file {path} not found, using built-in defaults.")
        raw: Dict[str, Any] = {}
    else:
        with open(path, "r") as handle:
            raw = yaml.safe_load(handle) or {}
    if not isinstance(raw, dict):
        logging.error(f"Config file {path} does not hold a mapping.")
        raise DomainError(f"Config file {path} does not hold a mapping.")

    sections = {name: _build_section(name, raw.get(name)) for name in _SECTIONS}
    output_override = os.environ.get(OUTPUT_DIR_ENV_VAR)
    if output_override:
        sections["output"] = OutputConfig(directory=output_override, format=sections["output"].format)
    return LabConfig(**sections)


def load_config(path: Optional[str] = None) -> LabConfig:
    """
    Loads the lab configuration.

    Parameters:
    path (Optional[str]): YAML file to read. Defaults to $UMBRAL_LAB_CONFIG, then the
        repository config.yaml.

    Returns:
    LabConfig: The frozen configuration; missing keys take their defaults.
    """
    resolved = path or os.environ.get(CONFIG_ENV_VAR) or DEFAULT_CONFIG_PATH
    return _load_from_path(os.path.abspath(resolved))
