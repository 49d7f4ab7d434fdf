"""Run configuration, config files and provenance records for the CLI."""

from __future__ import annotations

import hashlib
import json
import platform
from dataclasses import asdict, dataclass, field

try:  # stdlib on 3.11+
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    tomllib = None

__all__ = ["RunConfig", "ConfigError", "load_config_file", "provenance"]

DEFAULT_SEED = 7


class ConfigError(ValueError):
    """Invalid or contradictory run configuration."""


@dataclass
class RunConfig:
    """Aggregated knobs for a pipeline run.

    Exactly one input source must be set: a generator model spec (``model``)
    or a matrix file (``matrix_path``).  Partitioning is structured by
    default (matching the model dimensionality), "general" for the
    multilevel partitioner, or "map" with ``map_path``.
    """

    model: dict | None = None
    matrix_path: str | None = None
    partition_method: str = "structured"
    elements: int = 8
    hops: int | None = None
    map_path: str | None = None
    mu: float = 2.0
    sigma: float = 1.0
    tau: float = 0.1
    c_window: float = 3.0
    window_halfwidth: float | None = None
    eta_abs: float | None = None
    eta_rel: float = 20.0
    local_solver: str = "auto"
    seed: int = DEFAULT_SEED
    threads: int | None = None
    oracle: bool = False
    oracle_cap: int = 5000
    output_format: str = "json"
    output_dir: str = "."

    def validate(self):
        if (self.model is None) == (self.matrix_path is None):
            raise ConfigError("exactly one input source required: model or matrix_path")
        if self.partition_method not in ("structured", "general", "map"):
            raise ConfigError(f"unknown partition method {self.partition_method!r}")
        if self.partition_method == "map" and not self.map_path:
            raise ConfigError("partition method 'map' requires map_path")
        if self.window_halfwidth is not None and self.window_halfwidth <= 0:
            raise ConfigError("window halfwidth must be positive")
        if self.output_format not in ("json", "csv"):
            raise ConfigError(f"unknown output format {self.output_format!r}")
        return self

    def to_dict(self) -> dict:
        return asdict(self)


def load_config_file(path) -> dict:
    """Read a JSON (or, on 3.11+, TOML) config file into a plain dict."""
    text = open(path, "rb").read()
    if str(path).endswith(".toml"):
        if tomllib is None:
            raise ConfigError("TOML configs need Python 3.11+; use JSON here")
        return tomllib.loads(text.decode())
    try:
        return json.loads(text.decode())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"could not parse config {path}: {exc}") from exc


def config_hash(config: RunConfig) -> str:
    canonical = json.dumps(config.to_dict(), sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()


def provenance(config: RunConfig) -> dict:
    """Everything needed to re-run this configuration bit-identically."""
    import numpy
    import scipy

    from . import __version__

    return {
        "config": config.to_dict(),
        "config_hash": config_hash(config),
        "seed": config.seed,
        "versions": {
            "specslice": __version__,
            "numpy": numpy.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
    }
