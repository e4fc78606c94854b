"""Run configuration: defaults, JSON config files and flag overrides."""

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

from sucs.core.errors import ConfigError

logger = logging.getLogger(__name__)

DEFAULT_SEED = 0xC0FFEE
WORKERS_ENV = "SUCS_WORKERS"
OUTPUT_FORMATS = ("csv", "json")
_SEED_LIMIT = 2 ** 64


@dataclass
class RunConfig:
    """Parameters of one CLI/MCP run.

    ``params`` holds the command-specific record (Hamiltonian, initial state,
    time span, ...). Precedence is defaults < config file < flags.
    """

    command: str
    params: Dict[str, Any] = field(default_factory=dict)
    seed: int = DEFAULT_SEED
    output: Optional[str] = None
    format: str = "csv"
    workers: Optional[int] = None
    log_level: str = "INFO"

    def __post_init__(self):
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or not 0 <= self.seed < _SEED_LIMIT:
            raise ConfigError(f"Seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if self.format not in OUTPUT_FORMATS:
            raise ConfigError(f"Unknown output format: {self.format}")
        if self.workers is not None and self.workers < 1:
            raise ConfigError(f"Worker count must be positive, got {self.workers}")

    def param(self, key: str, default: Any = None) -> Any:
        return self.params.get(key, default)


def read_config_file(path: str) -> Dict[str, Any]:
    """Read a JSON config file; a top-level ``defaults`` section is merged in."""
    config_path = Path(path)
    if not config_path.exists():
        raise ConfigError(f"Config file does not exist: {path}")
    try:
        with open(config_path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config file is not valid JSON: {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"Config file must hold a JSON object: {path}")

    merged = dict(data.get("defaults", {}))
    merged.update({k: v for k, v in data.items() if k not in ("defaults", "mcp_server", "docker")})
    return merged


def resolve_workers(workers: Optional[int], environ: Mapping[str, str] = os.environ) -> int:
    """Worker count: explicit value, else ``SUCS_WORKERS``, else available parallelism."""
    if workers is not None:
        return workers
    raw = environ.get(WORKERS_ENV)
    if raw:
        try:
            value = int(raw)
        except ValueError as e:
            raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from e
        if value < 1:
            raise ConfigError(f"{WORKERS_ENV} must be positive, got {value}")
        return value
    return os.cpu_count() or 1


def load_run_config(
    command: str,
    flags: Mapping[str, Any],
    config_path: Optional[str] = None,
    environ: Mapping[str, str] = os.environ,
) -> RunConfig:
    """Build a RunConfig; flags set to None count as not given."""
    file_values: Dict[str, Any] = read_config_file(config_path) if config_path else {}

    params = dict(file_values.get("params", {}))
    top_level = {"seed", "output", "format", "workers", "log_level", "params"}
    for key, value in file_values.items():
        if key not in top_level:
            params.setdefault(key, value)

    def pick(key: str, default: Any) -> Any:
        if flags.get(key) is not None:
            return flags[key]
        return file_values.get(key, default)

    for key, value in flags.items():
        if key not in top_level and value is not None:
            params[key] = value

    config = RunConfig(
        command=command,
        params=params,
        seed=pick("seed", DEFAULT_SEED),
        output=pick("output", None),
        format=pick("format", "csv"),
        workers=resolve_workers(pick("workers", None), environ),
        log_level=str(pick("log_level", "INFO")).upper(),
    )
    logger.debug(f"Resolved run config for {command}: seed={config.seed}, workers={config.workers}")
    return config
