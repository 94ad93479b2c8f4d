# core/config.py
import os
import json
from dataclasses import dataclass, asdict, fields
from pathlib import Path
from typing import Optional, Dict, Any, Union

from dotenv import load_dotenv

from core.exceptions import InvalidConfigError

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib


@dataclass
class Config:
    """Configuration for the FlexADMM application"""

    # Output settings
    output_dir: str = "results"
    float_digits: int = 17

    # Parallelism
    threads: Optional[int] = None
    workers: int = 1

    # Logging
    log_level: str = "WARNING"

    # Spectral estimation settings
    power_tol: float = 1e-9
    power_max_iters: int = 5000
    power_seed: int = 0x5EED

    # Run guard settings
    divergence_threshold: float = 1e12
    divergence_grace_epochs: int = 10
    max_epochs: int = 50000

    def __post_init__(self):
        # Load from environment variables
        load_dotenv()
        self.output_dir = os.getenv("FLEXADMM_OUTPUT_DIR", self.output_dir)
        self.log_level = os.getenv("FLEXADMM_LOG_LEVEL", self.log_level)

        threads = os.getenv("FLEXADMM_THREADS")
        if threads:
            try:
                self.threads = int(threads)
            except ValueError:
                raise InvalidConfigError(f"FLEXADMM_THREADS must be an integer, got {threads!r}") from None

        # Set default values
        if self.threads is None:
            self.threads = os.cpu_count() or 1

        self.validate()

    def validate(self):
        if self.threads < 1:
            raise InvalidConfigError(f"threads must be >= 1, got {self.threads}")
        if self.workers < 1:
            raise InvalidConfigError(f"workers must be >= 1, got {self.workers}")
        if self.power_tol <= 0:
            raise InvalidConfigError(f"power_tol must be > 0, got {self.power_tol}")
        if self.divergence_threshold <= 0:
            raise InvalidConfigError("divergence_threshold must be > 0")

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "Config":
        """Load configuration from a JSON or TOML file"""
        data = load_mapping(path)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidConfigError(f"unknown config keys in {path}: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, json_file: str) -> "Config":
        return cls.from_file(json_file)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def load_mapping(path: Union[str, Path]) -> Dict[str, Any]:
    """Read a JSON or TOML file into a dict, chosen by suffix"""
    path = Path(path)
    try:
        if path.suffix.lower() == ".toml":
            with open(path, "rb") as f:
                data = tomllib.load(f)
        else:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as e:
        raise InvalidConfigError(f"cannot parse {path}: {e}") from e

    if not isinstance(data, dict):
        raise InvalidConfigError(f"{path} must contain a table/object at top level")
    return data
