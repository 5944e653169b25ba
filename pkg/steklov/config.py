import hashlib
import json
import os
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError, field_validator

from steklov import __version__
from steklov.errors import ConfigError

load_dotenv()

DEFAULT_EPSILON = 0.1
DEFAULT_GRID = 2 ** 16
DEFAULT_N_LIST = [16, 32, 64, 128, 256, 512]
LARGE_N = 1024
EXCLUSION_RADIUS = 0.3
MOMENT_SLACK = 8
CRITERIA_PATH = Path(__file__).parent / "criteria.json"


class Precision(str, Enum):
    STANDARD = "standard"
    HIGH = "high"


class MomentSource(str, Enum):
    CLOSED_FORM = "closed-form"
    GRID = "grid"
    EXPLICIT = "explicit"


class Suite(str, Enum):
    L4 = "l4"
    L1 = "l1"
    GROWTH = "growth"
    IDENTITIES = "identities"
    ALL = "all"


class PlotKind(str, Enum):
    GAMMA_VS_MAIN = "gamma_vs_main"
    WEIGHT = "weight"
    SUPNORM_CURVE = "supnorm_curve"


def env_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{name}={raw!r} is not a number")


def env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{name}={raw!r} is not an integer")


def default_cache_dir() -> Path:
    return Path(os.getenv("OPUC_CACHE_DIR", Path.home() / ".cache" / "opuc-steklov"))


class RunConfig(BaseModel):
    epsilon: float = Field(
        default=DEFAULT_EPSILON,
        description="Jump strength of the two-arc weight",
        gt=0.0,
        le=0.3,
    )
    n: int = Field(default=16, description="Block size of the constructed scheme", ge=1)
    n_list: List[int] = Field(
        default_factory=lambda: list(DEFAULT_N_LIST),
        description="Block sizes for the growth and l1 suites",
        min_length=1,
    )
    N: Optional[int] = Field(default=None, description="Number of Schur parameters to extract", ge=1)
    m: int = Field(default=DEFAULT_GRID, description="Grid size, a positive multiple of 4", ge=4)
    precision: Precision = Precision.STANDARD
    out_dir: Path = Field(default=Path("steklov_out"), description="Artifact directory")
    cache_dir: Path = Field(default_factory=default_cache_dir)
    seed: int = Field(default=42, description="Seed for random-scheme identity checks")
    exclusion_radius: float = Field(
        default=EXCLUSION_RADIUS,
        description="Distance from the jumps at +-pi/2 excluded from pointwise comparisons",
        gt=0.0,
        lt=1.5,
    )
    large: bool = False

    @field_validator("m")
    @classmethod
    def _grid_multiple_of_four(cls, value: int) -> int:
        if value % 4:
            raise ValueError(f"grid size {value} is not a multiple of 4")
        return value

    @field_validator("n_list")
    @classmethod
    def _sorted_block_sizes(cls, value: List[int]) -> List[int]:
        if any(n < 1 for n in value):
            raise ValueError(f"block sizes must be positive, got {value}")
        return sorted(set(value))

    @classmethod
    def from_env(cls, **overrides: Any) -> "RunConfig":
        """Defaults from OPUC_* variables, then explicit (non-None) overrides"""
        values: Dict[str, Any] = {
            "epsilon": env_float("OPUC_EPSILON", DEFAULT_EPSILON),
            "m": env_int("OPUC_GRID", DEFAULT_GRID),
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        try:
            config = cls(**values)
        except ValidationError as e:
            raise ConfigError(str(e)) from e
        if config.large and LARGE_N not in config.n_list:
            config = config.model_copy(update={"n_list": config.n_list + [LARGE_N]})
        return config

    @property
    def extract_count(self) -> int:
        """Schur parameters to extract: explicit N, else the largest block size in use"""
        if self.N is not None:
            return self.N
        return max(self.n, max(self.n_list))

    @property
    def moment_count(self) -> int:
        return self.extract_count + MOMENT_SLACK


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), default=str)


def config_hash(subset: Dict[str, Any]) -> str:
    """SHA-256 over the canonical JSON of an artifact-relevant config subset plus the code version"""
    payload = canonical_json({"code_version": __version__, **subset})
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def load_criteria(path: Optional[Path] = None) -> Dict[str, Any]:
    path = Path(path) if path else CRITERIA_PATH
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read criteria file {path}: {e}") from e
