"""Run configuration for solves, sweeps and operator probes."""

import logging
import os
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml
from dotenv import load_dotenv

from periodic_fde.core.mesh import NodeFamily
from periodic_fde.core.newton import NewtonConfig
from periodic_fde.utils.helpers import parse_int_list, setup_logging

# Load environment variables
load_dotenv()

logger = logging.getLogger(__name__)


class SeedStrategy(Enum):
    """How the first Newton guess of a sweep is obtained."""

    HOPF = "hopf"
    FILE = "file"
    CONTINUATION = "continuation"


@dataclass
class SeedConfig:
    strategy: SeedStrategy = SeedStrategy.CONTINUATION
    from_y0: float = 0.1
    steps: int = 14
    intervals: int = 20
    degree: int = 5
    file: Optional[str] = None

    def __post_init__(self) -> None:
        if not isinstance(self.strategy, SeedStrategy):
            self.strategy = SeedStrategy(str(self.strategy).lower())
        self.from_y0 = float(self.from_y0)
        self.steps = int(self.steps)
        self.intervals = int(self.intervals)
        self.degree = int(self.degree)

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> "SeedConfig":
        data = dict(data or {})
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"Unknown seed settings: {', '.join(sorted(unknown))}")
        return cls(**data)


@dataclass
class RunConfig:
    """Configuration of a run.

    Sources, lowest to highest precedence: defaults, environment
    (PFDE_OUTPUT_DIR, PFDE_GRID_POINTS, LOG_LEVEL), the YAML file named by
    PFDE_CONFIG or --config, command-line overrides.
    """

    problem: str = "sd_proto"
    y0: float = 0.75
    L_list: List[int] = field(default_factory=lambda: [10, 20, 40, 80])
    m_list: List[int] = field(default_factory=lambda: [3, 5])
    grid_points: int = 10001
    node_family: NodeFamily = NodeFamily.GAUSS_LEGENDRE
    seed: SeedConfig = field(default_factory=SeedConfig)
    newton: NewtonConfig = field(default_factory=NewtonConfig)
    reference_factor: int = 8
    reference_degree_boost: int = 2
    output_dir: str = "results"
    log_level: str = "INFO"

    def __post_init__(self) -> None:
        self.y0 = float(self.y0)
        self.grid_points = int(self.grid_points)
        self.L_list = parse_int_list(self.L_list)
        self.m_list = parse_int_list(self.m_list)
        self.node_family = NodeFamily.parse(self.node_family)
        self.reference_factor = int(self.reference_factor)
        self.reference_degree_boost = int(self.reference_degree_boost)
        self.output_dir = str(self.output_dir)
        if isinstance(self.seed, dict):
            self.seed = SeedConfig.from_dict(self.seed)
        if isinstance(self.newton, dict):
            self.newton = NewtonConfig.from_dict(self.newton)

    @classmethod
    def from_env(cls) -> "RunConfig":
        """Create configuration from defaults and environment variables."""
        kwargs: Dict[str, Any] = {}

        output_dir = os.getenv("PFDE_OUTPUT_DIR")
        if output_dir:
            kwargs["output_dir"] = output_dir

        grid_points = os.getenv("PFDE_GRID_POINTS")
        if grid_points:
            try:
                kwargs["grid_points"] = int(grid_points)
            except ValueError:
                logger.warning(f"Invalid PFDE_GRID_POINTS format: {grid_points}")

        kwargs["log_level"] = os.getenv("LOG_LEVEL", "INFO")
        return cls(**kwargs)

    def merged(self, data: Dict[str, Any]) -> "RunConfig":
        """New config with the given keys replaced; nested seed/newton blocks merge key by key."""
        data = dict(data)
        known = {f.name for f in fields(self)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"Unknown configuration keys: {', '.join(sorted(unknown))}")

        if "seed" in data:
            seed = {**self._seed_dict(), **dict(data["seed"] or {})}
            data["seed"] = SeedConfig.from_dict(seed)
        if "newton" in data:
            newton = {**self.newton.to_dict(), **dict(data["newton"] or {})}
            data["newton"] = NewtonConfig.from_dict(newton)
        return replace(self, **data)

    def _seed_dict(self) -> Dict[str, Any]:
        return {f.name: getattr(self.seed, f.name) for f in fields(self.seed)}

    @classmethod
    def from_file(cls, path: Union[str, Path], base: Optional["RunConfig"] = None) -> "RunConfig":
        """Overlay a YAML key-value file on base (or on the environment defaults)."""
        path = Path(path)
        base = base or cls.from_env()
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = yaml.safe_load(f) or {}
        except (OSError, yaml.YAMLError) as e:
            logger.error(f"Failed to load configuration file {path}: {e}")
            raise

        if not isinstance(data, dict):
            raise ValueError(f"Configuration file {path} must contain a mapping")
        logger.debug(f"Loaded configuration keys from {path}: {sorted(data)}")
        return base.merged(data)

    @classmethod
    def load(cls, config_path: Optional[Union[str, Path]] = None, **overrides: Any) -> "RunConfig":
        """Apply every configuration source in precedence order; None overrides are ignored."""
        config = cls.from_env()
        config_path = config_path or os.getenv("PFDE_CONFIG")
        if config_path:
            config = cls.from_file(config_path, base=config)
        overrides = {key: value for key, value in overrides.items() if value is not None}
        if overrides:
            config = config.merged(overrides)
        return config

    def to_dict(self) -> Dict[str, Any]:
        seed = self._seed_dict()
        seed["strategy"] = self.seed.strategy.value
        return {
            "problem": self.problem,
            "y0": self.y0,
            "L_list": list(self.L_list),
            "m_list": list(self.m_list),
            "grid_points": self.grid_points,
            "node_family": self.node_family.value,
            "seed": seed,
            "newton": self.newton.to_dict(),
            "reference_factor": self.reference_factor,
            "reference_degree_boost": self.reference_degree_boost,
            "output_dir": self.output_dir,
            "log_level": self.log_level,
        }

    @property
    def output_path(self) -> Path:
        return Path(self.output_dir)

    def setup_logging(self) -> None:
        """Setup logging configuration."""
        setup_logging(self.log_level)
        logger.debug(f"Logging configured with level: {self.log_level}")

    def validate(self) -> None:
        """Validate configuration settings."""
        if self.grid_points < 2:
            raise ValueError("grid_points must be at least 2")
        if not self.L_list or any(L < 1 for L in self.L_list):
            raise ValueError("L_list must contain positive integers")
        if not self.m_list or any(m < 1 for m in self.m_list):
            raise ValueError("m_list must contain positive integers")
        if self.reference_factor < 1:
            raise ValueError("reference_factor must be at least 1")
        if self.reference_degree_boost < 0:
            raise ValueError("reference_degree_boost must be non-negative")
        if self.seed.steps < 1:
            raise ValueError("seed.steps must be at least 1")
        if self.seed.intervals < 1 or self.seed.degree < 1:
            raise ValueError("seed.intervals and seed.degree must be positive")
        self.newton.validate()

        if self.seed.strategy is SeedStrategy.FILE and not self.seed.file:
            raise ValueError("seed.file is required for the file seed strategy")
        if self.seed.file and self.seed.strategy is not SeedStrategy.FILE:
            logger.warning(f"seed.file is set but ignored by the '{self.seed.strategy.value}' seed strategy")
        if self.seed.strategy is SeedStrategy.HOPF and abs(self.y0) > 0.2:
            logger.warning(f"Hopf seeding at y0={self.y0} is far from the bifurcation; consider the continuation strategy")
        if self.reference_factor < 8:
            logger.warning("reference_factor below 8 may let reference error pollute consistency measurements")

        logger.debug("Configuration validation passed")
