"""
Configuration Manager - Tolerances, search budgets and run defaults.
"""

import logging
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

import yaml

from .errors import ConfigError

logger = logging.getLogger(__name__)

THREADS_ENV_VAR = "CCPNET_THREADS"


@dataclass(frozen=True)
class ToleranceConfig:
    """Every numerical tolerance in one place."""

    tol_idem: float = 1e-9
    tol_comm: float = 1e-9
    tol_trace: float = 1e-10
    tol_psd: float = 1e-10
    faithful_eps: float = 1e-6
    prob_floor: float = 1e-9
    tol_meet: float = 1e-8
    tol_herm: float = 1e-10
    tol_screen: float = 1e-9
    eps_strict: float = 1e-12
    tol_geo: float = 1e-12
    bell_margin: float = 1e-7
    support_tol: float = 1e-10

    def with_overrides(self, overrides: Mapping[str, float]) -> "ToleranceConfig":
        """
        Return a copy with some tolerances replaced.

        Raises:
            ConfigError: If a name is not a known tolerance or a value is not positive
        """
        known = {f.name for f in fields(self)}
        cleaned: Dict[str, float] = {}
        for name, value in overrides.items():
            key = name.replace("-", "_").lower()
            if key not in known:
                raise ConfigError(
                    f"Unknown tolerance '{name}'. Known: {', '.join(sorted(known))}"
                )
            try:
                number = float(value)
            except (TypeError, ValueError):
                raise ConfigError(f"Tolerance '{name}' must be a number, got {value!r}")
            if not number > 0:
                raise ConfigError(f"Tolerance '{name}' must be positive, got {number}")
            cleaned[key] = number
        return replace(self, **cleaned)


@dataclass(frozen=True)
class SearchDefaults:
    """Budgets for seesaw and common-cause search."""

    restarts: int = 8
    max_iterations: int = 200
    max_rank_tuples: int = 64
    max_enumeration: int = 65536
    seed: int = 1


@dataclass
class CcpnetConfig:
    """Complete run configuration."""

    tolerances: ToleranceConfig = field(default_factory=ToleranceConfig)
    search: SearchDefaults = field(default_factory=SearchDefaults)

    # Geometry sampling
    geometry_samples: int = 100_000
    emptiness_samples: int = 1_000_000

    # Lattice
    lattice_dim_cap: int = 4096
    demo_sites: int = 6
    demo_weight: float = 0.9
    demo_rest_bias: float = 0.02

    # Parallelism (None means: take CCPNET_THREADS, else 1)
    threads: Optional[int] = None

    def with_tolerance_overrides(self, overrides: Mapping[str, float]) -> "CcpnetConfig":
        """Return a copy whose tolerances carry the given overrides."""
        return replace(self, tolerances=self.tolerances.with_overrides(overrides))

    def resolved_threads(self) -> int:
        """Worker count after applying the environment variable."""
        if self.threads is not None:
            return max(1, int(self.threads))
        env_value = os.environ.get(THREADS_ENV_VAR)
        if env_value:
            try:
                return max(1, int(env_value))
            except ValueError:
                logger.warning(f"Ignoring non-integer {THREADS_ENV_VAR}={env_value!r}")
        return 1


class ConfigManager:
    """Loads and layers ccpnet configuration."""

    # Config file locations (checked in order)
    USER_CONFIG_DIR = Path.home() / ".config" / "ccpnet"
    USER_CONFIG_FILE = USER_CONFIG_DIR / "config.yaml"
    PROJECT_CONFIG_FILE = Path(__file__).parent.parent.parent / "config" / "settings.yaml"

    # YAML section -> config attribute for scalar settings
    _SCALAR_KEYS = {
        ("geometry", "samples"): "geometry_samples",
        ("geometry", "emptiness_samples"): "emptiness_samples",
        ("lattice", "dim_cap"): "lattice_dim_cap",
        ("lattice", "demo_sites"): "demo_sites",
        ("lattice", "demo_weight"): "demo_weight",
        ("lattice", "demo_rest_bias"): "demo_rest_bias",
        ("parallel", "threads"): "threads",
    }

    def __init__(self, project_file: Optional[Path] = None, user_file: Optional[Path] = None):
        """
        Initialize config manager.

        Args:
            project_file: Override for the project settings file
            user_file: Override for the user settings file
        """
        self.project_file = project_file or self.PROJECT_CONFIG_FILE
        self.user_file = user_file or self.USER_CONFIG_FILE
        self.config = self.load_config()

    def load_config(self) -> CcpnetConfig:
        """
        Load configuration from available sources.

        Priority:
        1. User config (~/.config/ccpnet/config.yaml)
        2. Project config (./config/settings.yaml)
        3. Built-in defaults

        Returns:
            CcpnetConfig with merged settings
        """
        config = CcpnetConfig()

        if self.project_file.exists():
            config = self._merge_config(config, self._load_yaml_config(self.project_file))

        if self.user_file.exists():
            config = self._merge_config(config, self._load_yaml_config(self.user_file))

        return config

    def _load_yaml_config(self, path: Path) -> Dict[str, Any]:
        """Load YAML config file."""
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = yaml.safe_load(f) or {}
        except (OSError, yaml.YAMLError) as e:
            logger.warning(f"Could not load config from {path}: {e}")
            return {}
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        return data

    def _merge_config(self, config: CcpnetConfig, yaml_data: Dict[str, Any]) -> CcpnetConfig:
        """Merge YAML data into config object; unknown keys are rejected."""
        known_sections = {"tolerances", "search"} | {s for s, _ in self._SCALAR_KEYS}
        for section in yaml_data:
            if section not in known_sections:
                raise ConfigError(f"Unknown configuration section '{section}'")

        if "tolerances" in yaml_data:
            config = replace(
                config,
                tolerances=config.tolerances.with_overrides(yaml_data["tolerances"] or {}),
            )

        if "search" in yaml_data:
            search = yaml_data["search"] or {}
            known = {f.name for f in fields(SearchDefaults)}
            for key in search:
                if key not in known:
                    raise ConfigError(f"Unknown search setting '{key}'")
            config = replace(
                config,
                search=replace(config.search, **{k: int(v) for k, v in search.items()}),
            )

        for section in {s for s, _ in self._SCALAR_KEYS}:
            if section not in yaml_data:
                continue
            values = yaml_data[section] or {}
            for key, value in values.items():
                attr_name = self._SCALAR_KEYS.get((section, key))
                if attr_name is None:
                    raise ConfigError(f"Unknown setting '{section}.{key}'")
                setattr(config, attr_name, value)

        return config

    def save_user_config(self, config: Optional[CcpnetConfig] = None) -> None:
        """
        Save configuration to the user config file.

        Args:
            config: Config to save (uses current if None)
        """
        if config is None:
            config = self.config

        self.user_file.parent.mkdir(parents=True, exist_ok=True)

        yaml_data = {
            "tolerances": asdict(config.tolerances),
            "search": asdict(config.search),
            "geometry": {
                "samples": config.geometry_samples,
                "emptiness_samples": config.emptiness_samples,
            },
            "lattice": {
                "dim_cap": config.lattice_dim_cap,
                "demo_sites": config.demo_sites,
                "demo_weight": config.demo_weight,
                "demo_rest_bias": config.demo_rest_bias,
            },
        }
        if config.threads is not None:
            yaml_data["parallel"] = {"threads": config.threads}

        with open(self.user_file, "w", encoding="utf-8") as f:
            yaml.safe_dump(yaml_data, f, default_flow_style=False, sort_keys=False)

    def get_config_location(self) -> Path:
        """Get path to user config file."""
        return self.user_file

    def to_dict(self) -> Dict[str, Any]:
        """Convert config to dictionary."""
        return asdict(self.config)


# Global config instance
_config_manager: Optional[ConfigManager] = None


def get_config() -> CcpnetConfig:
    """Get the process-wide configuration."""
    global _config_manager
    if _config_manager is None:
        _config_manager = ConfigManager()
    return _config_manager.config


def set_config(config: CcpnetConfig) -> None:
    """Replace the process-wide configuration (CLI overrides, tests)."""
    global _config_manager
    if _config_manager is None:
        _config_manager = ConfigManager()
    _config_manager.config = config


def reset_config() -> None:
    """Forget the process-wide configuration; next access reloads files."""
    global _config_manager
    _config_manager = None


def default_tolerances() -> ToleranceConfig:
    """Tolerances of the process-wide configuration."""
    return get_config().tolerances
