"""
Configuration management with environment variable support and validation.
"""

import os
import yaml
from pathlib import Path
from typing import Dict, Any, Optional, List
from dataclasses import dataclass, field, asdict, fields

from dotenv import load_dotenv

from src.shift_leak_lab.utils.exceptions import ConfigurationError


SCHEMES = ("rll", "sll")
DEFENSES = ("dfs", "mssd")
POLICIES = ("interleaved", "random", "explicit")
FILLS = ("zero", "random")


@dataclass
class LockingConfig:
    """Key-gate insertion settings."""
    scheme: str = "rll"
    key_bits: int = 16
    seed: int = 1
    sll_candidate_pool: int = 256


@dataclass
class ScanConfig:
    """Scan stitching settings."""
    chains: List[int] = field(default_factory=lambda: [1])
    policy: str = "interleaved"
    seed: int = 1


@dataclass
class ChipConfig:
    """Simulated oracle chip settings."""
    defense: str = "dfs"
    trace: bool = False


@dataclass
class AtpgConfig:
    """Leak-condition generation settings."""
    solver: str = "glucose4"
    minimize_constraints: bool = True
    dump_dir: Optional[str] = None


@dataclass
class AttackConfig:
    """Key-recovery settings."""
    seed: int = 1
    dip_iteration_factor: int = 4
    dip_iteration_ceiling: int = 10000
    max_passes: int = 4
    fill: str = "zero"
    validate_conditions: bool = False
    validation_unknown_limit: int = 16
    scan_check_trials: int = 4
    scan_check_budget: int = 64


@dataclass
class ReportConfig:
    """Overhead and coverage report settings."""
    budget: int = 10000
    seed: int = 1
    random_block: int = 256
    include_attack: bool = True
    export_excel: bool = True


@dataclass
class LabConfig:
    """Main lab configuration."""
    locking: LockingConfig = field(default_factory=LockingConfig)
    scan: ScanConfig = field(default_factory=ScanConfig)
    chip: ChipConfig = field(default_factory=ChipConfig)
    atpg: AtpgConfig = field(default_factory=AtpgConfig)
    attack: AttackConfig = field(default_factory=AttackConfig)
    report: ReportConfig = field(default_factory=ReportConfig)
    output_dir: str = "output"
    log_level: str = "INFO"


@dataclass
class RunConfig:
    """Fully resolved parameters of one CLI run; echoed into every report."""
    input_paths: List[str]
    key_bits: int
    scheme: str
    chains: List[int]
    defense: str
    seed_lock: int
    seed_stitch: int
    seed_attack: int
    output_dir: str
    dip_iteration_factor: int
    dip_iteration_ceiling: int
    policy: str = "interleaved"
    budget: int = 10000
    key_file: Optional[str] = None
    layout_file: Optional[str] = None
    trace: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def seeds(self) -> Dict[str, int]:
        return {"lock": self.seed_lock, "stitch": self.seed_stitch, "attack": self.seed_attack}


class ConfigManager:
    """Configuration manager with environment variable support."""

    ENV_MAPPINGS = {
        "SHIFT_LEAK_KEY_BITS": "locking.key_bits",
        "SHIFT_LEAK_SCHEME": "locking.scheme",
        "SHIFT_LEAK_SEED_LOCK": "locking.seed",
        "SHIFT_LEAK_CHAINS": "scan.chains",
        "SHIFT_LEAK_SEED_STITCH": "scan.seed",
        "SHIFT_LEAK_DEFENSE": "chip.defense",
        "SHIFT_LEAK_SEED_ATTACK": "attack.seed",
        "SHIFT_LEAK_SOLVER": "atpg.solver",
        "SHIFT_LEAK_OUTPUT_DIR": "output_dir",
        "SHIFT_LEAK_LOG_LEVEL": "log_level",
    }

    INT_KEYS = {
        "key_bits", "seed", "sll_candidate_pool", "dip_iteration_factor", "dip_iteration_ceiling",
        "max_passes", "validation_unknown_limit", "scan_check_trials", "scan_check_budget",
        "budget", "random_block",
    }
    BOOL_KEYS = {"trace", "minimize_constraints", "validate_conditions", "include_attack", "export_excel"}

    def __init__(self, config_path: Optional[str] = None, env_file: Optional[str] = ".env"):
        self.config_path = config_path or "config/lab_config.yaml"
        self.env_file = env_file
        self._config: Optional[LabConfig] = None

    def load_config(self, reload: bool = False) -> LabConfig:
        """Load configuration from file and environment variables."""
        if self._config is not None and not reload:
            return self._config

        if self.env_file:
            load_dotenv(self.env_file, override=False)

        raw_config: Dict[str, Any] = {}
        config_file = Path(self.config_path)
        if config_file.exists():
            try:
                with open(config_file, "r") as f:
                    raw_config = yaml.safe_load(f) or {}
            except yaml.YAMLError as e:
                raise ConfigurationError(f"Invalid YAML configuration: {e}")
            if not isinstance(raw_config, dict):
                raise ConfigurationError(f"Configuration root must be a mapping: {self.config_path}")

        self._apply_env_overrides(raw_config)
        self._config = self._create_config(raw_config)
        return self._config

    def _apply_env_overrides(self, config: Dict[str, Any]) -> None:
        """Apply environment variable overrides."""
        for env_var, config_path in self.ENV_MAPPINGS.items():
            value = os.getenv(env_var)
            if value:
                self._set_nested_value(config, config_path, value)

    def _set_nested_value(self, config: Dict, path: str, value: str) -> None:
        """Set nested configuration value from dot notation path."""
        keys = path.split(".")
        current = config
        for key in keys[:-1]:
            current = current.setdefault(key, {})

        try:
            if keys[-1] in self.INT_KEYS:
                value = int(value)
            elif keys[-1] in self.BOOL_KEYS:
                value = value.lower() == "true"
            elif keys[-1] == "chains":
                value = [int(part) for part in value.replace(",", " ").split()]
        except ValueError:
            raise ConfigurationError(f"Invalid value for {path}: {value!r}")

        current[keys[-1]] = value

    def _create_config(self, raw_config: Dict[str, Any]) -> LabConfig:
        try:
            config = LabConfig(
                locking=LockingConfig(**raw_config.get("locking", {})),
                scan=ScanConfig(**raw_config.get("scan", {})),
                chip=ChipConfig(**raw_config.get("chip", {})),
                atpg=AtpgConfig(**raw_config.get("atpg", {})),
                attack=AttackConfig(**raw_config.get("attack", {})),
                report=ReportConfig(**raw_config.get("report", {})),
                output_dir=raw_config.get("output_dir", "output"),
                log_level=raw_config.get("log_level", "INFO"),
            )
        except TypeError as e:
            raise ConfigurationError(f"Invalid configuration format: {e}")

        unknown = set(raw_config) - {f.name for f in fields(LabConfig)}
        if unknown:
            raise ConfigurationError(f"Unknown configuration sections: {sorted(unknown)}")

        self._validate(config)
        return config

    @staticmethod
    def _validate(config: LabConfig) -> None:
        if config.locking.scheme not in SCHEMES:
            raise ConfigurationError(f"locking.scheme must be one of {SCHEMES}, got {config.locking.scheme!r}")
        if config.locking.key_bits < 1:
            raise ConfigurationError("locking.key_bits must be >= 1")
        if config.chip.defense not in DEFENSES:
            raise ConfigurationError(f"chip.defense must be one of {DEFENSES}, got {config.chip.defense!r}")
        if config.scan.policy not in POLICIES:
            raise ConfigurationError(f"scan.policy must be one of {POLICIES}, got {config.scan.policy!r}")
        if not config.scan.chains or any(c < 1 for c in config.scan.chains):
            raise ConfigurationError("scan.chains must list chain counts >= 1")
        if config.attack.fill not in FILLS:
            raise ConfigurationError(f"attack.fill must be one of {FILLS}, got {config.attack.fill!r}")
        if config.attack.scan_check_trials < 1 or config.attack.scan_check_budget < 1:
            raise ConfigurationError("attack.scan_check_trials and attack.scan_check_budget must be >= 1")
        if config.report.budget < 1:
            raise ConfigurationError("report.budget must be >= 1")


config_manager = ConfigManager()
