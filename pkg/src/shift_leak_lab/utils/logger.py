"""
Versioned logger helper for structured lab logging.

Every run gets a RUN_<timestamp> version that is injected into log records and
log file names. Category loggers (netlist, locking, chip, atpg, attack, report,
pipeline, validation) are configured from config/logging.yaml; the module
falls back to basicConfig when that file is unavailable.
"""

import logging
import logging.config
import time
import yaml
from functools import wraps
from typing import Optional, List
from pathlib import Path
from datetime import datetime


def generate_run_version() -> str:
    """Generate a unique run version for this lab execution."""
    timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
    return f"RUN_{timestamp}"


CURRENT_RUN_VERSION = generate_run_version()

_configured_from: Optional[str] = None


class VersionedFormatter(logging.Formatter):
    """Formatter that injects the run version into log records."""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.version = CURRENT_RUN_VERSION

    def format(self, record):
        record.version = self.version
        return super().format(record)


class VersionFilter(logging.Filter):
    """Inject run version into all log records."""
    def filter(self, record):
        record.version = CURRENT_RUN_VERSION
        return True


class LabLoggerAdapter(logging.LoggerAdapter):
    """Logger adapter with lab-specific convenience methods."""

    def __init__(self, logger, extra=None):
        super().__init__(logger, extra or {})
        self.run_version = CURRENT_RUN_VERSION

    def process(self, msg, kwargs):
        return msg, kwargs

    def log_validation(
        self,
        entity: str,
        passed: bool,
        errors: Optional[List[str]] = None,
        warnings: Optional[List[str]] = None,
    ):
        """Log validation results in a unified format."""
        status = "PASSED" if passed else "FAILED"
        self.info(
            "Validation for %s: %s | errors=%d, warnings=%d",
            entity, status, len(errors or []), len(warnings or []),
        )

    def log_recovery(
        self,
        key_index: int,
        status: str,
        method: str,
        queries: int = 0,
        bit: Optional[int] = None,
    ):
        """Log a key-bit outcome. The bit value itself only goes to DEBUG."""
        self.info("Key bit %d: %s via %s | queries=%d", key_index, status, method, queries)
        if bit is not None:
            self.debug("Key bit %d value=%d", key_index, bit)

    def log_oracle_query(self, kind: str, count: int):
        """Log oracle usage for one attack step."""
        self.debug("Oracle %s | observations so far=%d", kind, count)

    def log_attack_progress(self, current: int, total: int, label: str, operation: str = "Recovering"):
        """Log attack progress in a unified format."""
        percentage = (current / total) * 100 if total > 0 else 0
        self.info("%s progress: %d/%d (%.1f%%) | Current: %s", operation, current, total, percentage, label)


def ensure_log_directories(config: Optional[dict] = None):
    """Create the parent directory of every file handler."""
    handlers = (config or {}).get("handlers", {})
    for handler_config in handlers.values():
        if "filename" in handler_config:
            Path(handler_config["filename"]).parent.mkdir(parents=True, exist_ok=True)


def configure_versioned_logging(config_path: str = "config/logging.yaml", force: bool = False):
    """Configure logging with version injection in filenames and formatters."""
    global _configured_from
    if _configured_from == config_path and not force:
        return

    try:
        with open(config_path, "r") as f:
            config = yaml.safe_load(f)

        for handler_config in config.get("handlers", {}).values():
            if "filename" in handler_config:
                handler_config["filename"] = handler_config["filename"] % {"version": CURRENT_RUN_VERSION}

        ensure_log_directories(config)
        logging.config.dictConfig(config)

        for logger_obj in logging.root.manager.loggerDict.values():
            if isinstance(logger_obj, logging.Logger):
                for handler in logger_obj.handlers:
                    handler.addFilter(VersionFilter())
        for handler in logging.getLogger().handlers:
            handler.addFilter(VersionFilter())
            if handler.formatter:
                handler.setFormatter(VersionedFormatter(handler.formatter._fmt))

        _configured_from = config_path

    except (OSError, yaml.YAMLError, ValueError, TypeError, KeyError) as e:
        logging.basicConfig(
            level=logging.INFO,
            format=f"%(asctime)s | [{CURRENT_RUN_VERSION}] | %(name)s | %(levelname)s | %(message)s",
        )
        logging.getLogger("shift_leak_lab").warning("Falling back to basic logging: %s", e)
        _configured_from = config_path


def get_logger(name: str) -> LabLoggerAdapter:
    """Get logger with lab-specific methods."""
    return LabLoggerAdapter(logging.getLogger(name), {})


def get_netlist_logger() -> LabLoggerAdapter:
    return get_logger("shift_leak_lab.netlist")


def get_locking_logger() -> LabLoggerAdapter:
    return get_logger("shift_leak_lab.locking")


def get_chip_logger() -> LabLoggerAdapter:
    return get_logger("shift_leak_lab.chip")


def get_atpg_logger() -> LabLoggerAdapter:
    return get_logger("shift_leak_lab.atpg")


def get_attack_logger() -> LabLoggerAdapter:
    return get_logger("shift_leak_lab.attack")


def get_report_logger() -> LabLoggerAdapter:
    return get_logger("shift_leak_lab.report")


def get_pipeline_logger() -> LabLoggerAdapter:
    return get_logger("shift_leak_lab.pipeline")


def get_validation_logger() -> LabLoggerAdapter:
    return get_logger("shift_leak_lab.validation")


def get_error_logger(error_type: str) -> LabLoggerAdapter:
    """Get error logger for specific error type."""
    return get_logger(f"shift_leak_lab.errors.{error_type}")


def get_run_version() -> str:
    return CURRENT_RUN_VERSION


def log_execution_time(logger_instance: Optional[logging.LoggerAdapter] = None):
    """Decorator to log function execution time."""
    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            func_logger = logger_instance or get_logger(func.__module__)
            start_time = time.perf_counter()
            try:
                result = func(*args, **kwargs)
                func_logger.info(
                    "Operation completed: %s.%s (duration: %.3fs)",
                    func.__module__, func.__name__, time.perf_counter() - start_time,
                )
                return result
            except Exception as e:
                func_logger.error(
                    "Operation failed: %s.%s (duration: %.3fs) - Error: %s",
                    func.__module__, func.__name__, time.perf_counter() - start_time, e,
                    exc_info=True,
                )
                raise
        return wrapper
    return decorator
