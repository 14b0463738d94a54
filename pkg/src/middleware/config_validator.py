"""Run-configuration loading and validation.

Configuration comes from an optional JSON file whose keys are exactly the
``RunConfig`` field names, overridden by command-line flags.
"""

import json
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Optional, Union

from src.core.model import validate_config
from src.middleware.error_handler import InvalidConfigError, InvalidInputError, UsageError
from src.models.config import RunConfig
from src.utils.validation import validate_interval

# Fields each subcommand needs beyond the defaults.
REQUIRED_FIELDS: Dict[str, tuple] = {
    "simulate": ("alpha",),
    "spectrum": ("alpha",),
    "resolvent": ("alpha",),
    "hardy": (),
    "table": (),
    "verify": (),
}


def load_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Read a JSON configuration document.

    Raises:
        UsageError: If the file is missing, unreadable, not a JSON object,
            or holds keys that are not RunConfig fields
    """
    config_path = Path(path)
    try:
        text = config_path.read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read config file {config_path}: {e.strerror or e}") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise UsageError(f"config file {config_path} is not valid JSON: {e.msg}") from e
    if not isinstance(data, dict):
        raise UsageError(f"config file {config_path} must hold a JSON object")

    unknown = sorted(set(data) - set(RunConfig.model_fields))
    if unknown:
        raise UsageError(f"unknown config keys in {config_path}: {', '.join(unknown)}")
    return data


def merge_overrides(base: Mapping[str, Any], overrides: Mapping[str, Any]) -> Dict[str, Any]:
    """Flags win over file values; ``None`` means the flag was not given."""
    merged = dict(base)
    merged.update({key: value for key, value in overrides.items() if value is not None})
    return merged


def require_fields(command: str, config: RunConfig,
                   extra: Optional[Iterable[str]] = None) -> None:
    """Reject a configuration lacking a field the subcommand needs."""
    needed = list(REQUIRED_FIELDS.get(command, ())) + list(extra or ())
    missing = [name for name in needed if getattr(config, name) is None]
    if missing:
        raise UsageError(f"missing required field: {', '.join(missing)}")


def check_fit_window(command: str, config: RunConfig) -> None:
    """
    Reject fit-window bounds outside the range the subcommand computes.

    Raises:
        InvalidConfigError: t_lo/t_hi outside [0, t_final] for simulate, or
            omega_lo/omega_hi outside [omega_min, omega_max] for resolvent
    """
    if command == "simulate":
        names, lower, upper = ("t_lo", "t_hi"), 0.0, config.t_final
    elif command == "resolvent":
        names, lower, upper = ("omega_lo", "omega_hi"), config.omega_min, config.omega_max
    else:
        return
    try:
        for name in names:
            value = getattr(config, name)
            if value is not None:
                validate_interval(value, name, lower, upper)
    except InvalidInputError as e:
        raise InvalidConfigError([f"{e.parameter_name}: {e.reason}"]) from e


def build_config(
    command: str,
    overrides: Mapping[str, Any],
    config_path: Optional[Union[str, Path]] = None,
) -> RunConfig:
    """
    Load, merge, validate and check the configuration of a subcommand.

    Raises:
        UsageError: For unreadable files or missing required fields
        InvalidConfigError: For values violating RunConfig invariants or fit
            windows outside the computed range
    """
    base = load_config_file(config_path) if config_path else {}
    config = validate_config(merge_overrides(base, overrides))
    require_fields(command, config)
    check_fit_window(command, config)
    return config


__all__ = [
    "REQUIRED_FIELDS",
    "build_config",
    "check_fit_window",
    "load_config_file",
    "merge_overrides",
    "require_fields",
]
