"""Config precedence: command-line flags over config-file values over built-in defaults."""

import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

from pydantic import ValidationError

from src.schemas.train_config import RunConfig
from src.utils.errors import ConfigurationError

logger = logging.getLogger(__name__)


def load_run_config(path: Optional[Union[str, Path]]) -> RunConfig:
    if path is None:
        return RunConfig()
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"Config file not found: {path}")
    try:
        return RunConfig.model_validate_json(path.read_text())
    except ValidationError as e:
        raise ConfigurationError(f"Invalid config {path}: {e}")


def _deep_merge(base: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in overrides.items():
        if value is None:
            continue
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def merge_overrides(cfg: RunConfig, overrides: Dict[str, Any]) -> RunConfig:
    """Apply nested flag values; ``None`` means the flag was not given."""
    data = _deep_merge(cfg.model_dump(mode="json"), overrides)
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid option values: {e}")


def resolve_run_config(path: Optional[Union[str, Path]], overrides: Dict[str, Any]) -> RunConfig:
    cfg = merge_overrides(load_run_config(path), overrides)
    logger.debug("Effective config: %s", cfg.model_dump_json())
    return cfg
