"""
Загрузка GlobalConfig слоями: значения по умолчанию -> файл -> окружение -> явные переопределения.

Файл - плоский key = value, ключ - section.field:

    codebook.num_groups = 4
    train.scale_factor = 0.1
    model.variant = SLATE_PLUS

Переменные окружения: GDRLAB_<FIELD>, например GDRLAB_SEED=3.
"""
import configparser
import os
from dataclasses import fields
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

from dotenv import load_dotenv

from gdrlab.models.config_models import GlobalConfig
from .exceptions import ConfigurationError
from .logger import logger

ENV_PREFIX = "GDRLAB_"
_ROOT_SECTION = "gdrlab"
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _field_table() -> Dict[str, Any]:
    return {f.name: f for f in fields(GlobalConfig)}


def _coerce(name: str, raw: Any, field_type: Any) -> Any:
    if not isinstance(raw, str):
        return raw
    value = raw.strip()
    try:
        if field_type in (bool, 'bool'):
            lowered = value.lower()
            if lowered in _TRUE:
                return True
            if lowered in _FALSE:
                return False
            raise ValueError(value)
        if field_type in (int, 'int'):
            return int(value)
        if field_type in (float, 'float'):
            return float(value)
        if isinstance(field_type, type) and issubclass(field_type, Enum):
            return field_type(value)
    except ValueError as e:
        raise ConfigurationError("cannot parse config value", {"field": name, "value": raw}) from e
    return value


def read_config_file(path) -> Dict[str, str]:
    """Плоский файл -> {field: raw_value}. Секция в ключе проверяется по метаданным поля."""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError("config file not found", {"path": str(path)})
    parser = configparser.ConfigParser(delimiters=("=",), comment_prefixes=("#", ";"), interpolation=None)
    parser.optionxform = str
    parser.read_string(f"[{_ROOT_SECTION}]\n" + path.read_text(encoding="utf-8"))

    table = _field_table()
    values = {}
    for key, raw in parser.items(_ROOT_SECTION):
        section, _, name = key.rpartition(".")
        if name not in table:
            raise ConfigurationError("unknown config key", {"key": key})
        expected = table[name].metadata.get("section")
        if section and section != expected:
            raise ConfigurationError("config key is in the wrong section",
                                     {"key": key, "expected": f"{expected}.{name}"})
        values[name] = raw
    return values


def read_environment(env: Optional[Mapping[str, str]] = None) -> Dict[str, str]:
    if env is None:
        load_dotenv()
        env = os.environ
    table = _field_table()
    return {name: env[ENV_PREFIX + name.upper()] for name in table if ENV_PREFIX + name.upper() in env}


def load_config(path=None, env: Optional[Mapping[str, str]] = None,
                overrides: Optional[Mapping[str, Any]] = None) -> GlobalConfig:
    """
    Собирает и валидирует GlobalConfig.

    Args:
        path: плоский конфиг-файл (необязателен).
        env: словарь окружения; None -> os.environ (с подгрузкой .env).
        overrides: значения с наибольшим приоритетом (флаги CLI); None-значения пропускаются.

    Raises:
        ConfigurationError: неизвестный ключ, неверное значение или нарушенный инвариант.
    """
    table = _field_table()
    layered: Dict[str, Any] = {}
    if path is not None:
        layered.update(read_config_file(path))
    layered.update(read_environment(env))
    for name, value in (overrides or {}).items():
        if value is None:
            continue
        if name not in table:
            raise ConfigurationError("unknown config override", {"key": name})
        layered[name] = value

    coerced = {name: _coerce(name, raw, table[name].type) for name, raw in layered.items()}
    config = GlobalConfig(**coerced)
    logger.debug(f"Config loaded: {coerced}")
    return config


def dump_config(config: GlobalConfig, path) -> Path:
    """Обратная операция: плоский файл со всеми полями"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    record = config.to_record()
    lines = [f"{f.metadata['section']}.{f.name} = {record[f.name]}" for f in fields(GlobalConfig)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
