from dataclasses import dataclass, asdict, fields
from enum import Enum
from typing import Any, Dict


@dataclass
class BaseConfig:
    def to_record(self) -> dict:
        # Только публичные поля, Enum -> значение, tuple -> list
        data = {k: v for k, v in asdict(self).items() if not k.startswith('_')}
        return {k: self._plain(v) for k, v in data.items()}

    @classmethod
    def from_record(cls, record: Dict[str, Any]):
        """Собирает конфиг из словаря, игнорируя незнакомые ключи."""
        known = {f.name for f in fields(cls) if f.init and not f.name.startswith('_')}
        return cls(**{k: v for k, v in record.items() if k in known})

    @staticmethod
    def _plain(value: Any) -> Any:
        if isinstance(value, Enum):
            return value.value
        if isinstance(value, (list, tuple)):
            return [BaseConfig._plain(v) for v in value]
        return value
