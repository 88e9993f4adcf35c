import json
import math
from dataclasses import asdict, is_dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Union

import numpy as np
import torch

UNDEFINED_TOKEN = "NA"


class Serializer:
    """Приводит отчёты, конфиги и тензоры к JSON-совместимому виду"""

    @staticmethod
    def serialize(data: Any) -> Any:
        handlers = {
            type(None): lambda x: None,
            dict: Serializer._handle_dict,
            list: Serializer._handle_sequence,
            tuple: Serializer._handle_sequence,
            set: lambda x: Serializer._handle_sequence(sorted(x)),
            Enum: lambda x: x.value,
            bool: lambda x: x,
            float: Serializer._handle_float,
            (str, int): lambda x: x,
            np.generic: lambda x: Serializer.serialize(x.item()),
            np.ndarray: lambda x: Serializer.serialize(x.tolist()),
            torch.Tensor: lambda x: Serializer.serialize(x.detach().cpu().tolist()),
            Path: str,
        }

        # Проверка на dataclass
        if is_dataclass(data) and not isinstance(data, type):
            return Serializer._handle_dataclass(data)

        # Проверка на to_record
        if hasattr(data, 'to_record'):
            return Serializer.serialize(data.to_record())

        for types, handler in handlers.items():
            if isinstance(data, types):
                return handler(data)

        # Fallback для неизвестных типов
        return str(data)

    @staticmethod
    def _handle_float(value: float) -> Union[float, str, None]:
        # неопределённая метрика (NaN) пишется как "NA", inf в JSON не представим
        if math.isnan(value):
            return UNDEFINED_TOKEN
        return value if math.isfinite(value) else None

    @staticmethod
    def _handle_dataclass(data: Any) -> Dict:
        if hasattr(data, 'to_record'):
            return Serializer.serialize(data.to_record())
        return {key: Serializer.serialize(value) for key, value in asdict(data).items()
                if not key.startswith('_')}

    @staticmethod
    def _handle_dict(data: Dict) -> Dict:
        return {str(key.value if isinstance(key, Enum) else key): Serializer.serialize(value)
                for key, value in data.items()}

    @staticmethod
    def _handle_sequence(data: Iterable) -> List:
        return [Serializer.serialize(item) for item in data]


class RecordWriter:
    """
    Построчные JSON-записи (step, split, metric, value) или (sample_id, metric, value).

    Использование:
        with RecordWriter(out_dir / "records.jsonl") as writer:
            writer.write(step=100, split="val", metric="recon", value=0.01)
    """

    def __init__(self, path, append: bool = True):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = self.path.open("a" if append else "w", encoding="utf-8")

    def write(self, **record) -> None:
        self._fh.write(json.dumps(Serializer.serialize(record), ensure_ascii=False) + "\n")
        self._fh.flush()

    def write_many(self, records: Iterable[Dict]) -> None:
        for record in records:
            self.write(**record)

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.close()


def _restore_undefined(record: Dict) -> Dict:
    return {key: float("nan") if value == UNDEFINED_TOKEN else value for key, value in record.items()}


def read_records(path) -> List[Dict]:
    """Записи из JSON-lines; значения "NA" возвращаются как NaN."""
    with Path(path).open(encoding="utf-8") as fh:
        return [json.loads(line, object_hook=_restore_undefined) for line in fh if line.strip()]


def write_summary(path, title: str, rows: Sequence[Sequence[str]], header: Sequence[str] = ("metric", "value")) -> Path:
    """Итоговая таблица простым текстом с выравниванием по колонкам"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table = [list(header)] + [list(map(str, row)) for row in rows]
    widths = [max(len(row[i]) for row in table) for i in range(len(header))]
    lines = [title, ""]
    for n, row in enumerate(table):
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        if n == 0:
            lines.append("  ".join("-" * w for w in widths))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
