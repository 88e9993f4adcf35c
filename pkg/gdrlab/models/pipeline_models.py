import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from .base_models import BaseConfig
from .codebook_models import GroupLayout
from .config_models import QueryMode, Variant

UNDEFINED = float("nan")


def render_value(value: Optional[float], digits: int = 4) -> str:
    """Неопределённое значение печатается как NA."""
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "NA"
    return f"{value:.{digits}f}"


@dataclass
class ModelVariant:
    architecture: Variant
    layout: GroupLayout
    query_mode: QueryMode = QueryMode.RANDOM

    def __post_init__(self):
        self.architecture = Variant(self.architecture)
        self.query_mode = QueryMode(self.query_mode)

    def label(self) -> str:
        return f"{self.architecture.value}-{self.layout.label()}-{self.query_mode.value}"

    def to_record(self) -> dict:
        return {"architecture": self.architecture.value, "sizes": list(self.layout.sizes),
                "sub_dim": self.layout.sub_dim, "query_mode": self.query_mode.value}

    @classmethod
    def from_record(cls, record: dict) -> 'ModelVariant':
        return cls(record["architecture"], GroupLayout(tuple(record["sizes"]), record["sub_dim"]),
                   record["query_mode"])


@dataclass
class DatasetInfo(BaseConfig):
    """Что известно о packed-хранилище без чтения всех записей"""
    is_video: bool = False
    has_boxes: bool = True
    resolution: int = 64
    num_frames: int = 1
    max_objects: int = 4
    count: int = 0
    preset: str = ""


@dataclass
class PretrainReport:
    steps: int
    final_tau: float
    best_step: int
    best_val_loss: float
    checkpoints: List[str] = field(default_factory=list)
    val_losses: Dict[int, float] = field(default_factory=dict)
    never_used_codes: Optional[int] = None


@dataclass
class TrainReport:
    steps: int
    final_sigma: float
    best_step: int
    best_combined: float
    checkpoints: List[str] = field(default_factory=list)
    val_combined: Dict[int, float] = field(default_factory=dict)
    final_loss: float = UNDEFINED


@dataclass
class MetricRecord(BaseConfig):
    """Средние по сэмплам значения во внутренней шкале; проценты только при выводе."""
    ari: float = UNDEFINED
    ari_fg: float = UNDEFINED
    iou: float = UNDEFINED
    combined: float = UNDEFINED
    baseline_combined: float = UNDEFINED
    accuracy: float = UNDEFINED
    single_object: bool = False
    num_samples: int = 0

    def summary_rows(self) -> List[List[str]]:
        second = ("IoU", self.iou) if self.single_object else ("ARI_fg", self.ari_fg)
        return [
            ["ARI", render_value(100 * self.ari, 2)],
            [second[0], render_value(100 * second[1], 2)],
            ["combined", render_value(self.combined, 2)],
            ["random-rectangles combined", render_value(self.baseline_combined, 2)],
            ["next-token accuracy", render_value(self.accuracy)],
        ]


@dataclass
class TransferRecord(BaseConfig):
    source_combined: float = UNDEFINED
    target_combined: float = UNDEFINED

    @property
    def delta(self) -> float:
        """Разница в процентных пунктах, target минус source"""
        return self.target_combined - self.source_combined
