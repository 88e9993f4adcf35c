import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Sequence, Tuple, TYPE_CHECKING

import numpy as np
import torch

from gdrlab.core.exceptions import ConfigurationError

if TYPE_CHECKING:
    from .config_models import GlobalConfig


@dataclass(frozen=True)
class GroupLayout:
    """
    Разбиение кода на группы атрибутов.

    sizes: a_1..a_g, число значений в каждой группе (произведение = n).
    sub_dim: d, размерность под-кода одной группы (m*c/g; для базовой линии d = c).
    """
    sizes: Tuple[int, ...]
    sub_dim: int

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(int(a) for a in self.sizes))
        if not self.sizes:
            raise ConfigurationError("layout needs at least one group")
        if any(a < 1 for a in self.sizes):
            raise ConfigurationError("group sizes must be positive", {"sizes": self.sizes})
        if self.sub_dim < 1:
            raise ConfigurationError("sub_dim must be positive", {"sub_dim": self.sub_dim})

    @classmethod
    def from_config(cls, sizes: Sequence[int], config: 'GlobalConfig') -> 'GroupLayout':
        sizes = tuple(sizes)
        if math.prod(sizes) != config.num_code:
            raise ConfigurationError("product of group sizes must equal num_code",
                                     {"sizes": sizes, "num_code": config.num_code})
        if len(sizes) == 1:
            # Базовая линия: прямая таблица n x c без расширения
            return cls(sizes, config.channel_dim)
        width = config.dim_multiplier * config.channel_dim
        if width % len(sizes) != 0:
            raise ConfigurationError("m*c must be divisible by g", {"m*c": width, "g": len(sizes)})
        return cls(sizes, width // len(sizes))

    @property
    def g(self) -> int:
        return len(self.sizes)

    @property
    def n(self) -> int:
        return math.prod(self.sizes)

    @property
    def total(self) -> int:
        """Число каналов логитов: сумма a_i."""
        return sum(self.sizes)

    @property
    def width(self) -> int:
        """Размерность конкатенации под-кодов: g*d."""
        return self.g * self.sub_dim

    @property
    def is_baseline(self) -> bool:
        return self.g == 1

    @property
    def offsets(self) -> Tuple[int, ...]:
        return tuple(int(x) for x in np.cumsum((0,) + self.sizes[:-1]))

    @property
    def radices(self) -> Tuple[int, ...]:
        """Веса разрядов: младшая группа первой (1, a_1, a_1*a_2, ...)."""
        return tuple(math.prod(self.sizes[:i]) for i in range(self.g))

    def label(self) -> str:
        return f"g{self.g}[{','.join(map(str, self.sizes))}]"


@dataclass
class TokenGrid:
    """
    Дискретное состояние сетки токенов. Хранится channel-last.

    soft: (B, H, W, sum a_i) конкатенация вероятностей групп.
    hard: (B, H, W, g) кортежные индексы.
    natural: (B, H, W) натуральные индексы в [0, n).
    """
    soft: torch.Tensor
    hard: torch.Tensor
    natural: torch.Tensor
    layout: GroupLayout

    @property
    def grid_shape(self) -> Tuple[int, int]:
        return tuple(self.natural.shape[-2:])

    def group_soft(self) -> List[torch.Tensor]:
        return list(torch.split(self.soft, self.layout.sizes, dim=-1))

    def detach(self) -> 'TokenGrid':
        return TokenGrid(self.soft.detach(), self.hard, self.natural, self.layout)


@dataclass
class ParamCount:
    raw_codebook: int
    projection: int
    total: int
    baseline_total: int

    @property
    def ratio_vs_baseline(self) -> float:
        return self.total / self.baseline_total

    @property
    def raw_ratio_vs_baseline(self) -> float:
        return self.raw_codebook / self.baseline_total


@dataclass
class UtilizationReport:
    layout: GroupLayout
    group_counts: List[np.ndarray]
    natural_counts: np.ndarray
    total_tokens: int

    group_frequencies: List[np.ndarray] = field(init=False)
    natural_frequencies: np.ndarray = field(init=False)

    def __post_init__(self):
        self.group_frequencies = [c / self.total_tokens for c in self.group_counts]
        self.natural_frequencies = self.natural_counts / self.total_tokens

    @property
    def never_used_per_group(self) -> List[int]:
        return [int((c == 0).sum()) for c in self.group_counts]

    @property
    def never_used_natural(self) -> int:
        return int((self.natural_counts == 0).sum())

    def to_csv(self, path) -> Path:
        """Выгрузка гистограмм: section, index, count, frequency."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["section", "index", "count", "frequency"])
            for idx, (count, freq) in enumerate(zip(self.natural_counts, self.natural_frequencies)):
                writer.writerow(["natural", idx, int(count), f"{freq:.8f}"])
            for group, (counts, freqs) in enumerate(zip(self.group_counts, self.group_frequencies)):
                for idx, (count, freq) in enumerate(zip(counts, freqs)):
                    writer.writerow([f"group{group}", idx, int(count), f"{freq:.8f}"])
        return path
