import torch
from torch import nn

from gdrlab.models.codebook_models import GroupLayout, TokenGrid
from .base import CodebookStrategy


class BaselineCodebook(CodebookStrategy):
    """Негруппированная таблица n x c: натуральный индекс -> шаблонный вектор"""

    def __init__(self, layout: GroupLayout, channel_dim: int):
        super().__init__(layout, channel_dim)
        self.table = nn.Embedding(layout.n, channel_dim)
        nn.init.normal_(self.table.weight, std=channel_dim ** -0.5)

    def _lookup_impl(self, tokens: TokenGrid) -> torch.Tensor:
        return self.table(tokens.natural)

    def _soft_lookup_impl(self, soft: torch.Tensor) -> torch.Tensor:
        return soft @ self.table.weight
