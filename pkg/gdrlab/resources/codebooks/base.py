from abc import ABC, abstractmethod

import torch
from torch import nn

from gdrlab.core.exceptions import ShapeError
from gdrlab.models.codebook_models import GroupLayout, TokenGrid


class CodebookStrategy(nn.Module, ABC):
    """
    Общий интерфейс дискретизатора: жёсткий lookup по TokenGrid и мягкий
    lookup по вероятностям (им же пользуется декодер dVAE как входным эмбеддингом).
    """

    def __init__(self, layout: GroupLayout, channel_dim: int):
        super().__init__()
        self.layout = layout
        self.channel_dim = channel_dim

    def lookup(self, tokens: TokenGrid) -> torch.Tensor:
        """TokenGrid -> (B, H, W, c)"""
        self._check_layout(tokens.layout)
        return self._lookup_impl(tokens)

    def soft_lookup(self, soft: torch.Tensor) -> torch.Tensor:
        """(..., sum a_i) вероятности -> (..., c)"""
        if soft.shape[-1] != self.layout.total:
            raise ShapeError("soft channels do not match the codebook layout",
                             {"channels": soft.shape[-1], "expected": self.layout.total})
        return self._soft_lookup_impl(soft)

    def forward(self, tokens: TokenGrid) -> torch.Tensor:
        return self.lookup(tokens)

    @abstractmethod
    def _lookup_impl(self, tokens: TokenGrid) -> torch.Tensor:
        pass

    @abstractmethod
    def _soft_lookup_impl(self, soft: torch.Tensor) -> torch.Tensor:
        pass

    def _check_layout(self, layout: GroupLayout) -> None:
        if layout.sizes != self.layout.sizes:
            raise ShapeError("token layout does not match the codebook layout",
                             {"tokens": layout.sizes, "codebook": self.layout.sizes})


def lookup(tokens: TokenGrid, codebook: CodebookStrategy) -> torch.Tensor:
    return codebook.lookup(tokens)
