import torch
from torch import nn

from gdrlab.models.codebook_models import GroupLayout, TokenGrid
from .base import CodebookStrategy


class GroupedCodebook(CodebookStrategy):
    """
    g под-кодбуков шаблонных атрибутов (a_i x d). Вектор признака собирается
    конкатенацией выбранных атрибутов (размерность m*c), затем LayerNorm
    (опционально) и линейная проекция обратно в c.
    """

    def __init__(self, layout: GroupLayout, channel_dim: int, use_layernorm: bool = True):
        super().__init__(layout, channel_dim)
        self.sub_codebooks = nn.ModuleList(nn.Embedding(a, layout.sub_dim) for a in layout.sizes)
        for table in self.sub_codebooks:
            nn.init.normal_(table.weight, std=layout.sub_dim ** -0.5)

        self.post_norm = nn.LayerNorm(layout.width) if use_layernorm else nn.Identity()
        # nn.Linear по умолчанию инициализируется ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in))
        self.post_projection = nn.Linear(layout.width, channel_dim)

    def pre_projection(self, tokens: TokenGrid) -> torch.Tensor:
        """Конкатенация атрибутов до нормализации: (B, H, W, g*d)"""
        self._check_layout(tokens.layout)
        return torch.cat([table(tokens.hard[..., i]) for i, table in enumerate(self.sub_codebooks)], dim=-1)

    def project(self, concatenated: torch.Tensor) -> torch.Tensor:
        return self.post_projection(self.post_norm(concatenated))

    def _lookup_impl(self, tokens: TokenGrid) -> torch.Tensor:
        return self.project(self.pre_projection(tokens))

    def _soft_lookup_impl(self, soft: torch.Tensor) -> torch.Tensor:
        groups = torch.split(soft, self.layout.sizes, dim=-1)
        concatenated = torch.cat([p @ table.weight for p, table in zip(groups, self.sub_codebooks)], dim=-1)
        return self.project(concatenated)

    @torch.no_grad()
    def identity_projection_(self) -> 'GroupedCodebook':
        """Единичная проекция (нужна при g*d == c, для сверки с базовой таблицей)."""
        weight = self.post_projection.weight
        weight.zero_()
        weight.copy_(torch.eye(weight.shape[0], weight.shape[1], dtype=weight.dtype))
        self.post_projection.bias.zero_()
        return self

    @torch.no_grad()
    def copy_table_(self, table: torch.Tensor) -> 'GroupedCodebook':
        """Загрузить таблицу n x c в единственный под-кодбук (только g = 1)."""
        self.sub_codebooks[0].weight.copy_(table)
        return self
