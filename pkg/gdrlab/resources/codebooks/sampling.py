"""
Групповое Gumbel-семплирование и лосс использования кодов.

Логиты приходят channel-first (B, sum a_i, H, W) прямо из энкодера dVAE,
TokenGrid хранится channel-last.
"""
from typing import Iterable, Optional

import numpy as np
import torch
import torch.nn.functional as F
from einops import rearrange

from gdrlab.core.exceptions import DomainError, EmptyInputError, ShapeError
from gdrlab.models.codebook_models import GroupLayout, TokenGrid, UtilizationReport
from gdrlab.utils.indexing import tuple_to_natural

ENTROPY_EPS = 1e-10


def gumbel_noise(shape, generator: Optional[torch.Generator], device, dtype) -> torch.Tensor:
    """G ~ Gumbel(0, 1) через обратное преобразование равномерного шума."""
    uniform = torch.rand(shape, generator=generator, device=device, dtype=dtype)
    tiny = torch.finfo(dtype).tiny
    return -torch.log(-torch.log(uniform.clamp(min=tiny, max=1.0 - 1e-7)))


def gumbel_sample(logits: torch.Tensor,
                  layout: GroupLayout,
                  tau: float,
                  generator: Optional[torch.Generator] = None,
                  hard_noise_free: bool = False) -> TokenGrid:
    """
    Мягкое и жёсткое семплирование по группам.

    Для каждой группы i: soft_i = softmax((Z^i + G^i) / tau), hard_i = argmax(Z^i + G^i),
    одна реализация шума на группу для обоих. С hard_noise_free шум равен нулю
    (валидация: argmax вместо семплирования).

    Raises:
        DomainError: tau <= 0.
        ShapeError: число каналов логитов не равно sum a_i.
    """
    if tau <= 0:
        raise DomainError("temperature must be positive", {"tau": tau})
    if logits.dim() != 4 or logits.shape[1] != layout.total:
        raise ShapeError("logit channels do not match the layout",
                         {"shape": tuple(logits.shape), "expected_channels": layout.total})

    z = rearrange(logits, 'b c h w -> b h w c')
    if not hard_noise_free:
        z = z + gumbel_noise(z.shape, generator, z.device, z.dtype)

    groups = torch.split(z, layout.sizes, dim=-1)
    soft = torch.cat([F.softmax(zi / tau, dim=-1) for zi in groups], dim=-1)
    hard = torch.stack([zi.argmax(dim=-1) for zi in groups], dim=-1)
    return TokenGrid(soft=soft, hard=hard, natural=tuple_to_natural(hard, layout), layout=layout)


def one_hot_grid(hard: torch.Tensor, layout: GroupLayout, dtype=torch.float32) -> torch.Tensor:
    """Кортежные индексы (..., g) -> конкатенированный one-hot (..., sum a_i)."""
    parts = [F.one_hot(hard[..., i], num_classes=a).to(dtype) for i, a in enumerate(layout.sizes)]
    return torch.cat(parts, dim=-1)


def tokens_from_hard(hard: torch.Tensor, layout: GroupLayout, dtype=torch.float32) -> TokenGrid:
    """TokenGrid из жёстких кортежей: soft = one-hot."""
    return TokenGrid(soft=one_hot_grid(hard, layout, dtype), hard=hard,
                     natural=tuple_to_natural(hard, layout), layout=layout)


def utilization_loss(tokens: TokenGrid, layout: GroupLayout) -> torch.Tensor:
    """
    l_u = -sum_i entropy(mean_over_locations(soft_i)).

    Берутся мягкие вероятности, чтобы лосс был дифференцируемым.
    Диапазон: [-sum ln a_i, 0].
    """
    if tokens.soft.shape[-1] != layout.total:
        raise ShapeError("soft channels do not match the layout",
                         {"channels": tokens.soft.shape[-1], "expected": layout.total})
    flat = tokens.soft.reshape(-1, layout.total)
    mean_usage = flat.mean(dim=0)
    loss = flat.new_zeros(())
    for usage in torch.split(mean_usage, layout.sizes):
        entropy = -(usage * torch.log(usage.clamp(min=ENTROPY_EPS))).sum()
        loss = loss - entropy
    return loss


def utilization_histogram(stream: Iterable[TokenGrid], layout: GroupLayout) -> UtilizationReport:
    """Частоты использования индексов по группам и натуральных кодов по потоку сеток."""
    group_counts = [np.zeros(a, dtype=np.int64) for a in layout.sizes]
    natural_counts = np.zeros(layout.n, dtype=np.int64)
    total = 0

    for grid in stream:
        hard = grid.hard.reshape(-1, layout.g).cpu().numpy()
        for i, a in enumerate(layout.sizes):
            group_counts[i] += np.bincount(hard[:, i], minlength=a)
        natural_counts += np.bincount(grid.natural.reshape(-1).cpu().numpy(), minlength=layout.n)
        total += hard.shape[0]

    if total == 0:
        raise EmptyInputError("utilization histogram needs at least one token grid")
    return UtilizationReport(layout=layout, group_counts=group_counts,
                             natural_counts=natural_counts, total_tokens=total)
