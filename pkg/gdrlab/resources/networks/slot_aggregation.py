from pathlib import Path
from typing import Optional, Tuple

import numpy as np
import torch
from PIL import Image
from torch import nn

from gdrlab.core.exceptions import EmptyInputError, ShapeError, ValidationError
from gdrlab.models.slot_models import ConditionPrior, SlotSet


class RandomQueryInit(nn.Module):
    """
    Неразделяемые гауссианы на каждый слот: query_k = mu_k + sigma * s_k * eps.
    mu_k обучаются, масштабы s_k хранятся в чекпойнте, но не обучаются.
    """

    def __init__(self, num_slots: int, channel_dim: int):
        super().__init__()
        self.mu = nn.Parameter(torch.empty(num_slots, channel_dim))
        nn.init.xavier_uniform_(self.mu)
        self.scale = nn.Parameter(torch.ones(num_slots, channel_dim), requires_grad=False)

    def forward(self, batch_size: int, sigma: float, generator: Optional[torch.Generator] = None) -> torch.Tensor:
        if sigma < 0:
            raise ValidationError("sigma must be non-negative", {"sigma": sigma})
        mu = self.mu.unsqueeze(0).expand(batch_size, -1, -1)
        if sigma == 0:
            return mu
        eps = torch.randn(mu.shape, generator=generator, device=mu.device, dtype=mu.dtype)
        return mu + sigma * self.scale * eps


class ConditionQueryInit(nn.Module):
    """Нормированные боксы (K, 4) -> двухслойный MLP с GELU -> (K, c)"""

    def __init__(self, channel_dim: int):
        super().__init__()
        self.mlp = nn.Sequential(nn.Linear(4, channel_dim), nn.GELU(), nn.Linear(channel_dim, channel_dim))

    def forward(self, prior: ConditionPrior) -> torch.Tensor:
        boxes = prior.boxes
        if bool(((boxes < 0) | (boxes > 1)).any()):
            raise ValidationError("condition boxes must be normalized to [0, 1]")
        return self.mlp(boxes)


class ExtraEncoder(nn.Module):
    """Четыре свёртки 5x5 с ReLU, без понижения разрешения"""

    def __init__(self, channel_dim: int, hidden: int = 64):
        super().__init__()
        self.net = nn.Sequential(
            nn.Conv2d(3, hidden, 5, 1, 2), nn.ReLU(),
            nn.Conv2d(hidden, hidden, 5, 1, 2), nn.ReLU(),
            nn.Conv2d(hidden, hidden, 5, 1, 2), nn.ReLU(),
            nn.Conv2d(hidden, channel_dim, 5, 1, 2),
        )

    def forward(self, image: torch.Tensor) -> torch.Tensor:
        return self.net(image)


class GridPositionEmbedding(nn.Module):
    """Обучаемое аддитивное позиционное кодирование сетки признаков (B, N, c)"""

    def __init__(self, num_positions: int, channel_dim: int):
        super().__init__()
        self.embedding = nn.Parameter(torch.zeros(1, num_positions, channel_dim))
        nn.init.trunc_normal_(self.embedding, std=0.02)

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        return features + self.embedding


class SlotAttention(nn.Module):
    """
    Исходная формулировка Slot Attention: нормализация внимания по слотам,
    взвешенное среднее, GRU-обновление, остаточный MLP.
    """

    def __init__(self, channel_dim: int, mlp_hidden: int = 256, eps: float = 1e-8):
        super().__init__()
        self.eps = eps
        self.scale = channel_dim ** -0.5

        self.norm_input = nn.LayerNorm(channel_dim)
        self.input_mlp = nn.Sequential(nn.Linear(channel_dim, channel_dim), nn.ReLU(),
                                       nn.Linear(channel_dim, channel_dim))
        self.norm_features = nn.LayerNorm(channel_dim)

        self.to_q = nn.Linear(channel_dim, channel_dim, bias=False)
        self.to_k = nn.Linear(channel_dim, channel_dim, bias=False)
        self.to_v = nn.Linear(channel_dim, channel_dim, bias=False)

        self.gru = nn.GRUCell(channel_dim, channel_dim)
        self.mlp = nn.Sequential(nn.Linear(channel_dim, mlp_hidden), nn.ReLU(),
                                 nn.Linear(mlp_hidden, channel_dim))

        self.norm_slots = nn.LayerNorm(channel_dim)
        self.norm_pre_ff = nn.LayerNorm(channel_dim)

    def forward(self, query: torch.Tensor, features: torch.Tensor, num_iter: int) -> SlotSet:
        batch, num_slots, dim = query.shape
        if num_slots == 0 or features.shape[1] == 0:
            raise EmptyInputError("slot attention needs at least one slot and one feature",
                                  {"K": num_slots, "N": features.shape[1]})
        if num_iter < 1:
            raise ValidationError("num_iter must be at least 1", {"num_iter": num_iter})

        features = self.norm_input(features)
        features = self.norm_features(features + self.input_mlp(features))
        k, v = self.to_k(features), self.to_v(features)

        slots = query
        attn = None
        for _ in range(num_iter):
            slots_prev = slots
            q = self.to_q(self.norm_slots(slots))

            dots = torch.einsum('bkd,bnd->bkn', q, k) * self.scale
            attn = dots.softmax(dim=1)
            weights = attn + self.eps
            weights = weights / weights.sum(dim=-1, keepdim=True)
            updates = torch.einsum('bkn,bnd->bkd', weights, v)

            slots = self.gru(updates.reshape(-1, dim), slots_prev.reshape(-1, dim)).reshape(batch, num_slots, dim)
            slots = slots + self.mlp(self.norm_pre_ff(slots))

        return SlotSet(slots=slots, attention=attn, num_iterations_used=num_iter)


class SlotPredictor(nn.Module):
    """Стек блоков transformer encoder: слоты шага t -> запросы шага t+1. Без позиционного кодирования."""

    def __init__(self, channel_dim: int, num_heads: int, num_blocks: int = 1):
        super().__init__()
        layer = nn.TransformerEncoderLayer(d_model=channel_dim, nhead=num_heads, dim_feedforward=4 * channel_dim,
                                           dropout=0.0, batch_first=True, norm_first=True)
        self.net = nn.TransformerEncoder(layer, num_layers=num_blocks, enable_nested_tensor=False)

    def forward(self, slots: torch.Tensor) -> torch.Tensor:
        return self.net(slots)


def masks_from_attention(attention: torch.Tensor, token_shape: Tuple[int, int],
                         output_size: Optional[int] = None) -> torch.Tensor:
    """
    (B, K, N) -> (B, H, W) метки слотов через argmax по слотам.
    При равенстве побеждает меньший индекс. Апсемплинг nearest до output_size,
    output_size должен быть кратен сетке.

    Raises:
        ShapeError: N не равно H*W, сетка не квадратная при апсемплинге или output_size не кратен ей.
    """
    batch = attention.shape[0]
    height, width = token_shape
    if attention.shape[-1] != height * width:
        raise ShapeError("attention length does not match the token grid",
                         {"positions": attention.shape[-1], "grid": (height, width)})
    labels = attention.argmax(dim=1).reshape(batch, height, width)
    if output_size is not None and output_size != height:
        if height != width or output_size % height:
            raise ShapeError("output size must be a whole multiple of a square grid",
                             {"output_size": output_size, "grid": (height, width)})
        factor = output_size // height
        labels = labels.repeat_interleave(factor, dim=1).repeat_interleave(factor, dim=2)
    return labels


def export_masks(labels: torch.Tensor, out_dir, prefix: str = "mask") -> list:
    """Сохраняет карты меток как uint8 PNG в index-формате."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, label_map in enumerate(labels.cpu().numpy().astype(np.uint8)):
        path = out_dir / f"{prefix}_{i:04d}.png"
        Image.fromarray(label_map, mode="L").save(path)
        paths.append(path)
    return paths
