"""
Визуализации кодов: карты индексов в HSV, подмена атрибута в регионе, сглаженные кривые использования.
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import torch
from matplotlib.colors import hsv_to_rgb
from PIL import Image
from scipy.ndimage import gaussian_filter1d

from gdrlab.core.exceptions import DomainError, EmptyInputError, IndexRangeError, ShapeError
from gdrlab.models.codebook_models import GroupLayout, TokenGrid, UtilizationReport
from gdrlab.resources.codebooks import tokens_from_hard

UTILIZATION_SIGMA = 50.0


@dataclass
class IndexVisualization:
    """images[i]: (B, h, w, 3) float RGB в [0, 1] для группы i"""
    images: List[np.ndarray]
    layout: GroupLayout

    def to_uint8(self) -> List[np.ndarray]:
        return [np.round(img * 255).astype(np.uint8) for img in self.images]

    def save(self, out_dir, prefix: str = "index", upscale: int = 4) -> List[Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = []
        for group, batch in enumerate(self.to_uint8()):
            for sample, image in enumerate(batch):
                path = out_dir / f"{prefix}_s{sample:03d}_g{group}.png"
                big = image.repeat(upscale, axis=0).repeat(upscale, axis=1)
                Image.fromarray(big).save(path)
                paths.append(path)
        return paths


def hsv_index_map(tokens: TokenGrid, layout: GroupLayout,
                  permutation_rng: Optional[np.random.Generator] = None) -> IndexVisualization:
    """
    Индекс v группы i -> hue = v / a_i, S = V = 1. Палитра своя для каждой группы.
    С permutation_rng индексы группы сначала переставляются случайно (для контраста).
    """
    hard = tokens.hard.detach().cpu().numpy()
    if hard.shape[-1] != layout.g:
        raise ShapeError("tokens do not match the layout", {"g": layout.g, "tuple": hard.shape[-1]})
    images = []
    for i, a in enumerate(layout.sizes):
        values = hard[..., i]
        if permutation_rng is not None:
            values = permutation_rng.permutation(a)[values]
        hsv = np.stack([values / a, np.ones_like(values, dtype=np.float64), np.ones_like(values, dtype=np.float64)],
                       axis=-1)
        images.append(hsv_to_rgb(hsv))
    return IndexVisualization(images=images, layout=layout)


def attribute_swap(tokens: TokenGrid, region: torch.Tensor, group_index: int, new_value: int, decoder):
    """
    Заменяет элемент group_index кортежей внутри region на new_value и декодирует one-hot сетку.

    Args:
        region: (B, h, w) bool по сетке токенов.
        decoder: DVAE (используется decode_hard).

    Returns:
        (изображение (B, 3, H, W), изменённый TokenGrid)

    Raises:
        IndexRangeError: группа или значение вне диапазона.
    """
    layout = tokens.layout
    if not 0 <= group_index < layout.g:
        raise IndexRangeError("group index outside the layout", {"group": group_index, "g": layout.g})
    if not 0 <= new_value < layout.sizes[group_index]:
        raise IndexRangeError("new value outside the group", {"value": new_value, "size": layout.sizes[group_index]})
    if tuple(region.shape) != tuple(tokens.hard.shape[:-1]):
        raise ShapeError("region does not match the token grid",
                         {"region": tuple(region.shape), "grid": tuple(tokens.hard.shape[:-1])})

    hard = tokens.hard.clone()
    column = hard[..., group_index]
    column[region.to(torch.bool)] = new_value
    swapped = tokens_from_hard(hard, layout, dtype=tokens.soft.dtype)
    with torch.no_grad():
        image = decoder.decode_hard(swapped)
    return image, swapped


def smooth_curve(values: Sequence[float], sigma: float = UTILIZATION_SIGMA) -> np.ndarray:
    """Гауссово сглаживание с отражением на границах, длина сохраняется."""
    if sigma <= 0:
        raise DomainError("sigma must be positive", {"sigma": sigma})
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise EmptyInputError("cannot smooth an empty sequence")
    return gaussian_filter1d(values, sigma, mode="reflect")


def utilization_curve(report: UtilizationReport, sigma: float = UTILIZATION_SIGMA) -> np.ndarray:
    """Частоты натуральных кодов по убыванию, сглаженные"""
    ordered = np.sort(report.natural_frequencies)[::-1]
    return smooth_curve(ordered, sigma)


def plot_curves(curves: Dict[str, np.ndarray], path, title: str = "code utilization") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, curve in curves.items():
        ax.plot(np.arange(len(curve)), curve, label=label)
    ax.set_xlabel("code rank")
    ax.set_ylabel("frequency")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def save_image(image: torch.Tensor, path) -> Path:
    """(3, H, W) в [-1, 1] -> PNG"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pixels = ((image.detach().cpu().clamp(-1, 1) + 1) * 127.5).round().to(torch.uint8)
    Image.fromarray(pixels.permute(1, 2, 0).numpy()).save(path)
    return path
