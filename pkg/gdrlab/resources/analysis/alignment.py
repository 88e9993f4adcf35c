"""
Насколько группы кода совпадают с атрибутами объектов (цвет, форма).

Каждый объект сводится к модальному индексу группы по его региону на сетке токенов,
затем считается NMI между этими индексами и метками атрибута.
"""
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import torch
import torch.nn.functional as F
from sklearn.metrics import normalized_mutual_info_score

from gdrlab.core.exceptions import ShapeError
from gdrlab.models.codebook_models import GroupLayout

UNDEFINED = float("nan")


@dataclass
class AlignmentReport:
    scores: np.ndarray                  # (g, num_attributes)
    attribute_names: Tuple[str, ...]
    num_objects: int

    @property
    def best_attribute(self) -> List[str]:
        return [self.attribute_names[int(np.nanargmax(row))] if not np.all(np.isnan(row)) else "NA"
                for row in self.scores]

    @property
    def best_score(self) -> np.ndarray:
        return np.array([np.nanmax(row) if not np.all(np.isnan(row)) else UNDEFINED for row in self.scores])


def downsample_masks(masks: torch.Tensor, token_resolution: int) -> torch.Tensor:
    """Маски (B, H, W) в index-формате -> (B, h, w), nearest-exact"""
    resized = F.interpolate(masks[:, None].float(), size=(token_resolution, token_resolution), mode="nearest-exact")
    return resized[:, 0].long()


def modal_indexes(hard: torch.Tensor, masks: torch.Tensor,
                  labels: Sequence[Sequence[Tuple[int, ...]]]) -> Tuple[np.ndarray, np.ndarray]:
    """
    Args:
        hard: (B, h, w, g) кортежи индексов.
        masks: (B, H, W) маски объектов, 1..num_objects.
        labels: для каждого сэмпла список атрибутов объектов.

    Returns:
        (indexes (M, g), attributes (M, num_attributes)) по всем объектам, видимым на сетке токенов.
        При равной частоте берётся меньший индекс.
    """
    if hard.shape[0] != masks.shape[0] or hard.shape[0] != len(labels):
        raise ShapeError("batch sizes of tokens, masks and labels differ",
                         {"tokens": hard.shape[0], "masks": masks.shape[0], "labels": len(labels)})
    small = downsample_masks(masks, hard.shape[1]).cpu().numpy()
    hard = hard.cpu().numpy()

    indexes, attributes = [], []
    for b, sample_labels in enumerate(labels):
        for obj, attribute in enumerate(sample_labels, start=1):
            region = small[b] == obj
            if not region.any():
                continue
            values = hard[b][region]
            indexes.append([int(np.bincount(values[:, i]).argmax()) for i in range(values.shape[1])])
            attributes.append(list(attribute))
    g = hard.shape[-1]
    width = len(labels[0][0]) if labels and labels[0] else 0
    return (np.asarray(indexes, dtype=np.int64).reshape(-1, g),
            np.asarray(attributes, dtype=np.int64).reshape(len(attributes), -1) if attributes
            else np.zeros((0, width), dtype=np.int64))


def attribute_alignment(indexes: np.ndarray, attributes: np.ndarray, layout: GroupLayout,
                        attribute_names: Sequence[str] = ("color", "shape")) -> AlignmentReport:
    """NMI (plug-in оценка) для каждой пары (группа, атрибут). Меньше двух классов меток -> NaN."""
    scores = np.full((layout.g, attributes.shape[1] if attributes.ndim == 2 else 0), UNDEFINED)
    for j in range(scores.shape[1]):
        column = attributes[:, j]
        if len(np.unique(column)) < 2:
            continue
        for i in range(layout.g):
            scores[i, j] = normalized_mutual_info_score(column, indexes[:, i])
    return AlignmentReport(scores=scores, attribute_names=tuple(attribute_names[:scores.shape[1]]),
                           num_objects=len(indexes))


def shuffled_control(indexes: np.ndarray, attributes: np.ndarray, layout: GroupLayout,
                     num_permutations: int = 20, rng: Optional[np.random.Generator] = None,
                     attribute_names: Sequence[str] = ("color", "shape")) -> Tuple[np.ndarray, np.ndarray]:
    """
    Перестановочный контроль: best-over-attributes NMI при перемешанных метках.

    Returns:
        (mean (g,), std (g,))
    """
    rng = rng if rng is not None else np.random.default_rng()
    best = []
    for _ in range(num_permutations):
        shuffled = attributes[rng.permutation(len(attributes))]
        best.append(attribute_alignment(indexes, shuffled, layout, attribute_names).best_score)
    best = np.stack(best)
    return best.mean(axis=0), best.std(axis=0)
