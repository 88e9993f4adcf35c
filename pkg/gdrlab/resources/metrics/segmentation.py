"""
Метрики unsupervised-сегментации: ARI, ARI_fg, IoU_fg и их сумма.

Внутренняя шкала [-0.5, 1]; проценты появляются только в combined и в отчётах.
Неопределённое значение - NaN, из средних исключается.
"""
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import comb
from sklearn.metrics.cluster import contingency_matrix

from gdrlab.core.exceptions import ContractError, ShapeError

UNDEFINED = float("nan")
BACKGROUND_ID = 0


def _as_labels(labels) -> np.ndarray:
    if hasattr(labels, "detach"):
        labels = labels.detach().cpu().numpy()
    return np.asarray(labels)


def _check_shapes(pred: np.ndarray, gt: np.ndarray) -> None:
    if pred.shape != gt.shape:
        raise ShapeError("prediction and ground truth shapes differ", {"pred": pred.shape, "gt": gt.shape})


def _ari_flat(pred: np.ndarray, gt: np.ndarray) -> float:
    n = pred.size
    table = contingency_matrix(gt, pred, sparse=False).astype(np.float64)
    sum_cells = comb(table, 2).sum()
    sum_rows = comb(table.sum(axis=1), 2).sum()
    sum_cols = comb(table.sum(axis=0), 2).sum()
    pairs = comb(n, 2)
    if pairs == 0:
        return 1.0
    expected = sum_rows * sum_cols / pairs
    maximum = (sum_rows + sum_cols) / 2
    if maximum == expected:
        # Обе разбивки тривиальны и совпадают: 0/0 доопределяется единицей
        return 1.0
    return float((sum_cells - expected) / (maximum - expected))


def ari(pred, gt) -> float:
    """Adjusted Rand index по всем пикселям."""
    pred, gt = _as_labels(pred), _as_labels(gt)
    _check_shapes(pred, gt)
    return _ari_flat(pred.ravel(), gt.ravel())


def ari_fg(pred, gt, background_id: int = BACKGROUND_ID) -> float:
    """ARI по пикселям, где gt != background_id. Пустой передний план -> NaN."""
    pred, gt = _as_labels(pred), _as_labels(gt)
    _check_shapes(pred, gt)
    foreground = gt != background_id
    if not foreground.any():
        return UNDEFINED
    return _ari_flat(pred[foreground], gt[foreground])


def iou_fg(pred, gt, background_id: int = BACKGROUND_ID) -> float:
    """
    IoU единственного объекта: берётся предсказанный слот с наибольшим пересечением
    с передним планом (при равенстве - меньший номер).

    Raises:
        ContractError: в gt больше одного объекта.
    """
    pred, gt = _as_labels(pred), _as_labels(gt)
    _check_shapes(pred, gt)
    objects = np.unique(gt[gt != background_id])
    if len(objects) > 1:
        raise ContractError("iou_fg expects a single foreground object, use ari_fg",
                            {"objects": objects.tolist()})
    foreground = gt != background_id
    if not foreground.any():
        return UNDEFINED

    labels, overlaps = np.unique(pred[foreground], return_counts=True)
    best = labels[np.argmax(overlaps)]
    region = pred == best
    intersection = np.logical_and(region, foreground).sum()
    union = np.logical_or(region, foreground).sum()
    return float(intersection / union)


def combined(pred, gt, single_object: bool) -> float:
    """ARI + ARI_fg (много объектов) или ARI + IoU (один объект), в процентах."""
    second = iou_fg(pred, gt) if single_object else ari_fg(pred, gt)
    return 100.0 * ari(pred, gt) + 100.0 * second


def video_metric(metric: Callable[..., float], pred, gt, **kwargs) -> float:
    """Метрика по кадрам (T, H, W), затем среднее по кадрам без NaN."""
    pred, gt = _as_labels(pred), _as_labels(gt)
    _check_shapes(pred, gt)
    values = [metric(p, g, **kwargs) for p, g in zip(pred, gt)]
    return nan_mean(values)


def nan_mean(values: Sequence[float]) -> float:
    finite = [v for v in values if not np.isnan(v)]
    return float(np.mean(finite)) if finite else UNDEFINED


def random_rectangles_partition(shape, num_slots: int, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """
    Базовый разбиватель без обучения: фон 0 и K-1 случайных прямоугольников,
    нарисованных поверх друг друга.
    """
    rng = rng if rng is not None else np.random.default_rng()
    height, width = shape
    labels = np.zeros((height, width), dtype=np.int64)
    for k in range(1, num_slots):
        y0, y1 = np.sort(rng.integers(0, height + 1, size=2))
        x0, x1 = np.sort(rng.integers(0, width + 1, size=2))
        labels[y0:max(y1, y0 + 1), x0:max(x1, x0 + 1)] = k
    return labels
