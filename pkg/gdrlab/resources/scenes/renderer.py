"""
Рендер синтетических сцен: плоские фигуры без сглаживания на фоне с градиентом и текстурой.

Маска хранится в index-формате (0 = фон, i = объект i), боксы плотно охватывают
видимую часть маски и нормированы на размер кадра.
"""
from dataclasses import dataclass
from typing import List, Tuple

import cv2
import numpy as np

from gdrlab.core.exceptions import GenerationError, ValidationError
from gdrlab.models.scene_models import AttributeVocabulary, SceneRecord
from gdrlab.resources.presets import Backgrounds, Shapes
from gdrlab.utils.retry import operation_with_retry

MIN_SCALE = 0.15
MAX_SCALE = 0.30
PLACEMENT_ATTEMPTS = 100
MIN_VIDEO_FRAMES = 6

_POLYGON_VERTICES = {Shapes.TRIANGLE: 3, Shapes.DIAMOND: 4, Shapes.PENTAGON: 5, Shapes.HEXAGON: 6}


@dataclass
class _Placement:
    center: np.ndarray      # (x, y) float
    radius: float
    color: int
    shape: int
    velocity: np.ndarray


def draw_shape(canvas: np.ndarray, shape: str, center: Tuple[float, float], radius: float, value) -> np.ndarray:
    """Рисует заполненную фигуру на canvas (in-place). LINE_8, то есть без антиалиасинга."""
    cx, cy = center
    if shape == Shapes.CIRCLE:
        cv2.circle(canvas, (int(round(cx)), int(round(cy))), int(round(radius)), value, -1, lineType=cv2.LINE_8)
        return canvas
    if shape == Shapes.SQUARE:
        half = radius / np.sqrt(2)
        corners = np.array([[cx - half, cy - half], [cx + half, cy - half],
                            [cx + half, cy + half], [cx - half, cy + half]])
    elif shape in _POLYGON_VERTICES:
        k = _POLYGON_VERTICES[shape]
        angles = -np.pi / 2 + 2 * np.pi * np.arange(k) / k
        corners = np.stack([cx + radius * np.cos(angles), cy + radius * np.sin(angles)], axis=1)
    else:
        raise ValidationError("unknown shape", {"shape": shape})
    cv2.fillPoly(canvas, [np.round(corners).astype(np.int32)], value, lineType=cv2.LINE_8)
    return canvas


def render_background(resolution: int, texture: str, rng: np.random.Generator) -> np.ndarray:
    """Низкочастотный градиент по случайному направлению плюс процедурная текстура"""
    base = np.array(Backgrounds.PALETTE[rng.integers(len(Backgrounds.PALETTE))], dtype=np.float32)
    angle = rng.uniform(0, 2 * np.pi)
    ys, xs = np.mgrid[0:resolution, 0:resolution].astype(np.float32) / max(resolution - 1, 1)
    gradient = (np.cos(angle) * xs + np.sin(angle) * ys - 0.5) * 40.0

    period = max(resolution // 8, 2)
    if texture == "plain":
        pattern = np.zeros_like(xs)
    elif texture == "stripes":
        pattern = np.where((np.arange(resolution) // period) % 2 == 0, 15.0, -15.0)[None, :].repeat(resolution, 0)
    elif texture == "checker":
        grid = np.arange(resolution) // period
        pattern = np.where((grid[:, None] + grid[None, :]) % 2 == 0, 18.0, -18.0)
    elif texture == "dots":
        pattern = np.zeros((resolution, resolution), dtype=np.float32)
        for y in range(period // 2, resolution, period):
            for x in range(period // 2, resolution, period):
                cv2.circle(pattern, (x, y), max(period // 4, 1), 25.0, -1, lineType=cv2.LINE_8)
    else:
        raise ValidationError("unknown background texture", {"texture": texture})

    shade = (gradient + pattern)[..., None]
    return np.clip(base[None, None, :] + shade, 0, 255).astype(np.uint8)


def _disjoint(center: np.ndarray, radius: float, placed: List[_Placement]) -> bool:
    return all(np.linalg.norm(center - p.center) > radius + p.radius + 1.0 for p in placed)


@operation_with_retry(max_retries=3)
def _place_objects(vocab: AttributeVocabulary, num_objects: int, resolution: int,
                   rng: np.random.Generator, max_speed: float = 0.0) -> List[_Placement]:
    placed: List[_Placement] = []
    for _ in range(num_objects):
        for _ in range(PLACEMENT_ATTEMPTS):
            radius = rng.uniform(MIN_SCALE, MAX_SCALE) * resolution / 2
            center = rng.uniform(radius, resolution - 1 - radius, size=2)
            if _disjoint(center, radius, placed):
                break
        else:
            raise GenerationError("could not place objects without overlap",
                                  {"placed": len(placed), "requested": num_objects})
        velocity = rng.uniform(-max_speed, max_speed, size=2) if max_speed > 0 else np.zeros(2)
        placed.append(_Placement(center=center, radius=radius,
                                 color=int(rng.integers(len(vocab.colors))),
                                 shape=int(rng.integers(len(vocab.shapes))),
                                 velocity=velocity))
    return placed


def tight_boxes(mask: np.ndarray, num_objects: int) -> np.ndarray:
    """Нормированные (x0, y0, x1, y1) по видимой маске; невидимый объект получает нулевой бокс."""
    resolution = mask.shape[-1]
    boxes = np.zeros((num_objects, 4), dtype=np.float32)
    for i in range(num_objects):
        ys, xs = np.nonzero(mask == i + 1)
        if len(xs):
            boxes[i] = (xs.min() / resolution, ys.min() / resolution,
                        (xs.max() + 1) / resolution, (ys.max() + 1) / resolution)
    return boxes


def _render_frame(background: np.ndarray, placements: List[_Placement], vocab: AttributeVocabulary):
    image = background.copy()
    mask = np.zeros(background.shape[:2], dtype=np.uint8)
    for i, p in enumerate(placements):
        shape = vocab.shapes[p.shape]
        center = (float(p.center[0]), float(p.center[1]))
        draw_shape(mask, shape, center, p.radius, i + 1)
    # Цвет кладётся по маске, поэтому пиксели объекта совпадают с его меткой точно
    for i, p in enumerate(placements):
        image[mask == i + 1] = vocab.colors[p.color]
    return image, mask


def generate_scene(vocab: AttributeVocabulary, num_objects: int, resolution: int,
                   rng: np.random.Generator, max_objects: int = None) -> SceneRecord:
    """
    Сцена из num_objects непересекающихся объектов.

    Raises:
        ValidationError: num_objects больше допустимого.
        GenerationError: объекты не удалось разместить после всех попыток.
    """
    limit = vocab.max_objects if max_objects is None else max_objects
    if not 0 <= num_objects <= limit:
        raise ValidationError("num_objects outside the allowed range", {"num_objects": num_objects, "max": limit})

    texture = vocab.textures[int(rng.integers(len(vocab.textures)))]
    background = render_background(resolution, texture, rng)
    placements = _place_objects(vocab, num_objects, resolution, rng)
    image, mask = _render_frame(background, placements, vocab)
    return SceneRecord(image=image, mask=mask, boxes=tight_boxes(mask, num_objects),
                       labels=[(p.color, p.shape) for p in placements], texture=texture)


def _advance(placements: List[_Placement], resolution: int) -> None:
    """Линейный дрейф с отражением от границ кадра"""
    for p in placements:
        p.center = p.center + p.velocity
        for axis in range(2):
            low, high = p.radius, resolution - 1 - p.radius
            if p.center[axis] < low:
                p.center[axis] = 2 * low - p.center[axis]
                p.velocity[axis] = -p.velocity[axis]
            elif p.center[axis] > high:
                p.center[axis] = 2 * high - p.center[axis]
                p.velocity[axis] = -p.velocity[axis]


def generate_video(vocab: AttributeVocabulary, num_objects: int, frames: int, resolution: int,
                   rng: np.random.Generator, max_speed: float = 2.0, max_objects: int = None) -> SceneRecord:
    """
    Видео с объектами, дрейфующими с постоянной скоростью. Атрибуты не меняются во времени.

    При max_speed = 0 все кадры одинаковы. Объекты могут перекрываться в движении,
    тогда в маске побеждает объект с большим номером.
    """
    if frames < MIN_VIDEO_FRAMES:
        raise ValidationError("video needs at least the training time window of frames",
                              {"frames": frames, "min": MIN_VIDEO_FRAMES})
    limit = vocab.max_objects if max_objects is None else max_objects
    if not 0 <= num_objects <= limit:
        raise ValidationError("num_objects outside the allowed range", {"num_objects": num_objects, "max": limit})

    texture = vocab.textures[int(rng.integers(len(vocab.textures)))]
    background = render_background(resolution, texture, rng)
    placements = _place_objects(vocab, num_objects, resolution, rng, max_speed=max_speed)

    images, masks, boxes = [], [], []
    for t in range(frames):
        if t:
            _advance(placements, resolution)
        image, mask = _render_frame(background, placements, vocab)
        images.append(image)
        masks.append(mask)
        boxes.append(tight_boxes(mask, num_objects))

    return SceneRecord(image=np.stack(images), mask=np.stack(masks), boxes=np.stack(boxes),
                       labels=[(p.color, p.shape) for p in placements], texture=texture)


def sample_num_objects(vocab: AttributeVocabulary, rng: np.random.Generator) -> int:
    return int(rng.integers(vocab.min_objects, vocab.max_objects + 1))
