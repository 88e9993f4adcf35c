from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from gdrlab.core.exceptions import ValidationError


@dataclass(frozen=True)
class AttributeVocabulary:
    """
    Словарь атрибутов объектов. Комбинации color x shape перечисляют все типы объектов.

    textures относятся к фону и в метки объектов не входят.
    """
    colors: Tuple[Tuple[int, int, int], ...]
    shapes: Tuple[str, ...]
    textures: Tuple[str, ...] = ("plain",)
    min_objects: int = 1
    max_objects: int = 4

    def __post_init__(self):
        object.__setattr__(self, "colors", tuple(tuple(int(v) for v in c) for c in self.colors))
        object.__setattr__(self, "shapes", tuple(self.shapes))
        object.__setattr__(self, "textures", tuple(self.textures))
        if len(self.colors) < 2 or len(self.shapes) < 2:
            raise ValidationError("vocabulary needs at least two colors and two shapes",
                                  {"colors": len(self.colors), "shapes": len(self.shapes)})
        if not self.textures:
            raise ValidationError("vocabulary needs at least one background texture")
        if not 0 <= self.min_objects <= self.max_objects:
            raise ValidationError("object count range is inconsistent",
                                  {"min": self.min_objects, "max": self.max_objects})

    @classmethod
    def from_preset(cls, preset: str) -> 'AttributeVocabulary':
        from gdrlab.resources.presets import Presets

        if preset not in Presets.VOCABULARIES:
            raise ValidationError("unknown vocabulary preset", {"preset": preset, "known": Presets.ALL})
        colors, shapes, textures, low, high = Presets.VOCABULARIES[preset]
        return cls(colors, shapes, textures, low, high)

    @property
    def attribute_names(self) -> Tuple[str, str]:
        return ("color", "shape")

    @property
    def num_object_types(self) -> int:
        return len(self.colors) * len(self.shapes)

    def describe(self, label: Sequence[int]) -> str:
        return f"color{label[0]}-{self.shapes[label[1]]}"


@dataclass
class SceneRecord:
    """
    Один синтетический сэмпл.

    image: (H, W, 3) uint8 или (T, H, W, 3) для видео.
    mask: (H, W) uint8 в index-формате, 0 = фон; (T, H, W) для видео.
    boxes: (num_objects, 4) float32, нормированные (x0, y0, x1, y1); (T, num_objects, 4) для видео.
    labels: кортеж атрибутов (color, shape) на объект, индекс объекта = значение в маске минус 1.
    """
    image: np.ndarray
    mask: np.ndarray
    boxes: np.ndarray
    labels: List[Tuple[int, ...]] = field(default_factory=list)
    texture: Optional[str] = None

    @property
    def is_video(self) -> bool:
        return self.image.ndim == 4

    @property
    def num_objects(self) -> int:
        return len(self.labels)

    @property
    def num_frames(self) -> int:
        return self.image.shape[0] if self.is_video else 1

    @property
    def resolution(self) -> int:
        return self.image.shape[-2]
