from dataclasses import dataclass
from typing import Optional, Sequence

import torch

from gdrlab.core.exceptions import ValidationError

SENTINEL_BOX = (0.0, 0.0, 0.0, 0.0)


@dataclass
class SlotSet:
    slots: torch.Tensor             # (B, K, c)
    attention: torch.Tensor         # (B, K, N), нормировано по слотам
    num_iterations_used: int


@dataclass
class ConditionPrior:
    """Нормированные боксы (B, K, 4) в формате (x0, y0, x1, y1), дополненные sentinel-боксами."""
    boxes: torch.Tensor

    @classmethod
    def from_pixels(cls, boxes: Sequence[Sequence[float]], frame_size: int, num_slots: int,
                    device: Optional[torch.device] = None) -> 'ConditionPrior':
        """Боксы в пикселях одного кадра -> нормированный приор (1, K, 4)."""
        if len(boxes) > num_slots:
            raise ValidationError("more boxes than slots", {"boxes": len(boxes), "K": num_slots})
        rows = [[float(v) / frame_size for v in box] for box in boxes]
        rows += [list(SENTINEL_BOX)] * (num_slots - len(rows))
        tensor = torch.tensor(rows, dtype=torch.float32, device=device).unsqueeze(0)
        if bool(((tensor < 0) | (tensor > 1)).any()):
            raise ValidationError("boxes fall outside the frame", {"frame_size": frame_size})
        return cls(tensor)

