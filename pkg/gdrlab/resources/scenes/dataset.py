from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np
import torch
from torch.utils.data import Dataset

from gdrlab.core.exceptions import ValidationError
from gdrlab.models.scene_models import SceneRecord
from gdrlab.models.slot_models import SENTINEL_BOX
from gdrlab.utils.generators import Generates
from .store import SceneStore

PIXEL_SHIFT = 127.5
PIXEL_SCALE = 127.5


@dataclass
class PreparedSample:
    image: torch.Tensor         # (3, H, W) или (T, 3, H, W), [-1, 1]
    mask: torch.Tensor          # (H, W) или (T, H, W), long
    boxes: torch.Tensor         # (K, 4) или (T, K, 4)

    def as_dict(self) -> Dict[str, torch.Tensor]:
        return {"image": self.image, "mask": self.mask, "boxes": self.boxes}


def normalize_pixels(values: np.ndarray) -> np.ndarray:
    return (values.astype(np.float32) - PIXEL_SHIFT) / PIXEL_SCALE


def pad_boxes(boxes: np.ndarray, num_slots: int) -> np.ndarray:
    """(..., n, 4) -> (..., K, 4), хвост заполнен sentinel-боксом"""
    count = boxes.shape[-2]
    if count > num_slots:
        raise ValidationError("more boxes than slots", {"boxes": count, "K": num_slots})
    pad_shape = boxes.shape[:-2] + (num_slots - count, 4)
    padding = np.broadcast_to(np.asarray(SENTINEL_BOX, dtype=np.float32), pad_shape)
    return np.concatenate([boxes.astype(np.float32), padding], axis=-2)


def preprocess(record: SceneRecord, training: bool, num_slots: int, rng: Optional[np.random.Generator] = None,
               time_window: int = 6) -> PreparedSample:
    """
    Пиксели -> (v - 127.5) / 127.5, боксы дополняются до K.
    Видео при обучении режется случайным окном time_window, одинаково для image/mask/boxes;
    на валидации и тесте кадры не режутся.

    Raises:
        ValidationError: видео короче окна.
    """
    image, mask, boxes = record.image, record.mask, record.boxes
    if record.is_video and training:
        frames = record.num_frames
        if frames < time_window:
            raise ValidationError("video shorter than the training time window",
                                  {"frames": frames, "time_window": time_window})
        rng = rng if rng is not None else np.random.default_rng()
        start = int(rng.integers(0, frames - time_window + 1))
        image, mask, boxes = (a[start:start + time_window] for a in (image, mask, boxes))

    pixels = torch.from_numpy(normalize_pixels(image))
    pixels = pixels.permute(0, 3, 1, 2) if record.is_video else pixels.permute(2, 0, 1)
    return PreparedSample(image=pixels.contiguous(),
                          mask=torch.from_numpy(mask.astype(np.int64)),
                          boxes=torch.from_numpy(pad_boxes(boxes, num_slots)))


class SceneDataset(Dataset):
    """
    torch Dataset над packed-хранилищем.

    Случайность кропа зависит только от (seed, epoch, index), поэтому
    результат не зависит от числа воркеров.
    """

    def __init__(self, path, training: bool, num_slots: int, time_window: int = 6, seed: int = 0):
        self.store = SceneStore(path)
        self.training = training
        self.num_slots = num_slots
        self.time_window = time_window
        self.seed = seed
        self.epoch = 0

    @property
    def info(self):
        return self.store.info

    def set_epoch(self, epoch: int) -> None:
        self.epoch = epoch

    def __len__(self) -> int:
        return len(self.store)

    def __getitem__(self, index: int) -> Dict[str, torch.Tensor]:
        rng = Generates.numpy_rng(self.seed, self.epoch, index)
        sample = preprocess(self.store[index], self.training, self.num_slots, rng, self.time_window)
        return sample.as_dict()

    def record(self, index: int) -> SceneRecord:
        return self.store[index]

    def close(self) -> None:
        self.store.close()
