from pathlib import Path
from typing import List, Optional

from torch.utils.data import DataLoader

from gdrlab.core.exceptions import ValidationError
from gdrlab.core.logger import logger
from gdrlab.models.pipeline_models import DatasetInfo
from gdrlab.models.scene_models import AttributeVocabulary, SceneRecord
from gdrlab.resources.presets import Presets
from gdrlab.resources.scenes import (SceneDataset, SceneStore, generate_scene, generate_video, pack_dataset,
                                     sample_num_objects)
from gdrlab.utils.generators import Generates
from gdrlab.utils.timer import timer
from .base_tools import BaseTools


class DataTools(BaseTools):
    def __init__(self, context):
        super().__init__(context)
        self._datasets: List[SceneDataset] = []

    def validate(self):
        if self.config.input_resolution < 16:
            raise ValidationError("synthetic scenes need at least 16 pixels per side",
                                  {"input_resolution": self.config.input_resolution})

    def vocabulary(self, preset: str) -> AttributeVocabulary:
        return AttributeVocabulary.from_preset(preset)

    def render(self, preset: str, num: int, video: bool = False, frames: int = 12, seed: int = 0,
               resolution: Optional[int] = None, max_speed: float = 2.0,
               single_object: bool = False) -> List[SceneRecord]:
        """Рендер num сцен; у записи i свой поток случайности (seed, i)."""
        self.validate()
        vocab = self.vocabulary(preset)
        resolution = resolution or self.config.input_resolution
        records = []
        for i in range(num):
            rng = Generates.numpy_rng(seed, i)
            count = 1 if single_object else sample_num_objects(vocab, rng)
            if video:
                records.append(generate_video(vocab, count, frames, resolution, rng, max_speed=max_speed))
            else:
                records.append(generate_scene(vocab, count, resolution, rng))
        return records

    @timer
    def generate_dataset(self, preset: str, num: int, out, video: bool = False, frames: int = 12,
                         seed: int = 0, overwrite: bool = False, single_object: bool = False) -> Path:
        if preset not in Presets.ALL:
            raise ValidationError("unknown preset", {"preset": preset, "known": Presets.ALL})
        records = self.render(preset, num, video=video, frames=frames, seed=seed, single_object=single_object)
        path = pack_dataset(records, out, overwrite=overwrite, preset=preset)
        logger.info(f"Dataset {preset} ({'video' if video else 'image'}, {num} samples) -> {path}")
        return path

    def dataset_info(self, path) -> DatasetInfo:
        with SceneStore(path) as store:
            return store.info

    def open_dataset(self, path, training: bool, seed: Optional[int] = None) -> SceneDataset:
        dataset = SceneDataset(path, training=training, num_slots=self.config.num_slots,
                               time_window=self.config.time_window,
                               seed=self.config.seed if seed is None else seed)
        self._datasets.append(dataset)
        return dataset

    def loader(self, dataset: SceneDataset, shuffle: bool, batch_size: Optional[int] = None,
               seed: Optional[int] = None) -> DataLoader:
        generator = Generates.torch_generator(self.config.seed if seed is None else seed)
        workers = self.config.num_workers
        return DataLoader(dataset, batch_size=batch_size or self.config.batch_size, shuffle=shuffle,
                          num_workers=workers, generator=generator, drop_last=False,
                          persistent_workers=False, prefetch_factor=2 if workers > 0 else None)

    def infinite_batches(self, dataset: SceneDataset, seed: Optional[int] = None):
        """Бесконечный поток перемешанных батчей, эпоха за эпохой"""
        loader = self.loader(dataset, shuffle=True, seed=seed)
        epoch = 0
        while True:
            dataset.set_epoch(epoch)
            for batch in loader:
                yield batch
            epoch += 1

    def cleanup(self):
        for dataset in self._datasets:
            dataset.close()
        self._datasets.clear()
