"""
Артефакты интерпретируемости: карты индексов, подмена атрибута, кривые использования кодов
и выравнивание групп с атрибутами объектов.
"""
import csv
import math
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np
import torch

from gdrlab.core.exceptions import ConfigurationError, EmptyInputError, IndexRangeError
from gdrlab.core.logger import logger
from gdrlab.models.codebook_models import TokenGrid
from gdrlab.resources.analysis import (AlignmentReport, attribute_alignment, attribute_swap, hsv_index_map,
                                       modal_indexes, plot_curves, save_image, shuffled_control, utilization_curve)
from gdrlab.resources.analysis.visualization import UTILIZATION_SIGMA
from gdrlab.resources.codebooks import utilization_histogram
from gdrlab.resources.metrics import random_rectangles_partition
from gdrlab.resources.networks import OCLModel
from gdrlab.resources.scenes import SceneDataset
from gdrlab.utils.generators import Generates
from .base_tools import BaseTools

ALIGNMENT_CSV = "alignment.csv"
CONTROL_CSV = "alignment_control.csv"
UTILIZATION_CSV = "utilization.csv"
UTILIZATION_PNG = "utilization.png"


def _first_frame(batch: Dict[str, torch.Tensor]) -> Tuple[torch.Tensor, torch.Tensor]:
    images, masks = batch["image"], batch["mask"]
    if images.dim() == 5:
        images, masks = images[:, 0], masks[:, 0]
    return images, masks


class AnalysisTools(BaseTools):
    def validate(self):
        pass

    @property
    def device(self) -> torch.device:
        return torch.device(self.config.device)

    @torch.no_grad()
    def token_batches(self, model: OCLModel, dataset: SceneDataset
                      ) -> Iterator[Tuple[int, torch.Tensor, TokenGrid, torch.Tensor]]:
        """(индекс первого сэмпла, изображения, токены, маски) по первому кадру каждого сэмпла"""
        model.eval()
        start = 0
        for batch in self._context.tools_manager.data.loader(dataset, shuffle=False):
            images, masks = _first_frame(batch)
            images = images.to(self.device)
            yield start, images, model.tokenize(images), masks
            start += images.shape[0]

    def index_map(self, model: OCLModel, dataset: SceneDataset, out_dir, num_samples: int = 4,
                  permute: bool = False, seed: int = 0) -> List[Path]:
        """Первые num_samples сэмплов: исходное изображение и g HSV-карт индексов."""
        _, images, tokens, _ = next(self.token_batches(model, dataset))
        count = min(num_samples, images.shape[0])
        tokens = TokenGrid(tokens.soft[:count], tokens.hard[:count], tokens.natural[:count], tokens.layout)
        rng = Generates.numpy_rng(seed) if permute else None
        paths = hsv_index_map(tokens, model.layout, permutation_rng=rng).save(out_dir)
        for i in range(count):
            paths.append(save_image(images[i], Path(out_dir) / f"input_s{i:03d}.png"))
        logger.info(f"Index maps for {count} samples ({model.layout.label()}) -> {out_dir}")
        return paths

    @torch.no_grad()
    def slot_region(self, model: OCLModel, dataset: SceneDataset, sample: int, slot: int) -> torch.Tensor:
        """Маска слота slot на сетке токенов (по первому кадру)."""
        if not 0 <= slot < self.config.num_slots:
            raise IndexRangeError("slot index outside num_slots", {"slot": slot, "K": self.config.num_slots})
        item = dataset[sample]
        out = model(item["image"][None].to(self.device), 0.0, None, item["boxes"][None].to(self.device))
        side = self.config.token_resolution
        grid = math.isqrt(out.attention.shape[-1])
        labels = out.attention[:, 0].argmax(dim=1).reshape(1, grid, grid)
        # внимание по пикселям прореживается до сетки токенов
        step = grid // side
        return labels[:, ::step, ::step] == slot

    def random_region(self, rng: np.random.Generator) -> torch.Tensor:
        side = self.config.token_resolution
        return torch.from_numpy(random_rectangles_partition((side, side), 2, rng) == 1)[None]

    @torch.no_grad()
    def swap(self, model: OCLModel, dataset: SceneDataset, out_dir, group_index: int,
             new_value: Optional[int] = None, slot: Optional[int] = None, sample: int = 0,
             seed: int = 0) -> List[Path]:
        """
        Подмена элемента group_index кортежей в регионе: маска слота slot или
        случайный прямоугольник (slot is None). new_value по умолчанию случайный.
        """
        model.eval()
        if not 0 <= sample < len(dataset):
            raise IndexRangeError("sample index outside the dataset", {"sample": sample, "size": len(dataset)})
        rng = Generates.numpy_rng(seed, sample)
        item = dataset[sample]
        images, _ = _first_frame({"image": item["image"][None], "mask": item["mask"][None]})
        images = images.to(self.device)
        tokens = model.tokenize(images)

        region = self.random_region(rng) if slot is None else self.slot_region(model, dataset, sample, slot)
        if new_value is None:
            new_value = int(rng.integers(0, model.layout.sizes[group_index])) \
                if 0 <= group_index < model.layout.g else group_index
        swapped_image, _ = attribute_swap(tokens, region.to(self.device), group_index, new_value, model.dvae)
        original = model.dvae.decode_hard(tokens)

        out_dir = Path(out_dir)
        paths = [
            save_image(images[0], out_dir / f"swap_s{sample:03d}_input.png"),
            save_image(original[0], out_dir / f"swap_s{sample:03d}_decoded.png"),
            save_image(swapped_image[0], out_dir / f"swap_s{sample:03d}_g{group_index}_v{new_value}.png"),
        ]
        logger.info(f"Swapped group {group_index} to {new_value} over {int(region.sum())} tokens -> {out_dir}")
        return paths

    def utilization(self, models: Dict[str, OCLModel], dataset: SceneDataset, out_dir,
                    sigma: float = UTILIZATION_SIGMA) -> Dict[str, np.ndarray]:
        """
        Сглаженные кривые частот натуральных кодов для нескольких моделей
        (например, с лоссом использования и без). CSV: label, rank, frequency, smoothed.
        """
        if not models:
            raise EmptyInputError("at least one model is needed for a utilization curve")
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        curves = {}
        with (out_dir / UTILIZATION_CSV).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["label", "rank", "frequency", "smoothed"])
            for label, model in models.items():
                report = utilization_histogram((tokens for _, _, tokens, _ in self.token_batches(model, dataset)),
                                               model.layout)
                curve = utilization_curve(report, sigma)
                ordered = np.sort(report.natural_frequencies)[::-1]
                for rank, (raw, smooth) in enumerate(zip(ordered, curve)):
                    writer.writerow([label, rank, f"{raw:.8f}", f"{smooth:.8f}"])
                curves[label] = curve
                logger.info(f"[{label}] never-used codes: {report.never_used_natural} of {model.layout.n}")
        plot_curves(curves, out_dir / UTILIZATION_PNG)
        return curves

    def alignment(self, model: OCLModel, dataset: SceneDataset, out_dir, num_permutations: int = 20,
                  seed: int = 0) -> AlignmentReport:
        """NMI групп кода с атрибутами (color, shape) и перестановочный контроль."""
        if not dataset.info.has_boxes:
            raise ConfigurationError("alignment needs labeled objects", {"preset": dataset.info.preset})
        indexes, attributes = [], []
        for start, _, tokens, masks in self.token_batches(model, dataset):
            labels = [dataset.record(start + i).labels for i in range(masks.shape[0])]
            batch_indexes, batch_attributes = modal_indexes(tokens.hard, masks, labels)
            indexes.append(batch_indexes)
            attributes.append(batch_attributes)
        indexes, attributes = np.concatenate(indexes), np.concatenate(attributes)
        names = ("color", "shape")
        report = attribute_alignment(indexes, attributes, model.layout, names)
        mean, std = shuffled_control(indexes, attributes, model.layout, num_permutations,
                                     Generates.numpy_rng(seed), names)

        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        with (out_dir / ALIGNMENT_CSV).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["group", "attribute", "nmi"])
            for i, row in enumerate(report.scores):
                for name, score in zip(report.attribute_names, row):
                    writer.writerow([i, name, "NA" if np.isnan(score) else f"{score:.6f}"])
        with (out_dir / CONTROL_CSV).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["group", "best_attribute", "best_nmi", "control_mean", "control_std"])
            for i in range(model.layout.g):
                best = report.best_score[i]
                writer.writerow([i, report.best_attribute[i], "NA" if np.isnan(best) else f"{best:.6f}",
                                 f"{mean[i]:.6f}", f"{std[i]:.6f}"])
        logger.info(f"Alignment over {report.num_objects} objects: best {report.best_attribute}")
        return report
