from pathlib import Path
from typing import Dict, Iterable, Optional

import numpy as np

from gdrlab.models.pipeline_models import MetricRecord, TransferRecord, UNDEFINED, render_value
from gdrlab.resources.metrics import ari, ari_fg, combined, iou_fg, random_rectangles_partition, video_metric
from gdrlab.resources.presets import Artifacts
from gdrlab.utils.generators import Generates
from gdrlab.utils.serializer import RecordWriter, write_summary
from .base_tools import BaseTools


class MetricTools(BaseTools):
    def validate(self):
        pass

    def score_sample(self, pred, gt, sample_id: int = 0) -> Dict[str, float]:
        """
        Метрики одного сэмпла. pred, gt: (T, H, W), для изображений T = 1.
        Базовая линия случайных прямоугольников считается на тех же кадрах
        с потоком случайности (seed, sample_id).
        """
        pred, gt = np.asarray(pred), np.asarray(gt)
        single = self.config.single_object
        rng = Generates.numpy_rng(self.config.seed, sample_id)
        baseline = np.stack([random_rectangles_partition(frame.shape, self.config.num_slots, rng) for frame in gt])
        return {
            "ari": video_metric(ari, pred, gt),
            "ari_fg": video_metric(ari_fg, pred, gt),
            "iou": video_metric(iou_fg, pred, gt) if single else UNDEFINED,
            "combined": video_metric(combined, pred, gt, single_object=single),
            "baseline_combined": video_metric(combined, baseline, gt, single_object=single),
        }

    def summary_rows(self, record: MetricRecord):
        return record.summary_rows() + [["samples", str(record.num_samples)]]

    def write_summary(self, record: MetricRecord, out_dir, title: str = "Evaluation") -> Path:
        return write_summary(Path(out_dir) / Artifacts.SUMMARY, title, self.summary_rows(record))

    def write_transfer_summary(self, record: TransferRecord, out_dir, source: str, target: str) -> Path:
        rows = [
            [f"combined ({source})", render_value(record.source_combined, 2)],
            [f"combined ({target})", render_value(record.target_combined, 2)],
            ["delta", render_value(record.delta, 2)],
        ]
        return write_summary(Path(out_dir) / Artifacts.SUMMARY, "Transfer evaluation", rows)

    def write_records(self, records: Iterable[Dict], out_dir, append: bool = True) -> Path:
        path = Path(out_dir) / Artifacts.RECORDS
        with RecordWriter(path, append=append) as writer:
            writer.write_many(records)
        return path

    def sample_writer(self, out_dir: Optional[Path]) -> Optional[RecordWriter]:
        return RecordWriter(Path(out_dir) / Artifacts.RECORDS) if out_dir is not None else None
