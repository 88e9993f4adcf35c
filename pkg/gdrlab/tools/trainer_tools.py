"""
Двухстадийное обучение и оценка.

Стадия 1: dVAE вместе с кодбуком на реконструкции (+ лосс использования кодов).
Стадия 2: dVAE и кодбук заморожены, учатся Slot Attention, предиктор и декодер токенов
на классификации натуральных индексов.
"""
import csv
import math
from pathlib import Path
from typing import Dict, Iterator, Optional, Tuple

import numpy as np
import torch
from torch.nn.utils import clip_grad_norm_

from gdrlab.core.error_handler import StageErrorHandler
from gdrlab.core.exceptions import ConfigurationError, TrainingDivergenceError
from gdrlab.core.logger import logger
from gdrlab.models.codebook_models import GroupLayout
from gdrlab.models.config_models import GlobalConfig, QueryMode, ScheduleSpec, Stage
from gdrlab.models.pipeline_models import (DatasetInfo, MetricRecord, ModelVariant, PretrainReport, TrainReport,
                                           TransferRecord)
from gdrlab.resources.codebooks import utilization_histogram, utilization_loss
from gdrlab.resources.metrics import nan_mean
from gdrlab.resources.networks import OCLModel, TEST_TAU, build_model, masks_from_attention, next_token_accuracy, \
    recon_loss
from gdrlab.resources.presets import Artifacts, Layouts
from gdrlab.resources.scenes import SceneDataset
from gdrlab.utils.generators import Generates
from gdrlab.utils.indexing import balanced_sizes
from gdrlab.utils.serializer import RecordWriter
from gdrlab.utils.timer import timer
from .base_tools import BaseTools

CHECKPOINT_FORMAT_VERSION = 1


def layout_sizes(num_code: int, num_groups: int) -> Tuple[int, ...]:
    """Стандартные разбиения для 4096 кодов, иначе сбалансированное разложение."""
    if num_code == 4096 and num_groups in Layouts.BY_GROUPS:
        return Layouts.BY_GROUPS[num_groups]
    return balanced_sizes(num_code, num_groups)


def default_variant(config: GlobalConfig) -> ModelVariant:
    layout = GroupLayout.from_config(layout_sizes(config.num_code, config.num_groups), config)
    return ModelVariant(config.variant, layout, config.query_mode)


def save_checkpoint(model: OCLModel, path, stage: Stage, step: int, **extra) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save({
        "version": CHECKPOINT_FORMAT_VERSION,
        "stage": Stage(stage).value,
        "step": step,
        "config": model.config.to_record(),
        "variant": model.variant.to_record(),
        "state_dict": model.state_dict(),
        **extra,
    }, path)
    return path


def load_checkpoint(path, map_location: str = "cpu") -> Tuple[OCLModel, dict]:
    """Восстанавливает модель по чекпойнту: конфиг и вариант лежат внутри."""
    blob = torch.load(path, map_location=map_location, weights_only=True)
    if blob.get("version") != CHECKPOINT_FORMAT_VERSION:
        raise ConfigurationError("unsupported checkpoint version", {"version": blob.get("version")})
    config = GlobalConfig.from_record(blob["config"])
    model = OCLModel(ModelVariant.from_record(blob["variant"]), config)
    model.load_state_dict(blob["state_dict"])
    model.pretrained_stage1 = True
    return model, blob


def _finite(value) -> bool:
    return math.isfinite(float(value))


@StageErrorHandler.handle_stage_errors
class TrainerTools(BaseTools):
    def __init__(self, context):
        super().__init__(context)
        self._scaler: Optional[torch.amp.GradScaler] = None

    def validate(self):
        self.config.validate()
        if self.config.device.startswith("cuda") and not torch.cuda.is_available():
            raise ConfigurationError("CUDA device requested but not available", {"device": self.config.device})

    @property
    def device(self) -> torch.device:
        return torch.device(self.config.device)

    @property
    def _amp(self) -> bool:
        return self.config.mixed_precision and self.device.type == "cuda"

    def _stage_dir(self, name: str) -> Path:
        path = Path(self._context.run_dir) / name
        path.mkdir(parents=True, exist_ok=True)
        return path

    def build(self, variant: Optional[ModelVariant] = None, dataset_info: Optional[DatasetInfo] = None) -> OCLModel:
        self.validate()
        model = build_model(variant or default_variant(self.config), self.config, dataset_info)
        return model.to(self.device)

    def _images(self, batch: Dict[str, torch.Tensor], flatten_time: bool) -> torch.Tensor:
        images = batch["image"].to(self.device)
        if flatten_time and images.dim() == 5:
            images = images.flatten(0, 1)
        return images

    @staticmethod
    def _set_lr(optimizer: torch.optim.Optimizer, lr: float) -> None:
        for group in optimizer.param_groups:
            group["lr"] = lr

    def _backward_and_step(self, loss, optimizer, parameters) -> float:
        optimizer.zero_grad(set_to_none=True)
        if self._amp:
            self._scaler.scale(loss).backward()
            self._scaler.unscale_(optimizer)
            grad_norm = clip_grad_norm_(parameters, self.config.grad_clip)
            self._scaler.step(optimizer)
            self._scaler.update()
        else:
            loss.backward()
            grad_norm = clip_grad_norm_(parameters, self.config.grad_clip)
            optimizer.step()
        return float(grad_norm)

    def _new_scaler(self) -> None:
        self._scaler = torch.amp.GradScaler("cuda", enabled=self._amp) if self._amp else None

    def pretrain_step(self, model: OCLModel, optimizer: torch.optim.Optimizer, batch: Dict[str, torch.Tensor],
                      step: int, schedules: Dict[str, ScheduleSpec],
                      generator: Optional[torch.Generator] = None) -> Dict[str, float]:
        """
        Один шаг стадии 1: l_i (+ λ_u * l_u), клиппинг градиента по норме grad_clip.

        Raises:
            TrainingDivergenceError: неконечный лосс или норма градиента.
        """
        tau = schedules["tau"].value_at(step)
        lr = schedules["lr"].value_at(step)
        self._set_lr(optimizer, lr)
        images = self._images(batch, flatten_time=True)

        with torch.autocast(device_type=self.device.type, enabled=self._amp):
            out = model.dvae(images, tau, generator)
            recon = recon_loss(out.reconstruction.float(), images)
            util = utilization_loss(out.tokens, model.layout)
            loss = recon + self.config.utilization_weight * util if self.config.use_utilization_loss else recon

        diagnostics = {"step": step, "recon": float(recon), "utilization_loss": float(util),
                       "tau": tau, "lr": lr}
        if not _finite(loss):
            raise TrainingDivergenceError("non-finite stage-1 loss", diagnostics)
        grad_norm = self._backward_and_step(loss, optimizer, list(model.discretizer_parameters()))
        if not _finite(grad_norm):
            raise TrainingDivergenceError("non-finite gradient norm", {**diagnostics, "grad_norm": grad_norm})

        used = torch.unique(out.tokens.natural).numel() / model.layout.n
        return {"loss": float(loss), "recon": float(recon), "tau": tau, "lr": lr,
                "utilization": used, "grad_norm": grad_norm}

    @torch.no_grad()
    def validate_stage1(self, model: OCLModel, dataset: SceneDataset):
        """Средний MSE реконструкции на τ = 0.1 без шума и гистограмма использования кодов."""
        model.eval()
        losses, weights, grids = [], [], []
        for batch in self._context.tools_manager.data.loader(dataset, shuffle=False):
            images = self._images(batch, flatten_time=True)
            out = model.dvae(images, TEST_TAU, noise_free=True)
            losses.append(float(recon_loss(out.reconstruction, images)))
            weights.append(images.shape[0])
            grids.append(out.tokens.detach())
        model.train()
        return float(np.average(losses, weights=weights)), utilization_histogram(grids, model.layout)

    @timer
    def run_stage1(self, model: OCLModel, dataset: SceneDataset, val_dataset: Optional[SceneDataset] = None
                   ) -> PretrainReport:
        """
        Обучение dVAE с кодбуком. Чекпойнт на каждом интервале валидации,
        лучший по валидационному MSE копируется в best.pt и загружается в модель.
        """
        self._new_scaler()
        val_dataset = val_dataset or dataset
        schedules = self._context.tools_manager.schedule.suite(Stage.DVAE_PRETRAIN)
        total = schedules["tau"].total_steps
        interval = min(self.config.scaled(self.config.dvae_interval), total)
        out_dir = self._stage_dir(Artifacts.STAGE1_DIR)

        optimizer = torch.optim.Adam(model.discretizer_parameters(), lr=0.0)
        generator = Generates.torch_generator(self.config.seed, self.device.type)
        batches: Iterator = self._context.tools_manager.data.infinite_batches(dataset, seed=self.config.seed)
        model.train()

        report = PretrainReport(steps=total, final_tau=schedules["tau"].value_at(total),
                                best_step=-1, best_val_loss=float("inf"))
        with (out_dir / Artifacts.LOSS_CURVE).open("w", newline="") as fh, \
                RecordWriter(out_dir / Artifacts.RECORDS, append=False) as records:
            curve = csv.writer(fh)
            curve.writerow(["step", "loss", "tau", "utilization"])
            for step in range(1, total + 1):
                stats = self.pretrain_step(model, optimizer, next(batches), step, schedules, generator)
                curve.writerow([step, f"{stats['loss']:.6f}", f"{stats['tau']:.6f}", f"{stats['utilization']:.6f}"])
                records.write(step=step, split="train", metric="loss", value=stats["loss"])

                if step % interval == 0 or step == total:
                    val_loss, usage = self.validate_stage1(model, val_dataset)
                    records.write(step=step, split="val", metric="recon", value=val_loss)
                    path = save_checkpoint(model, out_dir / Artifacts.CHECKPOINT.format(step=step),
                                           Stage.DVAE_PRETRAIN, step, val_loss=val_loss)
                    report.checkpoints.append(str(path))
                    report.val_losses[step] = val_loss
                    logger.info(f"[stage1] step {step}/{total} loss={stats['loss']:.5f} val={val_loss:.5f} "
                                f"tau={stats['tau']:.3f} lr={stats['lr']:.2e} unused={usage.never_used_natural}")
                    if val_loss < report.best_val_loss:
                        report.best_step, report.best_val_loss = step, val_loss
                        report.never_used_codes = usage.never_used_natural
                        save_checkpoint(model, out_dir / Artifacts.BEST, Stage.DVAE_PRETRAIN, step, val_loss=val_loss)

        best = torch.load(out_dir / Artifacts.BEST, map_location=self.device, weights_only=True)
        model.load_state_dict(best["state_dict"])
        model.pretrained_stage1 = True
        logger.info(f"[stage1] best step {report.best_step}, val recon {report.best_val_loss:.5f}")
        return report

    def load_stage1(self, model: OCLModel, path) -> OCLModel:
        """Подгружает dVAE и кодбук из чекпойнта стадии 1."""
        blob = torch.load(path, map_location=self.device, weights_only=True)
        dvae_state = {k[len("dvae."):]: v for k, v in blob["state_dict"].items() if k.startswith("dvae.")}
        model.dvae.load_state_dict(dvae_state)
        model.pretrained_stage1 = True
        return model

    @timer
    def run_stage2(self, model: OCLModel, dataset: SceneDataset, val_dataset: Optional[SceneDataset] = None,
                   stage1_checkpoint=None) -> TrainReport:
        """
        Обучение OCL-части при замороженных dVAE и кодбуке.

        Raises:
            ConfigurationError: нет чекпойнта стадии 1.
        """
        if stage1_checkpoint is not None:
            self.load_stage1(model, stage1_checkpoint)
        if not getattr(model, "pretrained_stage1", False):
            raise ConfigurationError("stage 2 needs a stage-1 checkpoint", {"variant": model.variant.label()})

        self._new_scaler()
        val_dataset = val_dataset or dataset
        model.freeze_discretizer()
        schedules = self._context.tools_manager.schedule.suite(Stage.OCL_TRAIN)
        total = schedules["lr"].total_steps
        interval = min(self.config.scaled(self.config.ocl_interval), total)
        out_dir = self._stage_dir(Artifacts.STAGE2_DIR)

        parameters = model.ocl_parameters()
        optimizer = torch.optim.Adam(parameters, lr=0.0)
        generator = Generates.torch_generator(self.config.seed + 1, self.device.type)
        batches = self._context.tools_manager.data.infinite_batches(dataset, seed=self.config.seed + 1)
        model.train()

        report = TrainReport(steps=total, final_sigma=schedules["sigma"].value_at(total),
                             best_step=-1, best_combined=float("-inf"))
        with RecordWriter(out_dir / Artifacts.RECORDS, append=False) as records:
            for step in range(1, total + 1):
                lr = schedules["lr"].value_at(step)
                sigma = schedules["sigma"].value_at(step)
                self._set_lr(optimizer, lr)
                batch = next(batches)
                with torch.autocast(device_type=self.device.type, enabled=self._amp):
                    out = model(batch["image"].to(self.device), sigma, generator, batch["boxes"].to(self.device))
                diagnostics = {"step": step, "loss": float(out.loss), "sigma": sigma, "lr": lr}
                if not _finite(out.loss):
                    raise TrainingDivergenceError("non-finite stage-2 loss", diagnostics)
                grad_norm = self._backward_and_step(out.loss, optimizer, parameters)
                if not _finite(grad_norm):
                    raise TrainingDivergenceError("non-finite gradient norm", {**diagnostics, "grad_norm": grad_norm})
                report.final_loss = float(out.loss)
                records.write(step=step, split="train", metric="ce", value=float(out.loss))

                if step % interval == 0 or step == total:
                    metrics = self.evaluate(model, val_dataset)
                    for name in ("ari", "ari_fg", "iou", "combined", "accuracy"):
                        records.write(step=step, split="val", metric=name, value=getattr(metrics, name))
                    path = save_checkpoint(model, out_dir / Artifacts.CHECKPOINT.format(step=step),
                                           Stage.OCL_TRAIN, step, combined=metrics.combined)
                    report.checkpoints.append(str(path))
                    report.val_combined[step] = metrics.combined
                    logger.info(f"[stage2] step {step}/{total} ce={float(out.loss):.4f} "
                                f"combined={metrics.combined:.2f} sigma={sigma:.3f} lr={lr:.2e}")
                    score = metrics.combined if not math.isnan(metrics.combined) else float("-inf")
                    if report.best_step < 0 or score > report.best_combined:
                        report.best_step, report.best_combined = step, score
                        save_checkpoint(model, out_dir / Artifacts.BEST, Stage.OCL_TRAIN, step,
                                        combined=metrics.combined)
                    model.train()

        best = torch.load(out_dir / Artifacts.BEST, map_location=self.device, weights_only=True)
        model.load_state_dict(best["state_dict"])
        logger.info(f"[stage2] best step {report.best_step}, combined {report.best_combined:.2f}")
        return report

    @torch.no_grad()
    def evaluate(self, model: OCLModel, dataset: SceneDataset, sample_writer: Optional[RecordWriter] = None
                 ) -> MetricRecord:
        """
        Argmax-дискретизация, σ = 0, без кропа по времени. ARI, ARI_fg, IoU и combined
        усредняются по одной выборке: сэмплы с определённым combined.
        Рядом считается базовый разбиватель из случайных прямоугольников.
        """
        metric_tools = self._context.tools_manager.metrics
        model.eval()
        per_sample = []
        accuracies, weights = [], []
        index = 0
        for batch in self._context.tools_manager.data.loader(dataset, shuffle=False):
            out = model(batch["image"].to(self.device), 0.0, None, batch["boxes"].to(self.device))
            attention = out.attention                                  # (B, T, K, N)
            b, t = attention.shape[:2]
            # plus-варианты внимают пикселям, остальные токенам
            side = math.isqrt(attention.shape[-1])
            labels = masks_from_attention(attention.flatten(0, 1), (side, side), self.config.input_resolution)
            labels = labels.reshape(b, t, *labels.shape[-2:]).cpu()
            gt = batch["mask"]
            if gt.dim() == 3:
                gt = gt[:, None]
            for pred_sample, gt_sample in zip(labels, gt):
                scores = metric_tools.score_sample(pred_sample, gt_sample, sample_id=index)
                per_sample.append(scores)
                if sample_writer is not None:
                    for name, value in scores.items():
                        sample_writer.write(sample_id=index, metric=name, value=value)
                index += 1
            accuracies.append(next_token_accuracy(out.logits, out.target))
            weights.append(b)
        model.train()

        scored = [s for s in per_sample if not math.isnan(s["combined"])]
        record = MetricRecord(
            ari=nan_mean([s["ari"] for s in scored]),
            ari_fg=nan_mean([s["ari_fg"] for s in scored]),
            iou=nan_mean([s["iou"] for s in scored]),
            combined=nan_mean([s["combined"] for s in scored]),
            baseline_combined=nan_mean([s["baseline_combined"] for s in per_sample]),
            accuracy=float(np.average(accuracies, weights=weights)) if weights else float("nan"),
            single_object=self.config.single_object,
            num_samples=len(per_sample),
        )
        return record

    def transfer_evaluate(self, model: OCLModel, source: SceneDataset, target: SceneDataset) -> TransferRecord:
        """
        Δ = combined(target) - combined(source) в процентных пунктах.
        Для condition-запросов боксы дополняются до большего K.
        """
        needed = max(source.info.max_objects, target.info.max_objects) + 1
        slots = max(self.config.num_slots, needed)
        if slots > self.config.num_slots and model.variant.query_mode is not QueryMode.CONDITION:
            raise ConfigurationError("random queries have a fixed slot count",
                                     {"num_slots": self.config.num_slots, "needed": slots})
        for dataset in (source, target):
            dataset.num_slots = slots
        record = TransferRecord(source_combined=self.evaluate(model, source).combined,
                                target_combined=self.evaluate(model, target).combined)
        logger.info(f"[transfer] source={record.source_combined:.2f} target={record.target_combined:.2f} "
                    f"delta={record.delta:+.2f}")
        return record
