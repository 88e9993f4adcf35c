from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from gdrlab.core.exceptions import ConfigurationError
from .base_models import BaseConfig


class Variant(str, Enum):
    SLATE = "SLATE"
    SLATE_PLUS = "SLATE_PLUS"
    STEVE = "STEVE"
    STEVE_PLUS = "STEVE_PLUS"

    @property
    def is_video(self) -> bool:
        return self in (Variant.STEVE, Variant.STEVE_PLUS)

    @property
    def has_extra_encoder(self) -> bool:
        return self in (Variant.SLATE_PLUS, Variant.STEVE_PLUS)


class QueryMode(str, Enum):
    RANDOM = "random"
    CONDITION = "condition"

    @property
    def num_iter(self) -> int:
        # Условный запрос уже несёт достаточно информации, хватает одной итерации
        return 3 if self is QueryMode.RANDOM else 1


class Stage(str, Enum):
    DVAE_PRETRAIN = "dvae_pretrain"
    OCL_TRAIN = "ocl_train"


class ScheduleKind(str, Enum):
    COSINE = "cosine"
    COSINE_WITH_LINEAR_WARMUP = "cosine_with_linear_warmup"
    CONSTANT = "constant"


def _section(name: str, default, **kwargs):
    """Поле конфига с пометкой секции для плоского файла (section.field = value)."""
    return field(default=default, metadata={"section": name}, **kwargs)


@dataclass
class GlobalConfig(BaseConfig):
    # data
    input_resolution: int = _section("data", 64)
    num_slots: int = _section("data", 5)
    single_object: bool = _section("data", False)
    time_window: int = _section("data", 6)
    image_batch: int = _section("data", 32)
    video_batch: int = _section("data", 8)
    num_workers: int = _section("data", 0)

    # codebook
    num_code: int = _section("codebook", 4096)
    channel_dim: int = _section("codebook", 256)
    num_groups: int = _section("codebook", 2)
    dim_multiplier: int = _section("codebook", 8)
    use_codebook_layernorm: bool = _section("codebook", True)
    use_utilization_loss: bool = _section("codebook", True)
    utilization_weight: float = _section("codebook", 0.1)

    # model
    variant: Variant = _section("model", Variant.SLATE)
    query_mode: QueryMode = _section("model", QueryMode.RANDOM)
    dvae_hidden: int = _section("model", 64)
    extra_hidden: int = _section("model", 64)
    slot_mlp_hidden: int = _section("model", 256)
    decoder_blocks: int = _section("model", 4)
    decoder_heads: int = _section("model", 4)
    predictor_blocks: int = _section("model", 1)

    # train
    scale_factor: float = _section("train", 1.0)
    dvae_steps: int = _section("train", 25000)
    dvae_warmup: int = _section("train", 1250)
    dvae_lr: float = _section("train", 2e-3)
    dvae_interval: int = _section("train", 500)
    ocl_steps: int = _section("train", 50000)
    ocl_warmup: int = _section("train", 2500)
    ocl_lr: float = _section("train", 2e-4)
    ocl_interval: int = _section("train", 1000)
    grad_clip: float = _section("train", 1.0)
    mixed_precision: bool = _section("train", False)
    device: str = _section("train", "cpu")
    seed: int = _section("train", 0)

    def __post_init__(self):
        self.variant = Variant(self.variant)
        self.query_mode = QueryMode(self.query_mode)
        self.validate()

    def validate(self):
        """Проверка инвариантов глобальной конфигурации"""
        if self.input_resolution <= 0 or self.input_resolution % 4 != 0:
            raise ConfigurationError("input_resolution must be a positive multiple of 4",
                                     {"input_resolution": self.input_resolution})
        for name in ("num_code", "channel_dim", "num_slots", "dim_multiplier", "num_groups",
                     "dvae_steps", "ocl_steps", "dvae_interval", "ocl_interval"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be positive", {name: getattr(self, name)})
        if self.dim_multiplier not in (1, 2, 4, 8):
            raise ConfigurationError("dim_multiplier must be one of 1, 2, 4, 8",
                                     {"dim_multiplier": self.dim_multiplier})
        if (self.dim_multiplier * self.channel_dim) % self.num_groups != 0:
            raise ConfigurationError("m*c must be divisible by the number of groups",
                                     {"m*c": self.dim_multiplier * self.channel_dim, "g": self.num_groups})
        if not 0 < self.scale_factor <= 1:
            raise ConfigurationError("scale_factor must lie in (0, 1]", {"scale_factor": self.scale_factor})
        if self.time_window < 1:
            raise ConfigurationError("time_window must be positive", {"time_window": self.time_window})

    @property
    def token_resolution(self) -> int:
        return self.input_resolution // 4

    @property
    def num_iter(self) -> int:
        return self.query_mode.num_iter

    @property
    def batch_size(self) -> int:
        return self.video_batch if self.variant.is_video else self.image_batch

    def scaled(self, steps: int) -> int:
        """Шаги с учётом desk-scale множителя (не меньше одного)."""
        return max(1, int(round(steps * self.scale_factor)))

    def scaled_warmup(self, steps: int) -> int:
        return int(round(steps * self.scale_factor))


@dataclass
class ScheduleSpec(BaseConfig):
    start: float
    end: float
    total_steps: int
    warmup_steps: int = 0
    kind: ScheduleKind = ScheduleKind.COSINE
    test_value: Optional[float] = None

    def __post_init__(self):
        self.kind = ScheduleKind(self.kind)
        if self.total_steps <= 0:
            raise ConfigurationError("total_steps must be positive", {"total_steps": self.total_steps})
        if not 0 <= self.warmup_steps <= self.total_steps:
            raise ConfigurationError("warmup_steps must lie in [0, total_steps]",
                                     {"warmup_steps": self.warmup_steps, "total_steps": self.total_steps})

    def value_at(self, step: int) -> float:
        from gdrlab.utils.schedules import cosine_anneal, warmup_cosine

        if self.kind is ScheduleKind.CONSTANT:
            return self.start
        if self.kind is ScheduleKind.COSINE:
            return cosine_anneal(self.start, self.end, step, self.total_steps)
        return warmup_cosine(step, self.start, self.end, self.warmup_steps, self.total_steps)

    def at_test_time(self) -> float:
        """Значение на валидации/тесте: τ фиксируется на 0.1, σ обнуляется."""
        return self.end if self.test_value is None else self.test_value
