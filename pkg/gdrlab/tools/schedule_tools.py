from typing import Dict, Optional, Union

from gdrlab.core.exceptions import ConfigurationError
from gdrlab.models.config_models import GlobalConfig, QueryMode, ScheduleKind, ScheduleSpec, Stage
from .base_tools import BaseTools

TAU_START = 1.0
TAU_END = 0.1
SIGMA_START = 1.0
SIGMA_END = 0.0


def schedule_suite(stage: Union[Stage, str], config: GlobalConfig) -> Dict[str, ScheduleSpec]:
    """
    Расписания τ, lr и σ для стадии.

    dvae_pretrain: τ 1 -> 0.1 косинусом, lr 2e-3 с разогревом; σ не используется (константа 0).
    ocl_train: lr 2e-4 с разогревом, σ 1 -> 0 косинусом (или 0 для одного объекта / condition);
    τ фиксирован на тестовом значении, токенизация замороженным dVAE идёт без шума.
    Все длины умножаются на config.scale_factor.

    Raises:
        ConfigurationError: неизвестная стадия.
    """
    try:
        stage = Stage(stage)
    except ValueError as e:
        raise ConfigurationError("unknown training stage", {"stage": stage}) from e

    if stage is Stage.DVAE_PRETRAIN:
        total = config.scaled(config.dvae_steps)
        warmup = min(config.scaled_warmup(config.dvae_warmup), total - 1)
        return {
            "tau": ScheduleSpec(TAU_START, TAU_END, total, 0, ScheduleKind.COSINE, test_value=TAU_END),
            "lr": ScheduleSpec(config.dvae_lr, 0.0, total, warmup, ScheduleKind.COSINE_WITH_LINEAR_WARMUP),
            "sigma": ScheduleSpec(0.0, 0.0, total, 0, ScheduleKind.CONSTANT, test_value=0.0),
        }

    total = config.scaled(config.ocl_steps)
    warmup = min(config.scaled_warmup(config.ocl_warmup), total - 1)
    if config.single_object or config.query_mode is QueryMode.CONDITION:
        sigma = ScheduleSpec(0.0, 0.0, total, 0, ScheduleKind.CONSTANT, test_value=0.0)
    else:
        sigma = ScheduleSpec(SIGMA_START, SIGMA_END, total, 0, ScheduleKind.COSINE, test_value=0.0)
    return {
        "tau": ScheduleSpec(TAU_END, TAU_END, total, 0, ScheduleKind.CONSTANT, test_value=TAU_END),
        "lr": ScheduleSpec(config.ocl_lr, 0.0, total, warmup, ScheduleKind.COSINE_WITH_LINEAR_WARMUP),
        "sigma": sigma,
    }


class ScheduleTools(BaseTools):
    def validate(self):
        self.config.validate()

    def suite(self, stage: Union[Stage, str], config: Optional[GlobalConfig] = None) -> Dict[str, ScheduleSpec]:
        return schedule_suite(stage, config or self.config)

    def values_at(self, stage: Union[Stage, str], step: int) -> Dict[str, float]:
        return {name: spec.value_at(step) for name, spec in self.suite(stage).items()}
