"""
Подсчёт параметров и вычислений кодбука: группированный против базового.
"""
from gdrlab.models.codebook_models import GroupLayout, ParamCount
from gdrlab.models.config_models import GlobalConfig


def param_count(layout: GroupLayout, config: GlobalConfig) -> ParamCount:
    """
    Базовая линия: n*c. Группированный: sum a_i*d сырых атрибутов плюс
    проекция (m*c)*c + c и, если включён LayerNorm, ещё 2*m*c.
    """
    c = config.channel_dim
    baseline_total = layout.n * c
    if layout.is_baseline:
        return ParamCount(raw_codebook=baseline_total, projection=0,
                          total=baseline_total, baseline_total=baseline_total)

    width = config.dim_multiplier * c
    d = width // layout.g
    raw = sum(a * d for a in layout.sizes)
    projection = width * c + c
    if config.use_codebook_layernorm:
        projection += 2 * width
    return ParamCount(raw_codebook=raw, projection=projection,
                      total=raw + projection, baseline_total=baseline_total)


def compute_count(layout: GroupLayout, config: GlobalConfig) -> int:
    """
    Умножения-сложения на токен по собственной модели стоимости:
    базовая линия c*n (сопоставление скалярным произведением),
    группированный g * (m*c*c) * n^(1/g) (проекция плюс сопоставление).

    Для неравных групп n^(1/g) нецелый, результат округляется.
    """
    c = config.channel_dim
    if layout.is_baseline:
        return c * layout.n
    per_group = layout.n ** (1.0 / layout.g)
    return int(round(layout.g * (config.dim_multiplier * c * c) * per_group))
