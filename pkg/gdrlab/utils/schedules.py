from math import cos, pi

from gdrlab.core.exceptions import ScheduleRangeError


def cosine_anneal(start: float, end: float, step: int, total: int) -> float:
    """
    Косинусный отжиг от start к end за total шагов.

    Args:
        start: значение на шаге 0.
        end: значение на шаге total.
        step: текущий шаг, 0 <= step <= total.
        total: длина расписания, > 0.

    Returns:
        float: end + (start - end) * (1 + cos(pi * step / total)) / 2

    Raises:
        ScheduleRangeError: если step вне [0, total] или total <= 0.
    """
    if total <= 0:
        raise ScheduleRangeError("total must be positive", {"total": total})
    if step < 0 or step > total:
        raise ScheduleRangeError("step outside the schedule", {"step": step, "total": total})
    return end + (start - end) * (1 + cos(pi * step / total)) / 2


def warmup_cosine(step: int, start: float, end: float, warmup: int, total: int) -> float:
    """Линейный разогрев 0 -> start на [0, warmup], затем косинус start -> end на [warmup, total]."""
    if not 0 <= warmup <= total:
        raise ScheduleRangeError("warmup must lie in [0, total]", {"warmup": warmup, "total": total})
    if step < 0 or step > total:
        raise ScheduleRangeError("step outside the schedule", {"step": step, "total": total})
    if warmup > 0 and step <= warmup:
        return start * step / warmup
    return cosine_anneal(start, end, step - warmup, total - warmup)


def lr_at(step: int, base_lr: float, warmup: int, total: int) -> float:
    if not 0 <= warmup < total:
        raise ScheduleRangeError("warmup must lie in [0, total)", {"warmup": warmup, "total": total})
    return warmup_cosine(step, base_lr, 0.0, warmup, total)
