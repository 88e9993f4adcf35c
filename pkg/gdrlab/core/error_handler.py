import functools
import json
from pathlib import Path

from .exceptions import LabError, TrainingDivergenceError
from .logger import logger

DIVERGENCE_DUMP = "divergence.json"


class StageErrorHandler:
    """
    Класс для обработки ошибок в стадиях обучения и оценки.

    Предоставляет декоратор для автоматического логирования исключений
    и диагностического дампа при расхождении обучения.

    Обрабатывает:
        - Стадии (начинающиеся с `run_`, `evaluate`, `transfer_evaluate`, `pretrain_step`)
        - Вспомогательные методы (начинающиеся с `_`, кроме dunder)
    """

    STAGE_PREFIXES = ("run_", "evaluate", "transfer_evaluate", "pretrain_step")

    @staticmethod
    def handle_stage_errors(cls):
        """
        Декоратор класса для обработки ошибок во всех методах стадий.

        Args:
            cls: Класс инструмента, к которому применяется декоратор.

        Returns:
            type: Модифицированный класс с обработкой ошибок.
        """

        for attr_name, attr_value in list(cls.__dict__.items()):
            if not callable(attr_value) or isinstance(attr_value, (staticmethod, classmethod, type)):
                continue
            if attr_name.startswith(StageErrorHandler.STAGE_PREFIXES):
                setattr(cls, attr_name, StageErrorHandler._wrap_stage_method(attr_value))
            elif attr_name.startswith('_') and not attr_name.startswith('__'):
                setattr(cls, attr_name, StageErrorHandler._wrap_helper_method(attr_value))
        return cls

    @staticmethod
    def _wrap_stage_method(method):
        """
        Обрабатываемые исключения:
            - TrainingDivergenceError: дамп диагностики в каталог прогона.
            - LabError: ошибки конфигурации, формы, данных.
            - Exception: все остальные ошибки.

        Все ошибки логируются и пробрасываются дальше.
        """

        @functools.wraps(method)
        def wrapper(*args, **kwargs):
            try:
                return method(*args, **kwargs)
            except TrainingDivergenceError as de:
                out_dir = getattr(de, "out_dir", None) or StageErrorHandler._run_dir(args)
                if out_dir is not None:
                    StageErrorHandler.dump_divergence(de, out_dir)
                logger.error(f"Обучение разошлось в {method.__name__}: {de}")
                raise
            except LabError as le:
                logger.error(f"Ошибка стадии {method.__name__}: {le}")
                raise
            except Exception as e:
                logger.error(f"Непредвиденная ошибка в {method.__name__}: {e!r}")
                raise

        return wrapper

    @staticmethod
    def _wrap_helper_method(method):
        @functools.wraps(method)
        def wrapper(*args, **kwargs):
            try:
                return method(*args, **kwargs)
            except KeyError as ke:
                logger.error(f"Отсутствует обязательный ключ в методе {method.__name__}: {ke}")
                raise
            except LabError as le:
                logger.debug(f"Ошибка в методе {method.__name__}: {le}")
                raise

        return wrapper

    @staticmethod
    def _run_dir(args):
        tool = args[0] if args else None
        context = getattr(tool, "_context", None)
        return getattr(context, "run_dir", None)

    @staticmethod
    def dump_divergence(error: TrainingDivergenceError, out_dir) -> Path:
        path = Path(out_dir) / DIVERGENCE_DUMP
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = {"message": error.message, **{k: StageErrorHandler._plain(v) for k, v in error.details.items()}}
        path.write_text(json.dumps(payload, indent=2, ensure_ascii=False), encoding="utf-8")
        logger.info(f"Диагностика расхождения сохранена в {path}")
        return path

    @staticmethod
    def _plain(value):
        if hasattr(value, "item"):
            value = value.item()
        if isinstance(value, float) and value != value:
            return "NaN"
        if isinstance(value, float) and value in (float("inf"), float("-inf")):
            return str(value)
        return value
