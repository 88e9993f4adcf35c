from typing import Optional


class LabError(Exception):
    """Базовое исключение лаборатории. Хранит сообщение и структурированные детали."""

    prefix = "Lab Error"

    def __init__(self, message: str, details: Optional[dict] = None):
        self.message = message
        self.details = details or {}
        super().__init__(self.message)

    def __str__(self):
        base_message = f"{self.prefix}: {self.message}"
        if self.details:
            rendered = ", ".join(f"{k}={v}" for k, v in self.details.items())
            base_message += f" ({rendered})"
        return base_message


class ConfigurationError(LabError, ValueError):
    prefix = "Configuration Error"


class ShapeError(LabError, ValueError):
    prefix = "Shape Error"


class DomainError(LabError, ValueError):
    prefix = "Domain Error"


class ScheduleRangeError(LabError, ValueError):
    prefix = "Schedule Range Error"


class IndexRangeError(LabError, IndexError):
    prefix = "Index Error"


class EmptyInputError(LabError, ValueError):
    prefix = "Empty Input"


class ValidationError(LabError, ValueError):
    prefix = "Validation Error"


class ContractError(LabError, ValueError):
    prefix = "Contract Error"


class GenerationError(LabError, RuntimeError):
    prefix = "Generation Error"


class StoreExistsError(LabError, FileExistsError):
    prefix = "Store Exists"


class TrainingDivergenceError(LabError, RuntimeError):
    """Лосс стал неконечным. В details кладётся диагностика шага."""

    prefix = "Training Diverged"
