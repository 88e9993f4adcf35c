from abc import ABC, abstractmethod
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from ..core.context import LabContext


class BaseTools(ABC):
    """Base class for all tools"""

    def __init__(self, context: 'LabContext'):
        self._context: 'LabContext' = context

    @property
    def config(self):
        return self._context.config

    @abstractmethod
    def validate(self):
        """Validate tool configuration"""
        pass
