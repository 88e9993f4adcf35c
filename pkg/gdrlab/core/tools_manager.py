from typing import Dict, Type, TYPE_CHECKING
from gdrlab.tools.base_tools import BaseTools
from gdrlab.tools.schedule_tools import ScheduleTools
from gdrlab.tools.data_tools import DataTools
from gdrlab.tools.trainer_tools import TrainerTools
from gdrlab.tools.metric_tools import MetricTools
from gdrlab.tools.analysis_tools import AnalysisTools

if TYPE_CHECKING:
    from ..core.context import LabContext


class ToolsManager:
    """Предоставляет интерфейс к набору с инструментами"""

    def __init__(self, context: 'LabContext'):
        self._context: 'LabContext' = context
        self._tools: Dict[str, BaseTools] = {}
        self._register_default_tools()

    def _register_default_tools(self):
        self.register_tool('schedule', ScheduleTools)
        self.register_tool('data', DataTools)
        self.register_tool('trainer', TrainerTools)
        self.register_tool('metrics', MetricTools)
        self.register_tool('analysis', AnalysisTools)

    def register_tool(self, name: str, tool_class: Type[BaseTools]):
        self._tools[name] = tool_class(self._context)

    def get_tool(self, name: str) -> BaseTools:
        if name not in self._tools:
            raise ValueError(f"Tool {name} not registered")
        return self._tools[name]

    @property
    def schedule(self) -> ScheduleTools:
        return self.get_tool('schedule')

    @property
    def data(self) -> DataTools:
        return self.get_tool('data')

    @property
    def trainer(self) -> TrainerTools:
        return self.get_tool('trainer')

    @property
    def metrics(self) -> MetricTools:
        return self.get_tool('metrics')

    @property
    def analysis(self) -> AnalysisTools:
        return self.get_tool('analysis')
