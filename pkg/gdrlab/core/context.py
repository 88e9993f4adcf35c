from pathlib import Path
from typing import Optional

from gdrlab.core.logger import attach_file_handler
from gdrlab.core.tools_manager import ToolsManager
from gdrlab.models.config_models import GlobalConfig
from gdrlab.utils.generators import Generates

DEFAULT_RUNS_DIR = "runs"


class LabContext:
    """Контекст прогона: конфигурация, каталог артефактов и набор инструментов"""

    def __init__(self, config: Optional[GlobalConfig] = None, run_dir=None, log_to_file: bool = False):
        self.config: GlobalConfig = config or GlobalConfig()
        self.run_dir: Path = Path(run_dir) if run_dir is not None \
            else Path(DEFAULT_RUNS_DIR) / Generates.random_string()
        self.run_dir.mkdir(parents=True, exist_ok=True)
        if log_to_file:
            attach_file_handler(self.run_dir)
        self.tools_manager: ToolsManager = ToolsManager(self)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.cleanup()

    def cleanup(self):
        """Закрывает открытые хранилища"""
        self.tools_manager.data.cleanup()
