import logging
import os
from pathlib import Path

from dotenv import load_dotenv

#   Уровень логирования можно переопределить через .env (GDRLAB_LOG_LEVEL=DEBUG)
load_dotenv()

FORMAT = '%(asctime)s - %(levelname)s - %(message)s'

#Создаём логер
logger = logging.getLogger("gdrlab")
logger.setLevel(logging.DEBUG)

# обработчик для вывода в консоль
console_handler = logging.StreamHandler()
console_handler.setLevel(os.getenv("GDRLAB_LOG_LEVEL", "INFO").upper())

# Форматирование
formatter = logging.Formatter(FORMAT)
console_handler.setFormatter(formatter)

# Добавляем обработчик к логеру
logger.addHandler(console_handler)


def attach_file_handler(out_dir) -> logging.FileHandler:
    """Дублирует лог прогона в out_dir/run.log. Повторный вызов для того же файла ничего не добавляет."""
    path = Path(out_dir) / "run.log"
    path.parent.mkdir(parents=True, exist_ok=True)
    for handler in logger.handlers:
        if isinstance(handler, logging.FileHandler) and Path(handler.baseFilename) == path.resolve():
            return handler

    file_handler = logging.FileHandler(path, encoding="utf-8")
    file_handler.setLevel(logging.DEBUG)
    file_handler.setFormatter(formatter)
    logger.addHandler(file_handler)
    return file_handler
