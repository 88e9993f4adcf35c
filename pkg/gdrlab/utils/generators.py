import os
import random
import string
from typing import Optional

import numpy as np
import torch


class Generates:
    """
        Класс для генерации случайных состояний и имён.
    """

    @staticmethod
    def seed_everything(seed: int, single_threaded: bool = False) -> None:
        """
            Сидирует random, numpy и torch.

            Args:
                seed (int): зерно.
                single_threaded (bool): один поток и детерминированные алгоритмы torch,
                                        нужен для побитово повторяемых прогонов.
        """
        random.seed(seed)
        np.random.seed(seed % 2 ** 32)
        torch.manual_seed(seed)
        if single_threaded:
            os.environ.setdefault("CUBLAS_WORKSPACE_CONFIG", ":4096:8")
            torch.set_num_threads(1)
            torch.use_deterministic_algorithms(True)

    @staticmethod
    def torch_generator(seed: int, device: Optional[str] = None) -> torch.Generator:
        generator = torch.Generator(device=device or "cpu")
        generator.manual_seed(seed)
        return generator

    @staticmethod
    def numpy_rng(seed: int, *keys: int) -> np.random.Generator:
        """Независимый поток numpy для (seed, *keys), например для записи номер i."""
        return np.random.default_rng([seed, *keys])

    @staticmethod
    def random_string(length=None):
        """
            Генерирует случайную латинскую строку (имя прогона).

            Args:
                length (int, optional): Длина строки, от 2 до 100. По умолчанию 8.

            Raises:
                ValueError: Если указанная длина меньше 2 или больше 100.
        """
        if length is None:
            length = 8
        elif length < 2 or length > 100:
            raise ValueError("Length must be between 2 and 100")
        letters = string.ascii_lowercase
        return ''.join(random.choice(letters) for _ in range(length))
