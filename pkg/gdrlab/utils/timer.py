import time
from functools import wraps

from gdrlab.core.logger import logger


def timer(func):
    """
    Замер длительности стадии. Длительность последнего вызова доступна
    как wrapper.last_seconds, в лог пишется и при исключении.
    """
    @wraps(func)
    def wrapper(*args, **kwargs):
        started = time.perf_counter()
        status = "failed"
        try:
            result = func(*args, **kwargs)
            status = "done"
            return result
        finally:
            wrapper.last_seconds = time.perf_counter() - started
            logger.info(f"{func.__qualname__} {status} in {wrapper.last_seconds:.3f} s")

    wrapper.last_seconds = None
    return wrapper
