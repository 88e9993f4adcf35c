from gdrlab.core.exceptions import GenerationError
from gdrlab.core.logger import logger
import time
import functools


def operation_with_retry(max_retries=3, delay=0.0, exceptions=(GenerationError,)):
    """Decorator for operations that may fail on an unlucky random draw"""

    def decorator(func):
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            attempts = 0
            last_error = None

            while attempts < max_retries:
                try:
                    return func(*args, **kwargs)
                except exceptions as e:
                    last_error = e
                    attempts += 1
                    if attempts < max_retries:
                        logger.debug(f"Attempt {attempts} of {func.__name__} failed: {str(e)}. Retrying...")
                        if delay:
                            time.sleep(delay)

            raise GenerationError(f"{func.__name__} failed after {max_retries} attempts",
                                  {"last_error": str(last_error)})

        return wrapper

    return decorator
