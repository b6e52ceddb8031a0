from functools import wraps
import logging
import time

import typer
from pydantic import ValidationError

from src.utils.constants import ExitCodeConst
from src.utils.errors import SpecFuseError


def exit_on_error(func):
    """Map library errors raised by a CLI command to its exit code.

    ``SpecFuseError`` exits with the error's ``exit_code``; a missing file or an
    invalid configuration exits with 2. Anything else propagates.
    """

    @wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except SpecFuseError as e:
            logging.error("%s failed: %s", func.__name__, e.message)
            raise typer.Exit(code=int(e.exit_code))
        except FileNotFoundError as e:
            logging.error("%s failed: file not found: %s", func.__name__, e.filename or e)
            raise typer.Exit(code=int(ExitCodeConst.USER_ERROR))
        except ValidationError as e:
            logging.error("%s failed: invalid configuration: %s", func.__name__, e)
            raise typer.Exit(code=int(ExitCodeConst.USER_ERROR))

    return wrapper


def log_duration(func):
    """Log the wall time of every call at INFO level."""

    @wraps(func)
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        try:
            return func(*args, **kwargs)
        finally:
            logging.info("%s finished in %.2f s", func.__name__, time.perf_counter() - start)

    return wrapper
