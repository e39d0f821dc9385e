"""
vulcan_fem/decorator.py

This module provides the decorators vulcan_fem applies to its public operations: call tracing with
execution time (``log``) and JSON serialization of return values (``to_json``). Arguments and
results are summarized before logging so element matrices and shape tables never flood the log.
"""


import json
import time
from functools import wraps
from typing import Any, Callable, Optional, TypeVar, Union

import numpy as np

from .encoder import Encoder
from .logger import Logger, get_logger
from .printable import Printable

# TypeVar for decorator type preservation
F = TypeVar('F', bound=Callable[..., Any])

MAX_SEQUENCE_ITEMS = 8


def _summarize(value: Any) -> Any:
    """
    Reduces a value to something small enough to log.

    Args:
        value (Any): Argument or return value.

    Returns:
        Any: Arrays and long sequences replaced by short descriptions, Printable objects by
            their compact repr, everything else unchanged.
    """

    if isinstance(value, np.ndarray):
        return f"ndarray(shape={value.shape}, dtype={value.dtype})"
    if isinstance(value, Printable):
        return repr(value)
    if isinstance(value, (list, tuple)):
        if len(value) > MAX_SEQUENCE_ITEMS:
            return f"{type(value).__name__}(len={len(value)})"
        return [_summarize(item) for item in value]
    if isinstance(value, dict):
        return {key: _summarize(item) for key, item in value.items()}
    return value


def _call_message(func: Callable[..., Any], *args: Any, **kwargs: Any) -> str:
    """
    Builds the call line for ``func``.

    Args:
        func (Callable[..., Any]): The function being called.
        *args (Any): Positional arguments.
        **kwargs (Any): Keyword arguments.

    Returns:
        str: The formatted call message.
    """

    log_message_parts = [f"{func.__name__} call:"]
    if args:
        log_message_parts.append(f"args:{_summarize(list(args))}")
    if kwargs:
        log_message_parts.append(f"kwargs:{_summarize(kwargs)}")
    return ' '.join(log_message_parts)


def _return_message(func: Callable[..., Any], result: Any) -> str:
    """
    Builds the return line for ``func`` with a JSON summary of the result.

    Args:
        func (Callable[..., Any]): The function that returned.
        result (Any): Its return value.

    Returns:
        str: The formatted return message.
    """

    json_result = json.dumps(_summarize(result), cls=Encoder, ensure_ascii=False)
    return f"{func.__name__} return: {json_result} {type(result)}"


def _log_func(logger: Logger, level: str) -> Callable[[str], None]:
    """
    Picks the Logger method matching ``level``.

    Args:
        logger (Logger): Target logger.
        level (str): Level name, case-insensitive.

    Returns:
        Callable[[str], None]: The bound logging method (debug when unknown).
    """

    levels = {
        "DEBUG": logger.debug,
        "INFO": logger.info,
        "WARNING": logger.warning,
        "CRITICAL": logger.critical,
        "ERROR": logger.error,
    }
    return levels.get(level.upper(), logger.debug)


def log(
    _func: Optional[F] = None,
        *,
        condition: bool = True,
        level: str = "DEBUG"
) -> Union[Callable[[F], F], F]:
    """
    Logs the call, the summarized return value and the execution time of a function.

    Args:
        _func (Optional[F]): The function when used without arguments.
        condition (bool): Logging switch, defaults to True.
        level (str): Level name for all three lines, defaults to "DEBUG".

    Returns:
        The decorated function.
    """

    def decorator_log(func: F) -> F:
        @wraps(func)
        def wrapper(*args, **kwargs):
            if not condition:
                return func(*args, **kwargs)
            log_func = _log_func(get_logger(func.__module__), level)
            log_func(_call_message(func, *args, **kwargs))
            start_time = time.perf_counter()
            result = func(*args, **kwargs)
            execution_time_ms = round(
                (time.perf_counter() - start_time) * 1000, ndigits=4)
            log_func(_return_message(func, result))
            log_func(f"{func.__name__} executed: {execution_time_ms} milliseconds")
            return result
        return wrapper
    if _func is None:
        return decorator_log
    return decorator_log(_func)


def to_json(_func: Optional[F] = None, *, indent: Optional[int] = None) -> Union[Callable[[F], F], F]:
    """
    Serializes the return value of the decorated function to a JSON string with Encoder.

    Args:
        _func (Optional[F]): The function when used without arguments.
        indent (Optional[int]): Indentation passed to json.dumps.

    Returns:
        The decorated function, now returning ``str``.
    """

    def decorator_to_json(func: F) -> F:
        @wraps(func)
        def wrapper(*args, **kwargs) -> str:
            result = func(*args, **kwargs)
            json_result = json.dumps(
                result, cls=Encoder, ensure_ascii=False, indent=indent)
            get_logger(func.__module__).debug(
                f"{func.__name__} JSON return: {len(json_result)} characters")
            return json_result
        return wrapper
    if _func is not None:
        return decorator_to_json(_func)
    return decorator_to_json
