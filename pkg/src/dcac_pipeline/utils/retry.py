"""Retry helpers for KKT factorization and result output."""

import functools
import logging
from collections.abc import Callable
from typing import Any, TypeVar

from tenacity import (
    RetryError,
    Retrying,
    retry,
    retry_if_exception_type,
    stop_after_attempt,
    wait_exponential,
)

from ..exceptions import IoFailure, NumericalBreakdown
from ..metrics import get_pipeline_metrics

logger = logging.getLogger(__name__)

# Type variables
F = TypeVar("F", bound=Callable[..., Any])
T = TypeVar("T")

# splu raises RuntimeError on an exactly singular factor
FACTORIZATION_ERRORS: tuple[type[Exception], ...] = (
    RuntimeError,
    ArithmeticError,
)

RETRYABLE_IO_ERRORS: tuple[type[Exception], ...] = (OSError,)


def _before_retry(operation: str):
    """Build a tenacity callback that records the attempt."""

    def callback(retry_state) -> None:
        if retry_state.attempt_number == 1:
            return
        error = retry_state.outcome.exception() if retry_state.outcome else None
        error_name = type(error).__name__ if error else "unknown"
        get_pipeline_metrics().record_retry(
            operation, retry_state.attempt_number, error_name
        )
        logger.warning(
            "Retrying %s (attempt %d) after %s",
            operation,
            retry_state.attempt_number,
            error_name,
        )

    return callback


def regularized_retry(
    factorize: Callable[[float], T],
    base_regularization: float,
    max_attempts: int,
    growth: float = 100.0,
) -> T:
    """
    Factorize with static regularization, growing it after each failure.

    Args:
        factorize: Callable taking the regularization and returning a factorization
        base_regularization: Regularization of the first attempt
        max_attempts: Attempts before giving up
        growth: Multiplier applied to the regularization after a failure

    Returns:
        Whatever ``factorize`` returns on the first successful attempt
    """
    regularization = base_regularization
    try:
        for attempt in Retrying(
            stop=stop_after_attempt(max_attempts),
            retry=retry_if_exception_type(FACTORIZATION_ERRORS),
            before=_before_retry("kkt_factorization"),
            reraise=False,
        ):
            with attempt:
                regularization = base_regularization * growth ** (
                    attempt.retry_state.attempt_number - 1
                )
                return factorize(regularization)
    except RetryError as e:
        raise NumericalBreakdown(
            max_attempts, regularization, e.last_attempt.exception()
        ) from e
    raise NumericalBreakdown(max_attempts, regularization)


def io_retry(
    max_attempts: int = 3,
    min_wait: float = 0.05,
    max_wait: float = 1.0,
    multiplier: float = 2.0,
) -> Callable[[F], F]:
    """
    Decorator for retrying file writes with exponential backoff.

    The decorated callable must take the target path as its first argument.

    Args:
        max_attempts: Maximum number of attempts
        min_wait: Minimum wait time between retries (seconds)
        max_wait: Maximum wait time between retries (seconds)
        multiplier: Multiplier for exponential backoff
    """

    def decorator(func: F) -> F:
        @functools.wraps(func)
        def wrapper(path, *args, **kwargs):
            @retry(
                stop=stop_after_attempt(max_attempts),
                wait=wait_exponential(
                    multiplier=multiplier,
                    min=min_wait,
                    max=max_wait,
                ),
                retry=retry_if_exception_type(RETRYABLE_IO_ERRORS),
                before=_before_retry("write_results"),
                reraise=True,
            )
            def _retry_wrapper():
                return func(path, *args, **kwargs)

            try:
                return _retry_wrapper()
            except RETRYABLE_IO_ERRORS as e:
                raise IoFailure(str(path), e) from e

        return wrapper  # type: ignore

    return decorator
