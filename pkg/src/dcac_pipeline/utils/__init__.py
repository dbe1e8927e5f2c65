"""Shared utilities."""

from .retry import io_retry, regularized_retry

__all__ = [
    "io_retry",
    "regularized_retry",
]
