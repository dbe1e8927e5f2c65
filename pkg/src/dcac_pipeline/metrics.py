"""Pipeline stage metrics collection."""

import functools
import time
from collections.abc import Callable
from contextlib import contextmanager
from typing import Any, Optional, TypeVar

from datadog.dogstatsd.base import DogStatsd  # type: ignore

from .config import get_pipeline_config

# Type variables
F = TypeVar("F", bound=Callable[..., Any])

# Global metrics client
_metrics_client: Optional["PipelineMetrics"] = None


class PipelineMetrics:
    """Stage timing and solver statistics sent to Datadog."""

    def __init__(self, statsd_client: DogStatsd | None = None):
        """Initialize pipeline metrics."""
        self.config = get_pipeline_config()
        self.enabled = self.config.metrics_enabled or statsd_client is not None

        if statsd_client:
            self.statsd = statsd_client
        else:
            self.statsd = DogStatsd(
                host=self.config.statsd_host,
                port=self.config.statsd_port,
                namespace=self.config.metrics_namespace,
                constant_tags=[
                    f"service:{self.config.service_name}",
                    f"environment:{self.config.environment}",
                ],
            )
        self._base_tags = [
            f"service:{self.config.service_name}",
            f"environment:{self.config.environment}",
        ]

    def _get_tags(
        self,
        stage: str | None = None,
        variant: str | None = None,
        status: str | None = None,
        additional_tags: list[str] | None = None,
    ) -> list[str]:
        """Build tags for metrics."""
        tags = self._base_tags.copy()

        if stage:
            tags.append(f"stage:{stage}")
        if variant:
            tags.append(f"variant:{variant}")
        if status:
            tags.append(f"status:{status}")
        if additional_tags:
            tags.extend(additional_tags)

        return tags

    @contextmanager
    def record_stage(
        self,
        stage: str,
        variant: str | None = None,
        additional_tags: list[str] | None = None,
    ):
        """Context manager to record one pipeline stage."""
        start_time = time.perf_counter()
        status = "success"

        try:
            yield
        except Exception as e:
            status = "error"
            if self.enabled:
                tags = self._get_tags(stage, variant, status, additional_tags)
                tags.append(f"error_type:{type(e).__name__}")
                self.statsd.increment("pipeline.stage.error", tags=tags)
            raise
        finally:
            if self.enabled:
                duration = (time.perf_counter() - start_time) * 1000
                tags = self._get_tags(stage, variant, status, additional_tags)
                self.statsd.histogram("pipeline.stage.duration", duration, tags=tags)
                self.statsd.increment("pipeline.stage.count", tags=tags)

    def record_solver(self, kind: str, iterations: int, status: str) -> None:
        """Record iteration count and outcome of a numerical solve."""
        if not self.enabled:
            return
        tags = self._get_tags(stage=kind, status=status)
        self.statsd.histogram("pipeline.solver.iterations", iterations, tags=tags)

    def record_switches(self, variant: str, rounds: int, switches: int) -> None:
        """Record PV/PQ switching activity of one power flow."""
        if not self.enabled:
            return
        tags = self._get_tags(stage="ac", variant=variant)
        self.statsd.histogram("pipeline.switching.rounds", rounds, tags=tags)
        self.statsd.increment("pipeline.switching.events", switches, tags=tags)

    def record_retry(self, operation: str, attempt: int, error: str) -> None:
        """Record a retried operation."""
        if not self.enabled:
            return
        tags = self._get_tags(
            additional_tags=[
                f"operation:{operation}",
                f"attempt:{attempt}",
                f"error_type:{error}",
            ]
        )
        self.statsd.increment("pipeline.retry.attempt", tags=tags)

    def stage_timer(
        self,
        stage: str,
        variant: str | None = None,
    ):
        """Decorator to time a pipeline stage."""

        def decorator(func: F) -> F:
            @functools.wraps(func)
            def wrapper(*args, **kwargs):
                with self.record_stage(stage, variant):
                    return func(*args, **kwargs)

            return wrapper  # type: ignore

        return decorator


def get_pipeline_metrics() -> PipelineMetrics:
    """Get or create pipeline metrics instance."""
    global _metrics_client
    if _metrics_client is None:
        _metrics_client = PipelineMetrics()
    return _metrics_client
