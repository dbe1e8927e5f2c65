"""Pipeline configuration for solver tolerances, limits and operational settings."""

from pydantic import Field, computed_field
from pydantic_settings import BaseSettings, SettingsConfigDict


class PipelineConfig(BaseSettings):
    """Pipeline configuration settings."""

    model_config = SettingsConfigDict(
        env_prefix="DCAC_",
        env_file=".env",
        extra="ignore",
    )

    # Convex solver settings
    qp_tol: float = Field(
        default=1e-8,
        gt=0,
        description="Interior-point KKT residual tolerance",
    )
    qp_max_iter: int = Field(
        default=200,
        ge=1,
        description="Maximum interior-point iterations",
    )
    qp_regularization: float = Field(
        default=1e-9,
        gt=0,
        description="Static diagonal regularization of the KKT system",
    )
    qp_regularization_retries: int = Field(
        default=4,
        ge=1,
        description="Factorization attempts, regularization x100 after each failure",
    )

    # DC dispatch settings
    loss_tol: float = Field(
        default=1e-8,
        gt=0,
        description="Relative change in modeled losses that ends the LQCP cut loop",
    )
    max_cut_rounds: int = Field(
        default=50,
        ge=1,
        description="Maximum LQCP outer-approximation rounds",
    )

    # AC power flow settings
    pf_tol: float = Field(
        default=1e-6,
        gt=0,
        description="Power flow mismatch tolerance (p.u.)",
    )
    eps_q: float = Field(
        default=1e-4,
        gt=0,
        description="Reactive deadband for PV/PQ switching (p.u.)",
    )
    eps_v: float = Field(
        default=1e-5,
        gt=0,
        description="Voltage deadband for PQ/PV reversion (p.u.)",
    )
    max_inner: int = Field(
        default=30,
        ge=1,
        description="Newton iterations per switching round",
    )
    max_outer: int = Field(
        default=50,
        ge=1,
        description="Maximum PV/PQ switching rounds",
    )

    # Feasibility settings
    violation_threshold: float = Field(
        default=1e-6,
        ge=0,
        description="Magnitudes at or below this are not violations (p.u.)",
    )
    thermal_threshold_pct: float = Field(
        default=1e-4,
        ge=0,
        description="Thermal overloads at or below this are not violations (%)",
    )

    # Output settings
    io_retry_attempts: int = Field(
        default=3,
        ge=1,
        description="Attempts for writing result files",
    )
    log_level: str = Field(
        default="INFO",
        description="Logging level for the command line entry point",
    )

    # Metrics settings
    metrics_enabled: bool = Field(
        default=False,
        description="Send stage metrics to a DogStatsd agent",
    )
    statsd_host: str = Field(
        default="localhost",
        description="DogStatsd agent host",
    )
    statsd_port: int = Field(
        default=8125,
        ge=1,
        le=65535,
        description="DogStatsd agent port",
    )
    metrics_namespace: str = Field(
        default="dcac",
        description="Namespace prefixed to every metric",
    )

    # Environment
    environment: str = Field(
        default="development",
        description="Environment name for metrics tagging",
    )
    service_name: str = Field(
        default="dcac-pipeline",
        description="Service name for metrics tagging",
    )

    @computed_field
    @property
    def is_production(self) -> bool:
        """Check if running in production environment."""
        return self.environment.lower() in ("production", "prod")


# Global instance
_pipeline_config: PipelineConfig | None = None


def get_pipeline_config() -> PipelineConfig:
    """Get or create pipeline configuration."""
    global _pipeline_config
    if _pipeline_config is None:
        _pipeline_config = PipelineConfig()
    return _pipeline_config
