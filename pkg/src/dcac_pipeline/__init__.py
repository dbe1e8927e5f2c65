"""DC dispatch to AC power flow feasibility restoration pipeline."""

__version__ = "0.3.0"
