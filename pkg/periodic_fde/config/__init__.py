"""Configuration module for collocation runs."""

from periodic_fde.config.settings import RunConfig, SeedConfig, SeedStrategy

__all__ = ["RunConfig", "SeedConfig", "SeedStrategy"]
