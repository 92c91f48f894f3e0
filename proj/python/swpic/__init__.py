"""Decorated-particle PIC for the 1D Vlasov-Poisson system."""

from ._swpic import (
    ConfigError,
    DomainError,
    compress,
    convergence_study,
    exact_single_source,
    fit_rate,
    min_image,
    run_scenario,
    simulate,
    wrap_position,
)

__all__ = [
    "ConfigError",
    "DomainError",
    "compress",
    "convergence_study",
    "exact_single_source",
    "fit_rate",
    "min_image",
    "run_scenario",
    "simulate",
    "wrap_position",
]
