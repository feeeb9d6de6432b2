"""Evolutionary game of AI creators, users and media recommendations."""

__version__ = "0.1.0"

from .params import (  # noqa: E402
    CreatorStrategy,
    GameParams,
    ParameterError,
    UserStrategy,
    validate_params,
)
from .payoff import PopulationState, avg_cooperation, payoff_pair  # noqa: E402

__all__ = [
    "CreatorStrategy",
    "GameParams",
    "ParameterError",
    "PopulationState",
    "UserStrategy",
    "avg_cooperation",
    "payoff_pair",
    "validate_params",
]
