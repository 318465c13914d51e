"""Optimal transmitter/receiver scaling for over-the-air computation."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    AirCompError,
    ChannelVector,
    DimensionMismatchError,
    DomainError,
    MsePowerPoint,
    SolverError,
    SystemInstance,
    TxRxDesign,
    mse,
    received_output,
    sum_power,
)
from .mse_policy import solve_min_mse  # noqa: E402
from .power_policy import duality_check, solve_m, solve_min_power  # noqa: E402
