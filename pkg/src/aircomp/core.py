"""Domain types and exact evaluation of the AirComp signal model.

A receiver observes ``y = g * (sum_k h_k b_k x_k + n)`` and uses it as an
estimate of ``sum_k x_k``.  Phases are assumed pre-compensated, so channel
magnitudes ``h_k``, the receiver scaling ``g`` and the transmitter scalings
``b_k`` are all nonnegative reals.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "AirCompError",
    "DimensionMismatchError",
    "DomainError",
    "SolverError",
    "ChannelVector",
    "SystemInstance",
    "TxRxDesign",
    "MsePowerPoint",
    "mse",
    "sum_power",
    "received_output",
]


class AirCompError(Exception):
    """Base class for errors raised by this package."""


class DimensionMismatchError(AirCompError, ValueError):
    """Instance and design (or signal vector) disagree on the number of sensors."""


class DomainError(AirCompError, ValueError):
    """An argument lies outside the domain of the requested operation."""


class SolverError(AirCompError, RuntimeError):
    """A numerical solver failed to converge or hit an impossible state."""


def _frozen_array(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise DomainError(f"{name} must be one-dimensional, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ChannelVector:
    """Channel magnitudes ``h_k`` (amplitude gains), one per sensor."""

    gains: np.ndarray

    def __post_init__(self):
        gains = _frozen_array(self.gains, "gains")
        if gains.size < 1:
            raise DomainError("at least one sensor is required")
        if not np.all(np.isfinite(gains)) or np.any(gains <= 0.0):
            raise DomainError("channel magnitudes must be finite and strictly positive")
        object.__setattr__(self, "gains", gains)

    @classmethod
    def from_power_gains(cls, power_gains: Sequence[float]) -> "ChannelVector":
        """Build from channel-power gains ``|h_k|^2``."""
        p = np.asarray(power_gains, dtype=float)
        if np.any(p <= 0.0):
            raise DomainError("channel-power gains must be strictly positive")
        return cls(np.sqrt(p))

    def __len__(self) -> int:
        return self.gains.size


@dataclass(frozen=True, eq=False)
class SystemInstance:
    """Channels plus the receiver noise variance ``sigma^2``."""

    channels: ChannelVector
    noise_variance: float

    def __post_init__(self):
        if not isinstance(self.channels, ChannelVector):
            object.__setattr__(self, "channels", ChannelVector(self.channels))
        nv = float(self.noise_variance)
        if not np.isfinite(nv) or nv <= 0.0:
            raise DomainError(f"noise variance must be finite and positive, got {nv}")
        object.__setattr__(self, "noise_variance", nv)

    @classmethod
    def from_gains(cls, gains: Sequence[float], noise_variance: float = 1.0) -> "SystemInstance":
        return cls(ChannelVector(gains), noise_variance)

    @property
    def h(self) -> np.ndarray:
        return self.channels.gains

    @property
    def num_sensors(self) -> int:
        return len(self.channels)

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.noise_variance))


@dataclass(frozen=True, eq=False)
class TxRxDesign:
    """Receiver scaling ``g`` and transmitter scalings ``b_k``."""

    rx_gain: float
    tx_gains: np.ndarray

    def __post_init__(self):
        g = float(self.rx_gain)
        b = _frozen_array(self.tx_gains, "tx_gains")
        if not np.isfinite(g) or g < 0.0:
            raise DomainError(f"rx_gain must be finite and nonnegative, got {g}")
        if not np.all(np.isfinite(b)) or np.any(b < 0.0):
            raise DomainError("tx_gains must be finite and nonnegative")
        object.__setattr__(self, "rx_gain", g)
        object.__setattr__(self, "tx_gains", b)

    @classmethod
    def zero(cls, num_sensors: int) -> "TxRxDesign":
        return cls(0.0, np.zeros(num_sensors))

    def __len__(self) -> int:
        return self.tx_gains.size


@dataclass(frozen=True)
class MsePowerPoint:
    mse: float
    sum_power: float

    def __post_init__(self):
        for name in ("mse", "sum_power"):
            v = float(getattr(self, name))
            if not np.isfinite(v) or v < 0.0:
                raise DomainError(f"{name} must be finite and nonnegative, got {v}")
            object.__setattr__(self, name, v)


def _check_dims(instance: SystemInstance, design: TxRxDesign) -> None:
    if len(design) != instance.num_sensors:
        raise DimensionMismatchError(
            f"design has {len(design)} transmitters, instance has {instance.num_sensors} sensors"
        )


def mse(instance: SystemInstance, design: TxRxDesign) -> float:
    """Computation MSE ``sum_k (g h_k b_k - 1)^2 + sigma^2 g^2``."""
    _check_dims(instance, design)
    g = design.rx_gain
    misalignment = g * instance.h * design.tx_gains - 1.0
    return float(np.sum(misalignment * misalignment) + instance.noise_variance * g * g)


def sum_power(design: TxRxDesign) -> float:
    b = design.tx_gains
    return float(np.dot(b, b))


def received_output(instance: SystemInstance, design: TxRxDesign, signals, noise_sample):
    """Receiver output ``g * (sum_k h_k b_k x_k + n)``.

    ``signals`` may carry leading batch dimensions (shape ``(..., K)``);
    ``noise_sample`` must broadcast against the batch shape.  Scalars in,
    scalar out.
    """
    _check_dims(instance, design)
    x = np.asarray(signals, dtype=float)
    if x.shape[-1:] != (instance.num_sensors,):
        raise DimensionMismatchError(
            f"signals have trailing dimension {x.shape[-1:]}, expected {instance.num_sensors}"
        )
    effective = instance.h * design.tx_gains
    y = design.rx_gain * (x @ effective + np.asarray(noise_sample, dtype=float))
    return float(y) if np.ndim(y) == 0 else y
