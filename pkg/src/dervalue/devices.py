"""Net-zero PV sizing and the storage device each household receives."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

INVERTER_EFFICIENCY = 0.92
ROUND_TRIP_EFFICIENCY = 0.92
DAILY_SELF_DISCHARGE_RETENTION = 0.95
# Powerwall 2: 13.5 kWh usable, 5 kW sustained charge/discharge.
POWERWALL_CAPACITY_KWH = 13.5
POWERWALL_RATE_KW = 5.0
RATE_PER_KWH = POWERWALL_RATE_KW / POWERWALL_CAPACITY_KWH


@dataclass(frozen=True)
class DeviceSpec:
    """PV size plus storage limits and efficiencies.

    ``eta_self`` is the hourly retention of stored energy. A spec with zero
    capacity and zero rates is a household without storage.
    """

    z: float
    capacity: float
    charge_rate: float
    discharge_rate: float
    eta_inverter: float = INVERTER_EFFICIENCY
    eta_charge: float = math.sqrt(ROUND_TRIP_EFFICIENCY)
    eta_discharge: float = math.sqrt(ROUND_TRIP_EFFICIENCY)
    eta_self: float = DAILY_SELF_DISCHARGE_RETENTION ** (1 / 24)

    def __post_init__(self):
        for name in ("z", "capacity", "charge_rate", "discharge_rate"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        for name in ("eta_inverter", "eta_charge", "eta_discharge", "eta_self"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {v}")

    @property
    def charge_factor(self) -> float:
        """Grid energy drawn per kWh added to storage."""
        return 1.0 / (self.eta_charge * self.eta_inverter)

    @property
    def discharge_factor(self) -> float:
        """Grid energy offset per kWh removed from storage."""
        return self.eta_discharge * self.eta_inverter

    def without_storage(self) -> "DeviceSpec":
        return replace(self, capacity=0.0, charge_rate=0.0, discharge_rate=0.0)


def net_zero_size(load_kwh, irradiance, eta_inverter: float = INVERTER_EFFICIENCY) -> float:
    """PV size whose annual AC output equals annual consumption.

    ``z = sum(L) / (eta_I * sum(V))``; the result is dimensionless and read
    as kW of PV (and kWh of storage).
    """
    total_load = float(np.sum(load_kwh))
    total_sun = float(np.sum(irradiance))
    if total_sun <= 0:
        raise ValueError("irradiance total must be positive")
    if total_load <= 0:
        raise ValueError("load total must be positive")
    return total_load / (eta_inverter * total_sun)


def make_device(z: float) -> DeviceSpec:
    """Storage scaled to the PV size at 1 kWh per kW, Powerwall rate ratio."""
    if not z > 0:
        raise ValueError(f"PV size must be positive, got {z}")
    rate = z * RATE_PER_KWH
    return DeviceSpec(z=z, capacity=z, charge_rate=rate, discharge_rate=rate)


def pv_generation(z: float, irradiance) -> np.ndarray:
    """DC-side PV energy ``z * V``; the inverter is applied in the net load."""
    if z < 0:
        raise ValueError("PV size must be nonnegative")
    return z * np.asarray(irradiance, dtype=float)


def aggregate_devices(specs) -> DeviceSpec:
    """Sum capacities and rates of a group; efficiencies must agree."""
    specs = list(specs)
    if not specs:
        return DeviceSpec(0.0, 0.0, 0.0, 0.0)
    first = specs[0]
    for s in specs[1:]:
        if (s.eta_inverter, s.eta_charge, s.eta_discharge, s.eta_self) != (
            first.eta_inverter,
            first.eta_charge,
            first.eta_discharge,
            first.eta_self,
        ):
            raise ValueError("cannot aggregate devices with different efficiencies")
    return replace(
        first,
        z=sum(s.z for s in specs),
        capacity=sum(s.capacity for s in specs),
        charge_rate=sum(s.charge_rate for s in specs),
        discharge_rate=sum(s.discharge_rate for s in specs),
    )
