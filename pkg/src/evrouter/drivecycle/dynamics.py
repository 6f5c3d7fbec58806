"""Longitudinal vehicle dynamics and drive-cycle simulation."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

G = 9.81  # m/s^2


class DynamicsError(ValueError):
    pass


@dataclass(frozen=True)
class VehicleDynamicsParams:
    """Physical parameters of the power balance.

    Defaults describe a compact EV of Leaf size.  ``regen_eta`` scales
    negative (recuperated) power; ``aux_power`` is a constant draw in W.
    """

    eta: float = 0.9
    f_r: float = 0.01
    rho: float = 1.2
    C_D: float = 0.29
    A: float = 2.27
    delta: float = 1.05
    M: float = 1544.0
    regen_eta: float = 0.6
    aux_power: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            val = getattr(self, f.name)
            if not math.isfinite(val):
                raise DynamicsError(f"{f.name} must be finite")
        if not 0 < self.eta <= 1 or not 0 < self.regen_eta <= 1:
            raise DynamicsError("eta and regen_eta must lie in (0, 1]")
        if min(self.f_r, self.rho, self.C_D, self.A, self.M) <= 0:
            raise DynamicsError("f_r, rho, C_D, A and M must be positive")
        if self.delta < 1:
            raise DynamicsError("delta must be at least 1")
        if self.aux_power < 0:
            raise DynamicsError("aux_power must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "VehicleDynamicsParams":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise DynamicsError(f"unknown dynamics fields: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()})


def load_dynamics(path) -> VehicleDynamicsParams:
    with open(path, encoding="utf-8") as fh:
        return VehicleDynamicsParams.from_dict(json.load(fh))


def instantaneous_power(params: VehicleDynamicsParams, v, dv_dt, slope, m_extra=0.0):
    """Electrical power in W drawn from the battery (negative = recharging).

    Works elementwise on arrays.  Negative traction power is scaled by
    ``regen_eta``; auxiliary power is added afterwards.
    """
    v = np.asarray(v, dtype=float)
    slope = float(slope)
    if abs(slope) >= 1:
        raise DynamicsError(f"|slope| must be < 1, got {slope}")
    if np.any(v < 0):
        raise DynamicsError("speed must be non-negative")
    p = params
    m = p.M + m_extra
    cos_t = math.sqrt(1.0 - slope * slope)
    force = (
        m * G * p.f_r * cos_t
        + 0.5 * p.rho * p.C_D * p.A * v * v
        + m * G * slope
        + m * p.delta * np.asarray(dv_dt, dtype=float)
    )
    power = v / p.eta * force
    power = np.where(power < 0, power * p.regen_eta, power) + p.aux_power
    return float(power) if power.ndim == 0 else power


@dataclass(frozen=True)
class SpeedProfile:
    label: str
    samples: np.ndarray  # m/s at 1 s steps

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise DynamicsError("profile needs a 1-d, non-empty sample array")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise DynamicsError("profile speeds must be finite and non-negative")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @property
    def duration(self) -> float:
        return float(self.samples.size)

    @property
    def distance(self) -> float:
        return float(self.samples.sum())

    @property
    def mean_speed_kmh(self) -> float:
        return float(self.samples.mean() * 3.6)


def cycle_energy(params: VehicleDynamicsParams, profile: SpeedProfile, slope: float, m_extra: float = 0.0):
    """Net battery energy (J) and distance (m) over the profile."""
    v = profile.samples
    dv = np.gradient(v) if v.size > 1 else np.zeros_like(v)
    power = instantaneous_power(params, v, dv, slope, m_extra)
    return float(np.sum(power)), float(v.sum())


def simulate_cycle(params: VehicleDynamicsParams, profile: SpeedProfile, slope: float, m_extra: float = 0.0) -> float:
    """Average efficiency in Wh/100m over one pass of ``profile``."""
    joules, dist = cycle_energy(params, profile, slope, m_extra)
    if dist <= 0:
        raise DynamicsError(f"profile {profile.label!r} covers no distance")
    return joules / 3600.0 / (dist / 100.0)
