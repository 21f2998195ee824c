"""International Standard Atmosphere, troposphere and lower-stratosphere slice.

All cruise computations happen at a fixed pressure altitude, so the model is a
plain linear-lapse ISA column evaluated once per scenario and cached by the
callers that sit in hot loops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# Sea-level standard conditions and gas properties
THETA0 = 288.15      # sea-level temperature, K
P0 = 101325.0        # sea-level pressure, Pa
BETA = 0.0065        # tropospheric lapse rate, K/m
R_AIR = 287.04       # specific gas constant of air, J/(kg K)
GAMMA = 1.4          # ratio of specific heats
G0 = 9.81            # gravitational acceleration, m/s^2

ALTITUDE_MIN = 0.0
ALTITUDE_MAX = 20000.0

# Pressure exponent g/(beta R)
_PRESSURE_EXPONENT = G0 / (BETA * R_AIR)


@dataclass(frozen=True)
class AtmosphereState:
    """Static atmosphere at one altitude."""

    altitude: float       # geopotential altitude, m
    temperature: float    # K
    pressure: float       # Pa
    density: float        # kg/m^3
    sound_speed: float  # m/s


def isa_state(altitude: float) -> AtmosphereState:
    """Evaluate the linear-lapse ISA column at one altitude.

    Parameters
    ----------
    altitude : float
        Geopotential altitude in meters, within [0, 20000].

    Returns
    -------
    AtmosphereState
        Temperature Theta = Theta0 - beta h, pressure
        P = P0 (Theta/Theta0)^(g/(beta R)), density from the ideal gas law,
        and speed of sound sqrt(gamma R Theta).
    """
    if not math.isfinite(altitude):
        raise ValueError(f"altitude must be finite, got {altitude!r}")
    if altitude < ALTITUDE_MIN or altitude > ALTITUDE_MAX:
        raise ValueError(
            f"altitude {altitude} m outside supported range "
            f"[{ALTITUDE_MIN}, {ALTITUDE_MAX}] m"
        )
    temperature = THETA0 - BETA * altitude
    pressure = P0 * (temperature / THETA0) ** _PRESSURE_EXPONENT
    density = pressure / (R_AIR * temperature)
    sound_speed = math.sqrt(GAMMA * R_AIR * temperature)
    return AtmosphereState(
        altitude=altitude,
        temperature=temperature,
        pressure=pressure,
        density=density,
        sound_speed=sound_speed,
    )
