"""Humid-air thermodynamics from raw pressure/temperature/humidity readings.

Unit conventions: pressures in hPa (converted to Pa only inside the density
formula), temperatures in kelvin with a celsius accessor for enthalpy work.
Out-of-envelope readings are computed anyway; callers check ``in_envelope``
and flag rather than abort, because field sensors transiently exceed
their rated envelope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidInputError, SaturationOverflowError

R_DRY = 287.058     # J/(kg*K), dry air
R_VAPOR = 461.495   # J/(kg*K), water vapor
EPSILON = 0.622     # R_DRY / R_VAPOR

# Operational envelopes for a raw sample.
TEMP_ENVELOPE = (193.15, 353.15)        # K, -80..+80 C
RH_ENVELOPE = (0.0, 100.0)              # percent
PRESSURE_ENVELOPE = (300.0, 1100.0)     # hPa

# Range over which the Magnus-type saturation formula is considered robust.
ES_ROBUST_RANGE = (233.15, 323.15)      # K, -40..+50 C


@dataclass(frozen=True)
class PsychroSample:
    """One raw reading from one node at one instant.

    timestamp: seconds since epoch
    temperature: kelvin
    relative_humidity: percent, 0..100
    pressure: hectopascal
    """

    timestamp: float
    temperature: float
    relative_humidity: float
    pressure: float

    def __post_init__(self):
        for name in ("timestamp", "temperature", "relative_humidity", "pressure"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidInputError(f"non-finite {name} in PsychroSample")

    @property
    def temperature_c(self) -> float:
        return self.temperature - 273.15

    def in_envelope(self) -> bool:
        """True when every field sits inside the operational envelope."""
        return (
            TEMP_ENVELOPE[0] <= self.temperature <= TEMP_ENVELOPE[1]
            and RH_ENVELOPE[0] <= self.relative_humidity <= RH_ENVELOPE[1]
            and PRESSURE_ENVELOPE[0] <= self.pressure <= PRESSURE_ENVELOPE[1]
        )


@dataclass(frozen=True)
class AirProperties:
    """Derived thermodynamic state of one sample.

    Pressures in hPa, density in kg/m3, mixing ratio in kg water per kg
    dry air, enthalpy in kJ per kg dry air.
    """

    saturation_vapor_pressure: float
    vapor_pressure: float
    dry_partial_pressure: float
    moist_density: float
    mixing_ratio: float
    specific_enthalpy: float


def saturation_vapor_pressure(temperature: float) -> float:
    """Saturation vapor pressure e_s in hPa at the given kelvin temperature.

    Magnus-type fit: 6.112 * exp(17.67*(T - 273.15)/(T - 29.65)).
    Strictly increasing in T; exact 6.112 hPa at 0 C.
    """
    if not math.isfinite(temperature):
        raise InvalidInputError("non-finite temperature")
    return 6.112 * math.exp(17.67 * (temperature - 273.15) / (temperature - 29.65))


def vapor_pressure(temperature: float, relative_humidity: float) -> float:
    """Actual water vapor partial pressure e = e_s(T) * RH/100, in hPa."""
    if not math.isfinite(relative_humidity):
        raise InvalidInputError("non-finite relative humidity")
    if not RH_ENVELOPE[0] <= relative_humidity <= RH_ENVELOPE[1]:
        raise InvalidInputError(
            f"relative humidity {relative_humidity} outside [0, 100]"
        )
    return saturation_vapor_pressure(temperature) * relative_humidity / 100.0


def moist_air_density_at(pressure: float, temperature: float,
                         relative_humidity: float) -> float:
    """Moist air density in kg/m3 from pressure (hPa), T (K), RH (%).

    rho = (P / (R_d T)) * (1 - (e/P)(1 - eps)); reduces to the dry ideal-gas
    density P/(R_d T) at RH = 0.  Humid air is less dense than dry air.
    """
    e = vapor_pressure(temperature, relative_humidity)
    p_pa = pressure * 100.0
    e_pa = e * 100.0
    return (p_pa / (R_DRY * temperature)) * (1.0 - (e_pa / p_pa) * (1.0 - EPSILON))


def moist_air_density(sample: PsychroSample) -> float:
    """Moist air density of a raw sample, kg/m3."""
    return moist_air_density_at(
        sample.pressure, sample.temperature, sample.relative_humidity
    )


def mixing_ratio(vapor_pressure_hpa: float, pressure: float) -> float:
    """Humidity mixing ratio x = 0.622 e / (P - e), kg water / kg dry air."""
    if pressure <= vapor_pressure_hpa:
        raise SaturationOverflowError(
            f"total pressure {pressure} hPa <= vapor pressure {vapor_pressure_hpa} hPa"
        )
    return EPSILON * vapor_pressure_hpa / (pressure - vapor_pressure_hpa)


def specific_enthalpy(temperature_c: float, mixing_ratio_kgkg: float) -> float:
    """Specific enthalpy of moist air, kJ per kg dry air.

    h = 1.006 t + x (2501 + 1.86 t): sensible heat of the dry fraction plus
    latent and sensible heat carried by the vapor fraction.
    """
    if mixing_ratio_kgkg < 0:
        raise InvalidInputError("mixing ratio must be >= 0")
    return 1.006 * temperature_c + mixing_ratio_kgkg * (2501.0 + 1.86 * temperature_c)


def air_properties(sample: PsychroSample) -> AirProperties:
    """All derived thermodynamic properties of one sample."""
    e_s = saturation_vapor_pressure(sample.temperature)
    e = vapor_pressure(sample.temperature, sample.relative_humidity)
    x = mixing_ratio(e, sample.pressure)
    return AirProperties(
        saturation_vapor_pressure=e_s,
        vapor_pressure=e,
        dry_partial_pressure=sample.pressure - e,
        moist_density=moist_air_density(sample),
        mixing_ratio=x,
        specific_enthalpy=specific_enthalpy(sample.temperature_c, x),
    )
