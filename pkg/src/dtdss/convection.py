"""Convective heat transfer coefficient and its density/wind scaling.

The full laminar Nusselt correlation is never evaluated at runtime; the
proportionality constant is calibrated once into ``h_c_reference`` and only
the square-root scaling in rho*V is applied, which is what gives the system
its altitude rejection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidInputError


@dataclass(frozen=True)
class ConvectionModel:
    """Calibrated convection operating point.

    h_c_reference: W/(m2*K) at calibration conditions
    rho_reference: kg/m3 at calibration
    wind_reference: m/s at calibration (already floor-clamped)
    wind_floor: m/s, minimum effective wind standing in for natural convection
    """

    h_c_reference: float
    rho_reference: float
    wind_reference: float
    wind_floor: float = 0.5

    def __post_init__(self):
        for name in ("h_c_reference", "rho_reference", "wind_reference", "wind_floor"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InvalidInputError(f"{name} must be finite and > 0, got {v}")
        if self.wind_floor > self.wind_reference:
            raise InvalidInputError("wind_floor must not exceed wind_reference")


def convective_coefficient(model: ConvectionModel, rho: float,
                           wind: float | None = None) -> float:
    """h_c scaled from the calibration point by sqrt(rho * V).

    ``wind`` below the floor is clamped up to it; ``wind=None`` means no
    wind input is available and the reference wind is assumed (scaling by
    density only).
    """
    if not (math.isfinite(rho) and rho > 0):
        raise InvalidInputError(f"air density must be finite and > 0, got {rho}")
    if wind is None:
        wind = model.wind_reference
    elif wind < 0 or not math.isfinite(wind):
        raise InvalidInputError(f"wind speed must be finite and >= 0, got {wind}")
    effective_wind = max(wind, model.wind_floor)
    ratio = (rho * effective_wind) / (model.rho_reference * model.wind_reference)
    return model.h_c_reference * math.sqrt(ratio)


def convective_flux(h_c: float, surface_temp: float, ambient_temp: float) -> float:
    """Newton's law of cooling q = h_c (T_s - T_inf), W/m2, sign-preserving."""
    if h_c < 0:
        raise InvalidInputError("h_c must be >= 0")
    return h_c * (surface_temp - ambient_temp)
