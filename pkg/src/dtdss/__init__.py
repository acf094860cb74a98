"""Differential dual-node soft sensor for solar irradiance and heat flux."""

from .convection import ConvectionModel, convective_coefficient, convective_flux
from .flux import (
    DifferentialSample,
    FluxEstimate,
    Pipeline,
    ReconstructionParams,
    Site,
    baseline_ghi,
    clear_sky_ghi,
    reconstruct_ghi,
    sanity_check,
    sol_air_excess,
    solar_zenith_deg,
)
from .inr import InrConfig, InrOutput, InrState, inr_step
from .psychro import (
    AirProperties,
    PsychroSample,
    air_properties,
    moist_air_density,
    saturation_vapor_pressure,
    specific_enthalpy,
    vapor_pressure,
)

__all__ = [
    "AirProperties",
    "ConvectionModel",
    "DifferentialSample",
    "FluxEstimate",
    "InrConfig",
    "InrOutput",
    "InrState",
    "Pipeline",
    "PsychroSample",
    "ReconstructionParams",
    "Site",
    "air_properties",
    "baseline_ghi",
    "clear_sky_ghi",
    "convective_coefficient",
    "convective_flux",
    "inr_step",
    "moist_air_density",
    "reconstruct_ghi",
    "sanity_check",
    "sol_air_excess",
    "solar_zenith_deg",
    "specific_enthalpy",
    "saturation_vapor_pressure",
    "vapor_pressure",
]

__version__ = "0.1.0"
