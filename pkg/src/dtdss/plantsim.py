"""Forward lumped-capacitance simulator for the flux node.

Generates synthetic dual-node telemetry from known irradiance / wind /
ambient scenarios and pairs every emitted sample with the true irradiance,
so the reconstruction chain can be validated closed-loop. Only the forward
energy balance lives here; the inversion is deliberately not shared with
the reconstruction code so round trips stay meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np

from .convection import ConvectionModel, convective_coefficient
from .errors import IntegrationError, InvalidInputError
from .flux import DifferentialSample
from .psychro import PsychroSample, moist_air_density_at

Signal = Union[float, Callable[[float], float]]


def _as_func(value: Signal) -> Callable[[float], float]:
    if callable(value):
        return value
    return lambda _t, _v=float(value): _v


@dataclass(frozen=True)
class PlantConfig:
    """Physical parameters of the simulated flux node."""

    convection: ConvectionModel
    absorptivity: float = 0.90
    surface_area: float = 50e-6        # m2
    heat_capacity: float = 1.0         # J/K
    electrical_power: float = 0.0      # W
    quantization: float = 0.01         # K, sensor resolution at emission
    noise_sigma: float = 0.005         # K, additive gaussian, seedable
    sample_interval: float = 10.0      # s

    def __post_init__(self):
        if self.heat_capacity <= 0 or self.surface_area <= 0:
            raise InvalidInputError("heat_capacity and surface_area must be > 0")
        if self.quantization < 0 or self.noise_sigma < 0:
            raise InvalidInputError("quantization and noise_sigma must be >= 0")
        if self.sample_interval <= 0:
            raise InvalidInputError("sample_interval must be > 0")


@dataclass(frozen=True)
class Scenario:
    """Environment trajectories as functions of time (seconds from start)."""

    duration: float
    ambient_temp: Signal            # K
    irradiance: Signal              # W/m2, true G
    relative_humidity: Signal = 50.0
    pressure: Signal = 1013.25      # hPa
    wind: Signal = 1.0              # m/s
    start_timestamp: float = 0.0    # epoch seconds of t = 0


# Sub-steps per time constant needed for the RK4 error budget, and the
# hard ceiling guarding against runaway refinement.
SUBSTEPS_PER_TAU = 10
MAX_SUBSTEPS = 10000


def _quantize(value: float, resolution: float) -> float:
    if resolution <= 0:
        return value
    return round(value / resolution) * resolution


def simulate(plant: PlantConfig, scenario: Scenario,
             seed: Optional[int] = None) -> List[Tuple[DifferentialSample, float]]:
    """Integrate the flux-node energy balance and emit quantized telemetry.

    m Cp dT/dt = alpha G A + P_elec - h_c A (T_flux - T_ref), stepped with
    classical RK4 at sub-sample resolution. The reference node tracks
    ambient exactly; both node temperatures are noised and quantized at
    emission only, the way an ADC observes a continuous plant.
    """
    ambient = _as_func(scenario.ambient_temp)
    irradiance = _as_func(scenario.irradiance)
    humidity = _as_func(scenario.relative_humidity)
    pressure = _as_func(scenario.pressure)
    wind = _as_func(scenario.wind)
    rng = np.random.default_rng(seed)

    area = plant.surface_area
    mcp = plant.heat_capacity

    def h_c_at(t: float) -> float:
        rho = moist_air_density_at(pressure(t), ambient(t), humidity(t))
        return convective_coefficient(plant.convection, rho, wind(t))

    def rate(t: float, t_flux: float) -> float:
        absorbed = plant.absorptivity * irradiance(t) * area + plant.electrical_power
        lost = h_c_at(t) * area * (t_flux - ambient(t))
        return (absorbed - lost) / mcp

    dt_emit = plant.sample_interval
    n_samples = int(math.floor(scenario.duration / dt_emit)) + 1

    t_flux = ambient(0.0)
    out: List[Tuple[DifferentialSample, float]] = []
    for k in range(n_samples):
        t = k * dt_emit
        timestamp = scenario.start_timestamp + t

        # Emit before advancing so the first sample reflects t = 0.
        noise_flux = rng.normal(0.0, plant.noise_sigma) if plant.noise_sigma else 0.0
        noise_ref = rng.normal(0.0, plant.noise_sigma) if plant.noise_sigma else 0.0
        t_ref_emit = _quantize(ambient(t) + noise_ref, plant.quantization)
        t_flux_emit = _quantize(t_flux + noise_flux, plant.quantization)
        reference = PsychroSample(
            timestamp=timestamp,
            temperature=t_ref_emit,
            relative_humidity=humidity(t),
            pressure=pressure(t),
        )
        sample = DifferentialSample(
            reference=reference, flux_temp=t_flux_emit,
            wind=wind(t), timestamp=timestamp,
        )
        # Truth is the forcing that drove the plant up to this instant
        # (left limit), so step edges land on the sample they acted in.
        g_true = irradiance(t - 1e-9) if t > 0 else irradiance(0.0)
        out.append((sample, float(g_true)))

        if k == n_samples - 1:
            break

        tau_now = mcp / (h_c_at(t) * area)
        n_sub = max(1, math.ceil(dt_emit * SUBSTEPS_PER_TAU / tau_now))
        if n_sub > MAX_SUBSTEPS:
            raise IntegrationError(
                f"time constant {tau_now:.3g} s needs more than "
                f"{MAX_SUBSTEPS} sub-steps per sample"
            )
        h = dt_emit / n_sub
        for j in range(n_sub):
            tj = t + j * h
            k1 = rate(tj, t_flux)
            k2 = rate(tj + h / 2, t_flux + h / 2 * k1)
            k3 = rate(tj + h / 2, t_flux + h / 2 * k2)
            k4 = rate(tj + h, t_flux + h * k3)
            t_flux += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return out


def default_plant(sample_interval: float = 10.0, noise_sigma: float = 0.005,
                  quantization: float = 0.01) -> PlantConfig:
    """Plant with tau = 30 s and T_rise = 1.0 K at the calibration point."""
    convection = ConvectionModel(
        h_c_reference=2000.0 / 3.0,   # gives tau = mCp/(h_c A) = 30 s
        rho_reference=1.225,
        wind_reference=1.0,
        wind_floor=0.5,
    )
    h_c_a = convection.h_c_reference * 50e-6
    return PlantConfig(
        convection=convection,
        absorptivity=0.90,
        surface_area=50e-6,
        heat_capacity=1.0,
        electrical_power=1.0 * h_c_a,  # T_rise = 1.0 K
        quantization=quantization,
        noise_sigma=noise_sigma,
        sample_interval=sample_interval,
    )


def _piecewise_constant(change_points: np.ndarray,
                        levels: np.ndarray) -> Callable[[float], float]:
    def f(t: float) -> float:
        idx = int(np.searchsorted(change_points, t, side="right") - 1)
        idx = min(max(idx, 0), len(levels) - 1)
        return float(levels[idx])
    return f


def scenario_library(seed: int = 0) -> Dict[str, Scenario]:
    """Named validation scenarios; reproducible for a given seed.

    Diurnal timing assumes an equatorial site at longitude 0 with
    timestamps counted from midnight UTC, so solar noon lands near 43200 s.
    """
    rng = np.random.default_rng(seed)

    def diurnal_g(t: float) -> float:
        if 21600.0 <= t <= 64800.0:
            return 800.0 * math.sin(math.pi * (t - 21600.0) / 43200.0)
        return 0.0

    def diurnal_ambient(t: float) -> float:
        return 288.15 + 5.0 * math.sin(2.0 * math.pi * (t - 32400.0) / 86400.0)

    # Random cloud-edge steps: 30-300 s holds, levels 200-800 W/m2.
    # Edges snap to the 10 s emission grid so the truth at an emission
    # instant is always the level that actually drove the plant.
    points = [0.0]
    while points[-1] < 86400.0:
        points.append(points[-1] + round(rng.uniform(30.0, 300.0) / 10.0) * 10.0)
    change_points = np.array(points)
    levels = rng.uniform(200.0, 800.0, size=len(points))
    cloud_g = _piecewise_constant(change_points, levels)

    def altitude_pressure(t: float) -> float:
        if t < 600.0:
            return 1013.25
        return 1013.25 + (600.0 - 1013.25) * (t - 600.0) / 3000.0

    # Wind gust bursts: white noise at the sample rate, clipped positive.
    gust_times = np.arange(0.0, 601.0, 1.0)
    gusts = np.clip(1.0 + rng.normal(0.0, 1.5, size=gust_times.size), 0.0, None)
    gusty_wind = _piecewise_constant(gust_times, gusts)

    return {
        "diurnal_clear": Scenario(
            duration=86400.0, ambient_temp=diurnal_ambient, irradiance=diurnal_g,
            relative_humidity=50.0, pressure=1013.25, wind=1.0,
        ),
        "cloud_transients": Scenario(
            duration=86400.0, ambient_temp=290.15, irradiance=cloud_g,
            relative_humidity=60.0, pressure=1013.25, wind=1.0,
        ),
        "altitude_sweep": Scenario(
            duration=3600.0, ambient_temp=290.0, irradiance=500.0,
            relative_humidity=30.0, pressure=altitude_pressure, wind=1.0,
        ),
        "dark_room": Scenario(
            duration=600.0, ambient_temp=293.15, irradiance=0.0,
            relative_humidity=40.0, pressure=1013.25, wind=1.0,
        ),
        "step_response": Scenario(
            duration=900.0, ambient_temp=293.15,
            irradiance=lambda t: 800.0 if t < 600.0 else 0.0,
            relative_humidity=40.0, pressure=1013.25, wind=1.0,
        ),
        "gusty": Scenario(
            duration=600.0, ambient_temp=291.15, irradiance=600.0,
            relative_humidity=55.0, pressure=1013.25, wind=gusty_wind,
        ),
    }
