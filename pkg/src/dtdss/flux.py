"""Dual-path irradiance reconstruction.

Reactive path: invert the flux-node energy balance. The sol-air excess
isolates the thermal signal attributable to external radiative forcing
(temperature difference plus inertial correction minus self-heating) and
is scaled by h_c / absorptivity into W/m2.

Reference path: clear-sky geometry (Haurwitz) degraded by a humidity-based
cloud proxy gives an independent baseline used for sanity checks and for
slow feedback on the cloud exponent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import FrozenSet, Optional, Tuple

from .convection import ConvectionModel, convective_coefficient
from .errors import DtdssError, InvalidInputError, OrderingError
from .inr import InrConfig, InrState, inr_step
from .psychro import (
    PsychroSample,
    RH_ENVELOPE,
    air_properties,
)

# Quality flags carried on every estimate.
FLAG_EXCEEDS_CLEARSKY = "exceeds_clearsky"
FLAG_PATH_DISAGREEMENT = "path_disagreement"
FLAG_NODE_INVERSION = "node_inversion"
FLAG_CLAMPED = "clamped"
FLAG_OUT_OF_ENVELOPE = "out_of_envelope"

GHI_MIN = 0.0
GHI_MAX = 1400.0

# Zenith angle limits: "daylight" for the node-inversion check, and the
# gate below which the clear-sky value is trusted for feedback.
DAYLIGHT_ZENITH_DEG = 85.0
ADAPT_ZENITH_DEG = 80.0

# Stability gate for the path-disagreement check.
STABLE_DERIVATIVE_LIMIT = 0.005   # K/s
STABLE_SPAN_S = 60.0

K_CLOUD_BOUNDS = (1.0, 3.0)


@dataclass(frozen=True)
class Site:
    latitude_deg: float
    longitude_deg: float
    utc_offset_h: float = 0.0


@dataclass(frozen=True)
class DifferentialSample:
    """One paired reading: reference node state plus flux-node temperature."""

    reference: PsychroSample
    flux_temp: float            # K
    wind: Optional[float] = None  # m/s, None when no anemometer input
    timestamp: float = 0.0

    def __post_init__(self):
        if self.reference.timestamp != self.timestamp:
            raise InvalidInputError("reference sample timestamp mismatch")


@dataclass(frozen=True)
class ReconstructionParams:
    convection: ConvectionModel
    site: Site
    absorptivity: float = 0.90
    tau: float = 30.0           # s
    t_rise: float = 1.0         # K, dark self-heating offset
    gain: float = 1.0           # scalar output calibration factor
    cloud_exponent: float = 1.5
    density_scaling: bool = True
    adapt_cloud: bool = False
    cloud_learning_rate: float = 0.01

    def __post_init__(self):
        if not 0 < self.absorptivity <= 1:
            raise InvalidInputError("absorptivity must be in (0, 1]")
        if self.tau <= 0 or self.gain <= 0 or self.cloud_exponent <= 0:
            raise InvalidInputError("tau, gain and cloud_exponent must be > 0")


@dataclass(frozen=True)
class FluxEstimate:
    ghi: float                  # W/m2, clamped to [0, 1400]
    ghi_raw: float              # W/m2, pre-clamp
    sol_air_excess: float       # K
    baseline_ghi: float         # W/m2
    clear_sky_ghi: float        # W/m2
    flags: FrozenSet[str] = frozenset()


def solar_zenith_deg(site: Site, timestamp: float) -> float:
    """Solar zenith angle in degrees from declination/hour-angle geometry.

    ``timestamp`` is seconds UTC; the site UTC offset cancels against its
    time-zone meridian and is kept only for interface fidelity.
    """
    moment = datetime.fromtimestamp(timestamp, tz=timezone.utc)
    day_of_year = moment.timetuple().tm_yday
    seconds_of_day = (
        moment.hour * 3600 + moment.minute * 60 + moment.second + moment.microsecond / 1e6
    )
    gamma = 2.0 * math.pi / 365.0 * (day_of_year - 1 + (seconds_of_day / 3600 - 12) / 24)

    declination = (
        0.006918
        - 0.399912 * math.cos(gamma)
        + 0.070257 * math.sin(gamma)
        - 0.006758 * math.cos(2 * gamma)
        + 0.000907 * math.sin(2 * gamma)
        - 0.002697 * math.cos(3 * gamma)
        + 0.00148 * math.sin(3 * gamma)
    )
    eq_time_min = 229.18 * (
        0.000075
        + 0.001868 * math.cos(gamma)
        - 0.032077 * math.sin(gamma)
        - 0.014615 * math.cos(2 * gamma)
        - 0.040849 * math.sin(2 * gamma)
    )

    local_min = ((seconds_of_day / 60.0) + site.utc_offset_h * 60.0) % 1440.0
    true_solar_min = local_min + 4.0 * (
        site.longitude_deg - 15.0 * site.utc_offset_h
    ) + eq_time_min
    hour_angle = math.radians(true_solar_min / 4.0 - 180.0)

    lat = math.radians(site.latitude_deg)
    cos_zenith = (
        math.sin(lat) * math.sin(declination)
        + math.cos(lat) * math.cos(declination) * math.cos(hour_angle)
    )
    cos_zenith = min(1.0, max(-1.0, cos_zenith))
    return math.degrees(math.acos(cos_zenith))


def clear_sky_ghi(site: Site, timestamp: float) -> float:
    """Haurwitz clear-sky GHI: 1098 cos(z) exp(-0.057/cos(z)), 0 below horizon."""
    zenith = solar_zenith_deg(site, timestamp)
    if zenith >= 90.0:
        return 0.0
    cos_z = math.cos(math.radians(zenith))
    return 1098.0 * cos_z * math.exp(-0.057 / cos_z)


def sol_air_excess(delta_t: float, tau: float, dtdt: float, t_rise: float) -> float:
    """T_sol = dT + tau * dT/dt - T_rise; may be negative."""
    if tau <= 0:
        raise InvalidInputError("tau must be > 0")
    return delta_t + tau * dtdt - t_rise


def reconstruct_ghi(h_c: float, absorptivity: float, t_sol: float,
                    gain: float = 1.0) -> float:
    """G_raw = gain * (h_c / absorptivity) * T_sol, W/m2."""
    if absorptivity <= 0:
        raise InvalidInputError("absorptivity must be > 0")
    return gain * (h_c / absorptivity) * t_sol


def cloud_proxy(relative_humidity: float, k_cloud: float) -> float:
    """Diagnostic cloud-cover proxy (RH/100)^k."""
    return (relative_humidity / 100.0) ** k_cloud


def baseline_ghi(g_cs: float, relative_humidity: float, k_cloud: float) -> float:
    """Reference-path estimate G_cs * (1 - 0.75 (RH/100)^(3.4 k))."""
    if not RH_ENVELOPE[0] <= relative_humidity <= RH_ENVELOPE[1]:
        raise InvalidInputError("relative humidity outside [0, 100]")
    return g_cs * (1.0 - 0.75 * (relative_humidity / 100.0) ** (3.4 * k_cloud))


def sanity_check(ghi_raw: float, baseline: float, g_cs: float, delta_t: float,
                 is_daylight: bool, stable: bool) -> Tuple[float, FrozenSet[str]]:
    """Apply the differential sanity rules and the hard output clamp.

    Always returns ghi in [0, 1400] no matter how pathological the input.
    """
    flags = set()
    if not math.isfinite(ghi_raw):
        return 0.0, frozenset({FLAG_CLAMPED, FLAG_OUT_OF_ENVELOPE})
    if ghi_raw > 1.2 * g_cs:
        flags.add(FLAG_EXCEEDS_CLEARSKY)
    if stable and abs(ghi_raw - baseline) > 0.5 * max(ghi_raw, baseline):
        flags.add(FLAG_PATH_DISAGREEMENT)
    if is_daylight and delta_t < 0:
        flags.add(FLAG_NODE_INVERSION)
    ghi = min(max(ghi_raw, GHI_MIN), GHI_MAX)
    if ghi != ghi_raw:
        flags.add(FLAG_CLAMPED)
    return ghi, frozenset(flags)


def adapt_cloud_k(k_cloud: float, ghi_reactive: float, ghi_baseline: float,
                  g_cs: float, zenith_deg: float,
                  learning_rate: float = 0.01) -> float:
    """Nudge the cloud exponent toward agreement with the reactive path.

    A bounded exponential step toward the exponent that would make the
    baseline power law reproduce the reactive estimate; no-op whenever the
    sun is low, either estimate is unusable, or the inversion is undefined.
    """
    if g_cs <= 0 or zenith_deg >= ADAPT_ZENITH_DEG:
        return k_cloud
    if not (math.isfinite(ghi_reactive) and math.isfinite(ghi_baseline)):
        return k_cloud
    # Current and wanted attenuation fractions 0.75 * (RH/100)^(3.4 k).
    current = (1.0 - ghi_baseline / g_cs) / 0.75
    wanted = (1.0 - ghi_reactive / g_cs) / 0.75
    if not (0.0 < current < 1.0 and 0.0 < wanted < 1.0):
        return k_cloud
    k_target = k_cloud * math.log(wanted) / math.log(current)
    k_new = k_cloud + learning_rate * (k_target - k_cloud)
    return min(max(k_new, K_CLOUD_BOUNDS[0]), K_CLOUD_BOUNDS[1])


@dataclass
class PipelineState:
    """Mutable per-sensor-pair state; steps are strictly sequential."""

    inr: InrState = field(default_factory=InrState)
    k_cloud: float = 1.5
    last_timestamp: Optional[float] = None
    quiet_since: Optional[float] = None  # onset of the current low-derivative run


class Pipeline:
    """Full reconstruction chain for one reference/flux sensor pair."""

    def __init__(self, params: ReconstructionParams,
                 inr_config: Optional[InrConfig] = None):
        self.params = params
        self.inr_config = inr_config or InrConfig(tau=params.tau)
        if self.inr_config.tau != params.tau:
            self.inr_config = replace(self.inr_config, tau=params.tau)
        self.state = PipelineState(k_cloud=params.cloud_exponent)

    def step(self, sample: DifferentialSample) -> FluxEstimate:
        state, params = self.state, self.params
        if state.last_timestamp is not None and sample.timestamp <= state.last_timestamp:
            raise OrderingError(
                f"timestamp {sample.timestamp} not after {state.last_timestamp}"
            )

        zenith = solar_zenith_deg(params.site, sample.timestamp)
        g_cs = clear_sky_ghi(params.site, sample.timestamp)

        try:
            estimate = self._reconstruct(sample, zenith, g_cs)
        except (DtdssError, ValueError):
            # Degrade gracefully: emit a flagged zero and keep filter state.
            estimate = FluxEstimate(
                ghi=0.0, ghi_raw=0.0, sol_air_excess=0.0,
                baseline_ghi=0.0, clear_sky_ghi=g_cs,
                flags=frozenset({FLAG_OUT_OF_ENVELOPE}),
            )
        state.last_timestamp = sample.timestamp
        return estimate

    def _reconstruct(self, sample: DifferentialSample, zenith: float,
                     g_cs: float) -> FluxEstimate:
        state, params = self.state, self.params
        ref = sample.reference
        envelope_ok = ref.in_envelope() and math.isfinite(sample.flux_temp)

        props = air_properties(ref)
        rho = props.moist_density if params.density_scaling else params.convection.rho_reference
        h_c = convective_coefficient(params.convection, rho, sample.wind)

        _, inr_out = inr_step(state.inr, self.inr_config, sample.flux_temp,
                              sample.timestamp)

        # tau and T_rise are both inversely proportional to h_c * A_s, so a
        # density change rescales the calibrated values by h_c_ref / h_c.
        scale = params.convection.h_c_reference / h_c
        tau_eff = params.tau * scale
        t_rise_eff = params.t_rise * scale

        delta_t = inr_out.filtered_temp - ref.temperature
        t_sol = sol_air_excess(delta_t, tau_eff, inr_out.derivative, t_rise_eff)
        ghi_raw = reconstruct_ghi(h_c, params.absorptivity, t_sol, params.gain)

        baseline = baseline_ghi(g_cs, ref.relative_humidity, state.k_cloud)

        stable = self._update_stability(sample.timestamp, inr_out.derivative)
        ghi, flags = sanity_check(
            ghi_raw, baseline, g_cs, delta_t,
            is_daylight=zenith < DAYLIGHT_ZENITH_DEG, stable=stable,
        )
        if not envelope_ok:
            flags = flags | {FLAG_OUT_OF_ENVELOPE}

        if params.adapt_cloud:
            state.k_cloud = adapt_cloud_k(
                state.k_cloud, ghi, baseline, g_cs, zenith,
                params.cloud_learning_rate,
            )

        return FluxEstimate(
            ghi=ghi, ghi_raw=ghi_raw, sol_air_excess=t_sol,
            baseline_ghi=baseline, clear_sky_ghi=g_cs, flags=flags,
        )

    def _update_stability(self, timestamp: float, derivative: float) -> bool:
        state = self.state
        if abs(derivative) >= STABLE_DERIVATIVE_LIMIT:
            state.quiet_since = None
            return False
        if state.quiet_since is None:
            state.quiet_since = timestamp
        return timestamp - state.quiet_since >= STABLE_SPAN_S


def pipeline_step(state_or_pipeline: Pipeline,
                  sample: DifferentialSample) -> Tuple[Pipeline, FluxEstimate]:
    """Functional wrapper over :meth:`Pipeline.step`."""
    return state_or_pipeline, state_or_pipeline.step(sample)
