"""Integer-only mirror of the reactive hot path (Q-format arithmetic).

Temperatures are carried as Q-format integers with 10 fraction bits,
smoothing factors with 12, and the convection/gain chain is pre-folded
into one multiplier so the per-sample path is add / multiply / shift only.
Density still comes from the float reference path, but only touches the
folded multiplier when it moves by more than the refresh threshold.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from .errors import FixedRangeError, InvalidInputError

INT32_MIN = -(1 << 31)
INT32_MAX = (1 << 31) - 1
INT16_MIN = -(1 << 15)
INT16_MAX = (1 << 15) - 1

TEMP_FRAC_BITS = 10      # temperatures, K in Q*.10
ALPHA_FRAC_BITS = 12     # smoothing factors in Q*.12
PROJ_FRAC_BITS = 8       # tau/(2 dt) projection multiplier in Q*.8
GAIN_SHIFT = 14          # output multiplier shift
DENSITY_FRAC_BITS = 20   # kg/m3 in Q*.20

# Relative density change that forces a refold of the output multiplier.
# 1% staleness alone costs ~8 W/m2 at full sun, so refresh far earlier.
DENSITY_REFRESH_FRACTION = 0.0025

GHI_MIN = 0
GHI_MAX = 1400


@dataclass(frozen=True)
class QFormat:
    """Fixed-point layout: integer bits, fraction bits, sign bit."""

    integer_bits: int
    fraction_bits: int
    signed: bool = True

    def __post_init__(self):
        total = self.integer_bits + self.fraction_bits + (1 if self.signed else 0)
        if self.integer_bits < 0 or self.fraction_bits < 0 or total > 32:
            raise InvalidInputError("QFormat must fit in 32 bits")

    @property
    def scale(self) -> int:
        return 1 << self.fraction_bits

    @property
    def max_value(self) -> int:
        return (1 << (self.integer_bits + self.fraction_bits)) - 1

    @property
    def min_value(self) -> int:
        return -(1 << (self.integer_bits + self.fraction_bits)) if self.signed else 0


def to_fixed(value: float, fmt: QFormat) -> int:
    """Round-to-nearest encoding into ``fmt``; raises on overflow."""
    if not math.isfinite(value):
        raise InvalidInputError("cannot encode non-finite value")
    raw = math.floor(value * fmt.scale + 0.5)
    if raw < fmt.min_value or raw > fmt.max_value:
        raise FixedRangeError(f"{value} not representable in Q{fmt.integer_bits}.{fmt.fraction_bits}")
    return raw


def to_real(raw: int, fmt: QFormat) -> float:
    return raw / fmt.scale


def fixed_scale(raw: int, multiplier: int, shift: int) -> int:
    """(raw * multiplier) >> shift with round-half-up via a pre-added half.

    The arithmetic shift floors, so adding half an ulp first rounds the
    true product to the nearest representable value.
    """
    product = raw * multiplier
    if not (-(1 << 62) <= product <= (1 << 62) - 1):
        raise FixedRangeError("intermediate product exceeds double width")
    if shift == 0:
        return product
    return (product + (1 << (shift - 1))) >> shift


def _saturate32(value: int, flags: "FixedPipelineState") -> int:
    if value > INT32_MAX:
        flags.saturated = True
        return INT32_MAX
    if value < INT32_MIN:
        flags.saturated = True
        return INT32_MIN
    return value


@dataclass(frozen=True)
class FixedPipelineConfig:
    """Immutable integer constants derived from the float parameters."""

    alpha_min_q: int
    alpha_max_q: int
    jerk_gain_q: int
    sample_interval: float
    # Float-side values needed for slow-path refolds.
    tau_s: float
    t_rise_k: float
    gain: float
    absorptivity: float


@dataclass
class FixedPipelineState:
    """Integer state; everything here is what the MCU must keep in RAM."""

    # Reactive block (per flux sensor).
    t_filt_q: int = 0
    window: List[int] = field(default_factory=list)   # filtered temps, Q10
    initialized: bool = False
    saturated: bool = False
    # Reference-path shared block.
    out_mult_q: int = 0        # folded gain * h_c / alpha, Q.GAIN_SHIFT per Q10 K
    rho_q: int = 0             # last density, Q20
    t_rise_q: int = 0          # effective self-heating offset, Q10
    tau_2dt_q: int = 0         # tau_eff / (2 dt), Q8
    delta_t_q: int = 0         # last node differential, Q10

    def serialize_reactive(self) -> bytes:
        """Per-sensor reactive block, little-endian, 18 bytes.

        Layout: t_filt int32, window[3] int32 (zero padded),
        window count uint8, flag bits uint8.
        """
        w = list(self.window) + [0] * (3 - len(self.window))
        flags = (1 if self.initialized else 0) | (2 if self.saturated else 0)
        return struct.pack("<4i2B", self.t_filt_q, *w[:3], len(self.window), flags)

    def serialize_shared(self) -> bytes:
        """Shared reference-path block, little-endian, 14 bytes.

        Layout: out_mult int32, rho int32, t_rise int16, tau_2dt int16,
        delta_t int16.
        """
        return struct.pack(
            "<2i3h",
            self.out_mult_q,
            self.rho_q,
            max(INT16_MIN, min(INT16_MAX, self.t_rise_q)),
            max(INT16_MIN, min(INT16_MAX, self.tau_2dt_q)),
            max(INT16_MIN, min(INT16_MAX, self.delta_t_q)),
        )

    def serialize(self, n_sensors: int = 1) -> bytes:
        return self.serialize_reactive() * n_sensors + self.serialize_shared()


class FixedPipeline:
    """Reactive-path reconstruction using integer add/multiply/shift only."""

    def __init__(self, config: FixedPipelineConfig, convection, rho: float,
                 h_c_reference: float):
        self.config = config
        self.convection = convection
        self.h_c_reference = h_c_reference
        self.state = FixedPipelineState()
        self._refold(rho)
        self.state.rho_q = to_fixed(rho, QFormat(11, DENSITY_FRAC_BITS))

    @classmethod
    def from_params(cls, params, inr_config, sample_interval: float,
                    rho: Optional[float] = None) -> "FixedPipeline":
        """Build from float-side ReconstructionParams / InrConfig."""
        alpha_fmt = QFormat(19, ALPHA_FRAC_BITS)
        cfg = FixedPipelineConfig(
            alpha_min_q=to_fixed(inr_config.alpha_min, alpha_fmt),
            alpha_max_q=to_fixed(inr_config.alpha_max, alpha_fmt),
            jerk_gain_q=to_fixed(inr_config.jerk_gain, alpha_fmt),
            sample_interval=sample_interval,
            tau_s=params.tau,
            t_rise_k=params.t_rise,
            gain=params.gain,
            absorptivity=params.absorptivity,
        )
        return cls(cfg, params.convection,
                   rho if rho is not None else params.convection.rho_reference,
                   params.convection.h_c_reference)

    def _refold(self, rho: float) -> None:
        """Slow path: recompute h_c and refold the derived multipliers."""
        from .convection import convective_coefficient

        cfg = self.config
        h_c = convective_coefficient(self.convection, rho)
        scale = self.h_c_reference / h_c
        coeff = cfg.gain * h_c / cfg.absorptivity   # W/m2 per K of T_sol
        self.state.out_mult_q = round(coeff * (1 << GAIN_SHIFT) / (1 << TEMP_FRAC_BITS))
        self.state.t_rise_q = to_fixed(cfg.t_rise_k * scale, QFormat(21, TEMP_FRAC_BITS))
        self.state.tau_2dt_q = round(
            (cfg.tau_s * scale) / (2.0 * cfg.sample_interval) * (1 << PROJ_FRAC_BITS)
        )

    def update_density(self, rho: float) -> bool:
        """Refold multipliers if density moved past the refresh threshold."""
        rho_q = to_fixed(rho, QFormat(11, DENSITY_FRAC_BITS))
        if self.state.rho_q != 0:
            rel = abs(rho_q - self.state.rho_q) / abs(self.state.rho_q)
            if rel <= DENSITY_REFRESH_FRACTION:
                return False
        self._refold(rho)
        self.state.rho_q = rho_q
        return True

    def step(self, t_flux_q: int, t_ref_q: int) -> Tuple[int, int]:
        """One sample; inputs are Q10 kelvin. Returns (ghi, ghi_raw) in W/m2."""
        st, cfg = self.state, self.config
        if not st.initialized:
            st.t_filt_q = t_flux_q
            st.window = [t_flux_q]
            st.initialized = True
        else:
            deviation = abs(t_flux_q - st.t_filt_q)
            alpha_q = fixed_scale(deviation, cfg.jerk_gain_q, TEMP_FRAC_BITS)
            alpha_q = min(max(alpha_q, cfg.alpha_min_q), cfg.alpha_max_q)
            st.t_filt_q = _saturate32(
                st.t_filt_q + fixed_scale(t_flux_q - st.t_filt_q, alpha_q,
                                          ALPHA_FRAC_BITS),
                st,
            )
            st.window.append(st.t_filt_q)
            if len(st.window) > 3:
                st.window.pop(0)

        if len(st.window) == 3:
            proj_q = fixed_scale(st.window[2] - st.window[0], st.tau_2dt_q,
                                 PROJ_FRAC_BITS)
        else:
            proj_q = 0

        st.delta_t_q = _saturate32(st.t_filt_q - t_ref_q, st)
        t_sol_q = _saturate32(st.delta_t_q + proj_q - st.t_rise_q, st)
        ghi_raw = fixed_scale(t_sol_q, st.out_mult_q, GAIN_SHIFT)
        ghi_raw = _saturate32(ghi_raw, st)
        ghi = min(max(ghi_raw, GHI_MIN), GHI_MAX)
        return ghi, ghi_raw


def fixed_pipeline_step(pipeline: FixedPipeline, t_flux_q: int,
                        t_ref_q: int) -> Tuple[FixedPipelineState, int]:
    """Functional wrapper matching the float pipeline's step contract."""
    ghi, _ = pipeline.step(t_flux_q, t_ref_q)
    return pipeline.state, ghi
