"""Inertial Noise Reduction: adaptive EMA, robust differentiation, projection.

The filter raises its smoothing inertia when the signal is quiet and drops
it on fast edges (alpha proportional to the instantaneous deviation). The
projected temperature adds tau * dT/dt to the filtered value, modeling a
virtual zero-thermal-mass sensor that anticipates where the slow physical
sensor is heading.

Derivatives use the trailing window ending at the current sample, so the
central-difference estimate is centered one step behind real time; the
pipeline accepts that one sample of latency rather than extrapolating.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Deque, Sequence, Tuple

import numpy as np
from scipy.signal import savgol_coeffs

from .errors import InsufficientHistoryError, InvalidInputError, OrderingError

CENTRAL_DIFFERENCE = "central_difference"
SAVITZKY_GOLAY = "savitzky_golay"

# Relative spacing jitter above which windows are treated as non-uniform.
UNIFORM_TOLERANCE = 0.1


@dataclass(frozen=True)
class InrConfig:
    """Filter tuning.

    alpha bounds are the EMA smoothing limits; jerk_gain (1/K) maps the
    per-sample deviation to alpha; tau (s) is the thermal time constant used
    for the inertial projection.
    """

    alpha_min: float = 0.05
    alpha_max: float = 0.5
    jerk_gain: float = 0.4
    tau: float = 30.0
    derivative_mode: str = CENTRAL_DIFFERENCE
    sg_window: int = 7
    sg_degree: int = 2

    def __post_init__(self):
        if not 0 < self.alpha_min <= self.alpha_max <= 1:
            raise InvalidInputError("require 0 < alpha_min <= alpha_max <= 1")
        if self.tau <= 0:
            raise InvalidInputError("tau must be > 0")
        if self.derivative_mode not in (CENTRAL_DIFFERENCE, SAVITZKY_GOLAY):
            raise InvalidInputError(f"unknown derivative mode {self.derivative_mode!r}")
        if self.derivative_mode == SAVITZKY_GOLAY:
            if self.sg_window < 5 or self.sg_window % 2 == 0:
                raise InvalidInputError("sg_window must be odd and >= 5")
            if self.sg_degree not in (2, 3) or self.sg_window <= self.sg_degree:
                raise InvalidInputError("sg_degree must be 2 or 3 and < sg_window")

    @property
    def window_size(self) -> int:
        return self.sg_window if self.derivative_mode == SAVITZKY_GOLAY else 3


@dataclass
class InrState:
    """Retained per-stream filter state; steps must be strictly sequential."""

    filtered_temp: float = 0.0
    window: Deque[Tuple[float, float]] = field(default_factory=deque)
    initialized: bool = False


@dataclass(frozen=True)
class InrOutput:
    filtered_temp: float       # K
    derivative: float          # K/s, centered one sample behind
    projected_temp: float      # K, filtered + tau * derivative
    alpha_used: float


def adaptive_alpha(deviation: float, config: InrConfig) -> float:
    """clamp(jerk_gain * deviation, alpha_min, alpha_max)."""
    if deviation < 0:
        raise InvalidInputError("deviation must be >= 0")
    return min(max(config.jerk_gain * deviation, config.alpha_min), config.alpha_max)


@lru_cache(maxsize=32)
def _sg_deriv_coeffs(window: int, degree: int, dt: float) -> np.ndarray:
    return savgol_coeffs(window, degree, deriv=1, delta=dt, use="dot")


def _is_uniform(times: Sequence[float]) -> bool:
    gaps = np.diff(times)
    mean = gaps.mean()
    return bool(np.all(np.abs(gaps - mean) <= UNIFORM_TOLERANCE * mean))


def _three_point_derivative(t: Sequence[float], f: Sequence[float]) -> float:
    """Derivative at the middle node of three non-uniform samples."""
    t0, t1, t2 = t
    f0, f1, f2 = f
    return (
        f0 * (t1 - t2) / ((t0 - t1) * (t0 - t2))
        + f1 * (2 * t1 - t0 - t2) / ((t1 - t0) * (t1 - t2))
        + f2 * (t1 - t0) / ((t2 - t0) * (t2 - t1))
    )


def central_difference(window: Sequence[Tuple[float, float]], dt: float) -> float:
    """(T[n+1] - T[n-1]) / (2 dt) over the last three samples of ``window``.

    Falls back to divided differences when the spacing jitters by more
    than 10%.
    """
    if len(window) < 3:
        raise InsufficientHistoryError("central difference needs 3 samples")
    (t0, f0), (t1, f1), (t2, f2) = window[-3], window[-2], window[-1]
    if _is_uniform((t0, t1, t2)):
        return (f2 - f0) / (2.0 * dt)
    return _three_point_derivative((t0, t1, t2), (f0, f1, f2))


def savgol_derivative(window: Sequence[Tuple[float, float]], dt: float,
                      degree: int) -> float:
    """First derivative at the window center of a least-squares poly fit."""
    n = len(window)
    if n < 5 or n % 2 == 0:
        raise InsufficientHistoryError("Savitzky-Golay window not full")
    times = np.array([t for t, _ in window])
    temps = np.array([f for _, f in window])
    if _is_uniform(times):
        coeffs = _sg_deriv_coeffs(n, degree, dt)
        return float(np.dot(coeffs, temps))
    # Jittered spacing: fit the polynomial on the actual timestamps.
    center = times[n // 2]
    poly = np.polynomial.Polynomial.fit(times - center, temps, degree)
    return float(poly.deriv()(0.0))


def inr_step(state: InrState, config: InrConfig, raw_temp: float,
             timestamp: float) -> Tuple[InrState, InrOutput]:
    """Advance the filter by one sample; mutates and returns ``state``.

    First call initializes the filter at the raw value with zero derivative.
    """
    if not (math.isfinite(raw_temp) and math.isfinite(timestamp)):
        raise InvalidInputError("non-finite temperature or timestamp")

    if not state.initialized:
        state.filtered_temp = raw_temp
        state.window = deque(maxlen=max(3, config.window_size))
        state.window.append((timestamp, raw_temp))
        state.initialized = True
        out = InrOutput(raw_temp, 0.0, raw_temp, config.alpha_min)
        return state, out

    last_ts = state.window[-1][0]
    if timestamp <= last_ts:
        raise OrderingError(f"timestamp {timestamp} not after {last_ts}")
    dt = timestamp - last_ts

    deviation = abs(raw_temp - state.filtered_temp)
    alpha = adaptive_alpha(deviation, config)
    state.filtered_temp = state.filtered_temp + alpha * (raw_temp - state.filtered_temp)
    state.window.append((timestamp, state.filtered_temp))

    if config.derivative_mode == SAVITZKY_GOLAY and len(state.window) == config.sg_window:
        derivative = savgol_derivative(state.window, dt, config.sg_degree)
    elif len(state.window) >= 3:
        derivative = central_difference(state.window, dt)
    else:
        derivative = 0.0

    projected = state.filtered_temp + config.tau * derivative
    out = InrOutput(state.filtered_temp, derivative, projected, alpha)
    return state, out
