"""Auto-calibration fits (tau, T_rise, gain) and validation metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Mapping, Sequence, Tuple

import numpy as np

from .errors import (
    InsufficientSettlingError,
    InsufficientSignalError,
    InvalidInputError,
    MetricError,
    NoSignalError,
    NoStepError,
)

# One time constant is the 1 - 1/e point of the step decay.
DECAY_FRACTION = 1.0 - math.exp(-1.0)

# Amplitude the peak must sit above the apparent peak to count as a decay;
# absorbs sensor noise when locating the cooling onset on the plateau.
ONSET_TOLERANCE_K = 0.02
MIN_DECAY_K = 1.0

DAYLIGHT_THRESHOLD_WM2 = 50.0
MAPE_MIN_REFERENCE_WM2 = 20.0


@dataclass(frozen=True)
class TriseTable:
    """Self-heating offset per sampling rate (Hz -> kelvin)."""

    entries: Dict[float, float]

    def __post_init__(self):
        if not self.entries:
            raise InvalidInputError("TriseTable needs at least one entry")
        for rate, t_rise in self.entries.items():
            if not 0.0 <= t_rise <= 5.0:
                raise InvalidInputError(
                    f"t_rise {t_rise} K at {rate} Hz outside [0, 5] K"
                )


@dataclass(frozen=True)
class MapeResult:
    value: float        # percent
    n_used: int
    n_excluded: int


def estimate_tau(timestamps: Sequence[float], temperatures: Sequence[float],
                 onset_tolerance: float = ONSET_TOLERANCE_K) -> float:
    """Thermal time constant from a step-response cooling decay, seconds.

    The cooling onset is the last sample still within ``onset_tolerance``
    of the global maximum; the crossing of the 63.2% drop toward the final
    level (mean of the trailing 10%) is located by linear interpolation.
    """
    t = np.asarray(timestamps, dtype=float)
    temp = np.asarray(temperatures, dtype=float)
    if t.size < 30:
        raise InvalidInputError("step-response series needs >= 30 samples")
    if np.any(np.diff(t) <= 0):
        raise InvalidInputError("timestamps must be strictly increasing")

    t_peak = float(temp.max())
    t_final = float(temp[-max(1, t.size // 10):].mean())
    drop = t_peak - t_final
    if np.argmax(temp) >= t.size - 2 or drop <= 0:
        raise NoStepError("no cooling decay after the temperature peak")
    if drop < MIN_DECAY_K:
        raise InsufficientSignalError(f"decay amplitude {drop:.3f} K < 1 K")

    near_peak = np.flatnonzero(temp >= t_peak - onset_tolerance)
    onset_idx = int(near_peak[-1])
    onset_time = float(t[onset_idx])

    target = t_peak - DECAY_FRACTION * drop
    below = np.flatnonzero(temp[onset_idx:] <= target)
    if below.size == 0:
        raise NoStepError("decay never crosses the 63.2% level")
    j = onset_idx + int(below[0])
    if j == onset_idx:
        return 0.0
    # Linear interpolation between the straddling samples.
    f = (temp[j - 1] - target) / (temp[j - 1] - temp[j])
    crossing = t[j - 1] + f * (t[j] - t[j - 1])
    return float(crossing - onset_time)


def estimate_trise(
    dark_series: Mapping[float, Tuple[Sequence[float], Sequence[float], Sequence[float]]],
    tau: float,
) -> TriseTable:
    """Dark self-heating table from settled dual-node runs.

    ``dark_series`` maps sampling rate (Hz) to (timestamps, t_flux, t_ref);
    each run must span at least five time constants of settling.
    """
    entries = {}
    for rate, (timestamps, t_flux, t_ref) in dark_series.items():
        t = np.asarray(timestamps, dtype=float)
        span = t[-1] - t[0]
        if span < 5.0 * tau:
            raise InsufficientSettlingError(
                f"dark run at {rate} Hz spans {span:.0f} s < 5 tau ({5 * tau:.0f} s)"
            )
        flux = np.asarray(t_flux, dtype=float)
        ref = np.asarray(t_ref, dtype=float)
        tail = max(1, t.size // 5)
        entries[rate] = float((flux[-tail:] - ref[-tail:]).mean())
    return TriseTable(entries)


def fit_gain(estimates: Sequence[float], references: Sequence[float],
             daylight_threshold: float = DAYLIGHT_THRESHOLD_WM2) -> float:
    """Through-origin least-squares slope of reference on estimate.

    Uses daylight samples only (reference above the threshold); the
    homogeneous reconstruction law pins the intercept at zero.
    """
    est = np.asarray(estimates, dtype=float)
    ref = np.asarray(references, dtype=float)
    if est.size != ref.size or est.size < 100:
        raise InvalidInputError("need equal-length series of >= 100 samples")
    mask = ref > daylight_threshold
    if not mask.any():
        raise NoSignalError("no daylight samples above threshold")
    est, ref = est[mask], ref[mask]
    denom = float(np.dot(est, est))
    if denom == 0.0:
        raise NoSignalError("estimates are identically zero in daylight")
    return float(np.dot(ref, est) / denom)


def mape(references: Sequence[float], estimates: Sequence[float],
         min_reference: float = MAPE_MIN_REFERENCE_WM2) -> MapeResult:
    """Mean absolute percentage error over usable reference samples.

    References below ``min_reference`` are excluded (division blow-up near
    sunrise/sunset) and counted in the result.
    """
    ref = np.asarray(references, dtype=float)
    est = np.asarray(estimates, dtype=float)
    if ref.size != est.size:
        raise InvalidInputError("series length mismatch")
    mask = np.abs(ref) >= min_reference
    n_excluded = int((~mask).sum())
    if not mask.any():
        raise MetricError("all reference samples below the usable floor")
    value = float(100.0 * np.mean(np.abs((ref[mask] - est[mask]) / ref[mask])))
    return MapeResult(value=value, n_used=int(mask.sum()), n_excluded=n_excluded)


def rmse(references: Sequence[float], estimates: Sequence[float]) -> float:
    """Root mean squared difference."""
    ref = np.asarray(references, dtype=float)
    est = np.asarray(estimates, dtype=float)
    if ref.size != est.size:
        raise InvalidInputError("series length mismatch")
    if ref.size == 0:
        raise MetricError("empty input")
    return float(np.sqrt(np.mean((ref - est) ** 2)))


def r_squared(references: Sequence[float], estimates: Sequence[float]) -> float:
    """Coefficient of determination of the linear regression of ref on est."""
    ref = np.asarray(references, dtype=float)
    est = np.asarray(estimates, dtype=float)
    if ref.size != est.size or ref.size < 3:
        raise InvalidInputError("need equal-length series of >= 3 samples")
    ss_tot = float(np.sum((ref - ref.mean()) ** 2))
    if ss_tot == 0.0 or np.var(est) == 0.0:
        raise MetricError("zero variance input")
    slope, intercept = np.polyfit(est, ref, 1)
    ss_res = float(np.sum((ref - (slope * est + intercept)) ** 2))
    return 1.0 - ss_res / ss_tot
