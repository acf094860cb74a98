import math

import pytest
from hypothesis import given, settings, strategies as st

from dtdss.errors import InsufficientHistoryError, InvalidInputError, OrderingError
from dtdss.inr import (
    CENTRAL_DIFFERENCE,
    SAVITZKY_GOLAY,
    InrConfig,
    InrState,
    adaptive_alpha,
    central_difference,
    inr_step,
    savgol_derivative,
)

DEFAULT = InrConfig()


def run_series(config, samples):
    """Feed (timestamp, temp) pairs through a fresh filter; return outputs."""
    state = InrState()
    outputs = []
    for ts, temp in samples:
        state, out = inr_step(state, config, temp, ts)
        outputs.append(out)
    return outputs


class TestAdaptiveAlpha:
    def test_quiet_signal_hits_floor(self):
        assert adaptive_alpha(0.0, DEFAULT) == DEFAULT.alpha_min

    def test_fast_edge_hits_ceiling(self):
        assert adaptive_alpha(10.0, DEFAULT) == DEFAULT.alpha_max

    def test_linear_in_between(self):
        assert adaptive_alpha(0.5, DEFAULT) == pytest.approx(0.2)

    @given(deviation=st.floats(0.0, 100.0))
    def test_always_within_bounds(self, deviation):
        alpha = adaptive_alpha(deviation, DEFAULT)
        assert DEFAULT.alpha_min <= alpha <= DEFAULT.alpha_max

    def test_negative_deviation_rejected(self):
        with pytest.raises(InvalidInputError):
            adaptive_alpha(-0.1, DEFAULT)


class TestConfigValidation:
    def test_alpha_order_enforced(self):
        with pytest.raises(InvalidInputError):
            InrConfig(alpha_min=0.6, alpha_max=0.5)

    def test_even_sg_window_rejected(self):
        with pytest.raises(InvalidInputError):
            InrConfig(derivative_mode=SAVITZKY_GOLAY, sg_window=6)

    def test_unknown_mode_rejected(self):
        with pytest.raises(InvalidInputError):
            InrConfig(derivative_mode="kalman")


class TestCentralDifference:
    def test_exact_on_linear_ramp(self):
        window = [(0.0, 10.0), (1.0, 12.0), (2.0, 14.0)]
        assert central_difference(window, 1.0) == 2.0

    def test_exact_on_quadratic_at_center(self):
        # Central difference is exact for quadratics at the middle node.
        f = lambda t: 0.5 * t * t + 2.0 * t + 1.0
        window = [(t, f(t)) for t in (3.0, 4.0, 5.0)]
        assert central_difference(window, 1.0) == pytest.approx(4.0 + 2.0, rel=1e-12)

    def test_jittered_spacing_falls_back_to_divided_differences(self):
        f = lambda t: 0.5 * t * t
        window = [(0.0, f(0.0)), (1.3, f(1.3)), (2.0, f(2.0))]
        # Divided differences reproduce the quadratic's derivative at t=1.3.
        assert central_difference(window, 1.0) == pytest.approx(1.3, rel=1e-12)

    def test_short_history_rejected(self):
        with pytest.raises(InsufficientHistoryError):
            central_difference([(0.0, 1.0), (1.0, 2.0)], 1.0)


class TestSavgolDerivative:
    def test_exact_on_quadratic(self):
        f = lambda t: 0.5 * t * t + 2.0 * t + 1.0
        window = [(t, f(t)) for t in range(7)]
        # Degree-2 fit reproduces the quadratic; derivative at center t=3 is 5.
        assert savgol_derivative(window, 1.0, 2) == pytest.approx(5.0, rel=1e-10)

    def test_slow_sine_near_analytic(self):
        window = [(float(t), math.sin(0.1 * t)) for t in range(-3, 4)]
        deriv = savgol_derivative(window, 1.0, 2)
        # Analytic derivative at the window center is 0.1 * cos(0) = 0.1;
        # the least-squares fit lands within about 1.2e-3 of it.
        assert deriv == pytest.approx(0.1, abs=1.3e-3)

    def test_jittered_spacing_polynomial_fit(self):
        f = lambda t: 0.5 * t * t + 2.0 * t
        times = [0.0, 1.0, 2.4, 3.0, 4.0, 5.1, 6.0]
        window = [(t, f(t)) for t in times]
        assert savgol_derivative(window, 1.0, 2) == pytest.approx(3.0 + 2.0, rel=1e-9)

    def test_partial_window_rejected(self):
        with pytest.raises(InsufficientHistoryError):
            savgol_derivative([(0.0, 1.0)] * 4, 1.0, 2)


class TestInrStep:
    def test_first_sample_initializes(self):
        outputs = run_series(DEFAULT, [(0.0, 300.0)])
        out = outputs[0]
        assert out.filtered_temp == 300.0
        assert out.derivative == 0.0
        assert out.projected_temp == 300.0

    def test_projection_identity_exact(self):
        samples = [(float(i), 300.0 + 0.3 * i + 0.05 * math.sin(i)) for i in range(40)]
        for out in run_series(DEFAULT, samples):
            assert out.projected_temp == out.filtered_temp + DEFAULT.tau * out.derivative

    def test_steady_ramp_derivative_recovered(self):
        # On a long ramp the EMA settles to a constant lag; the central
        # difference of the filtered signal then equals the true slope.
        slope = 0.02
        samples = [(float(i), 300.0 + slope * i) for i in range(400)]
        out = run_series(DEFAULT, samples)[-1]
        assert out.derivative == pytest.approx(slope, rel=1e-6)

    def test_spike_attenuated_by_alpha_max(self):
        samples = [(float(i), 300.0) for i in range(20)]
        samples.append((20.0, 300.3))
        out = run_series(DEFAULT, samples)[-1]
        assert abs(out.filtered_temp - 300.0) <= DEFAULT.alpha_max * 0.3 + 1e-12

    def test_noise_variance_reduced(self):
        import numpy as np
        rng = np.random.default_rng(7)
        noise = rng.normal(0.0, 0.05, size=5000)
        samples = [(float(i), 300.0 + n) for i, n in enumerate(noise)]
        filtered = np.array([o.filtered_temp for o in run_series(DEFAULT, samples)])
        assert np.var(filtered[100:] - 300.0) < np.var(noise[100:]) / 5.0

    @given(temps=st.lists(st.floats(280.0, 320.0), min_size=2, max_size=50))
    @settings(max_examples=50)
    def test_filtered_bounded_by_input_range(self, temps):
        samples = [(float(i), t) for i, t in enumerate(temps)]
        lo, hi = min(temps), max(temps)
        for out in run_series(DEFAULT, samples):
            assert lo - 1e-9 <= out.filtered_temp <= hi + 1e-9

    def test_non_monotonic_timestamp_rejected(self):
        state = InrState()
        state, _ = inr_step(state, DEFAULT, 300.0, 0.0)
        state, _ = inr_step(state, DEFAULT, 300.0, 1.0)
        with pytest.raises(OrderingError):
            inr_step(state, DEFAULT, 300.0, 1.0)

    def test_non_finite_input_rejected(self):
        with pytest.raises(InvalidInputError):
            inr_step(InrState(), DEFAULT, float("nan"), 0.0)

    def test_savgol_mode_runs_after_window_fills(self):
        config = InrConfig(derivative_mode=SAVITZKY_GOLAY, sg_window=7, sg_degree=2)
        samples = [(float(i), 300.0 + 0.1 * i) for i in range(20)]
        out = run_series(config, samples)[-1]
        assert out.derivative == pytest.approx(0.1, rel=1e-2)
