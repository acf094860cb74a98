import pytest
from hypothesis import given, strategies as st

from dtdss.convection import ConvectionModel
from dtdss.errors import FixedRangeError, InvalidInputError
from dtdss.fixedpoint import (
    FixedPipeline,
    QFormat,
    fixed_scale,
    to_fixed,
    to_real,
)
from dtdss.flux import ReconstructionParams, Site
from dtdss.inr import InrConfig

CONVECTION = ConvectionModel(h_c_reference=2000.0 / 3.0, rho_reference=1.225,
                             wind_reference=1.0, wind_floor=0.5)
TEMP_FMT = QFormat(21, 10)


def make_pipeline(**param_overrides):
    defaults = dict(convection=CONVECTION, site=Site(0.0, 0.0),
                    absorptivity=0.9, tau=30.0, t_rise=1.0, gain=1.0)
    defaults.update(param_overrides)
    params = ReconstructionParams(**defaults)
    return FixedPipeline.from_params(params, InrConfig(), sample_interval=10.0)


class TestQFormat:
    def test_scale_and_bounds(self):
        fmt = QFormat(3, 2)
        assert fmt.scale == 4
        assert fmt.max_value == 31
        assert fmt.min_value == -32

    def test_must_fit_32_bits(self):
        with pytest.raises(InvalidInputError):
            QFormat(22, 10)  # 22 + 10 + sign = 33


class TestToFixed:
    def test_round_to_nearest_half_up(self):
        fmt = QFormat(3, 2)
        assert to_fixed(0.125, fmt) == 1    # exactly half an ulp rounds up
        assert to_fixed(-0.125, fmt) == 0
        assert to_fixed(0.124, fmt) == 0

    def test_overflow_raises(self):
        with pytest.raises(FixedRangeError):
            to_fixed(8.0, QFormat(3, 2))
        with pytest.raises(FixedRangeError):
            to_fixed(-8.5, QFormat(3, 2))

    def test_non_finite_rejected(self):
        with pytest.raises(InvalidInputError):
            to_fixed(float("nan"), TEMP_FMT)

    @given(value=st.floats(-1000.0, 1000.0))
    def test_roundtrip_within_half_ulp(self, value):
        raw = to_fixed(value, TEMP_FMT)
        assert abs(to_real(raw, TEMP_FMT) - value) <= 0.5 / TEMP_FMT.scale


class TestFixedScale:
    def test_rounds_half_up(self):
        assert fixed_scale(3, 5, 2) == 4      # 3.75 -> 4
        assert fixed_scale(2, 3, 2) == 2      # 1.5  -> 2
        assert fixed_scale(1, 1, 2) == 0      # 0.25 -> 0

    def test_negative_values(self):
        assert fixed_scale(-3, 5, 2) == -4    # -3.75 -> -4

    def test_zero_shift_is_plain_product(self):
        assert fixed_scale(7, 9, 0) == 63

    def test_double_width_guard(self):
        with pytest.raises(FixedRangeError):
            fixed_scale(1 << 40, 1 << 40, 10)


class TestFixedPipeline:
    def test_settled_reconstruction_matches_float_formula(self):
        pipeline = make_pipeline()
        flux_q = to_fixed(292.35, TEMP_FMT)
        ref_q = to_fixed(290.0, TEMP_FMT)
        ghi = ghi_raw = 0
        for _ in range(10):
            ghi, ghi_raw = pipeline.step(flux_q, ref_q)
        # Float path: gain * h_c / alpha * (2.35 - 1.0) = 1000 W/m2.
        assert ghi == pytest.approx(1000.0, abs=2.0)
        assert ghi == ghi_raw

    def test_output_clamped(self):
        pipeline = make_pipeline()
        ghi, ghi_raw = pipeline.step(to_fixed(310.0, TEMP_FMT),
                                     to_fixed(290.0, TEMP_FMT))
        # 20 K differential decodes far above the ceiling.
        assert ghi == 1400 and ghi_raw > 1400

    def test_dark_negative_excess_clamps_to_zero(self):
        pipeline = make_pipeline()
        ghi, ghi_raw = pipeline.step(to_fixed(290.0, TEMP_FMT),
                                     to_fixed(290.0, TEMP_FMT))
        assert ghi == 0 and ghi_raw < 0

    def test_bit_identical_reruns(self):
        inputs = [(to_fixed(290.0 + 0.01 * i, TEMP_FMT),
                   to_fixed(289.0 + 0.005 * i, TEMP_FMT)) for i in range(200)]
        a, b = make_pipeline(), make_pipeline()
        out_a = [a.step(f, r) for f, r in inputs]
        out_b = [b.step(f, r) for f, r in inputs]
        assert out_a == out_b
        assert a.state.serialize() == b.state.serialize()

    def test_integer_state_only(self):
        pipeline = make_pipeline()
        pipeline.step(to_fixed(292.0, TEMP_FMT), to_fixed(290.0, TEMP_FMT))
        st_ = pipeline.state
        for value in (st_.t_filt_q, st_.out_mult_q, st_.rho_q, st_.t_rise_q,
                      st_.tau_2dt_q, st_.delta_t_q, *st_.window):
            assert isinstance(value, int)


class TestDensityRefresh:
    def test_small_move_skips_refold(self):
        pipeline = make_pipeline()
        assert pipeline.update_density(1.225 * 1.001) is False

    def test_large_move_refolds(self):
        pipeline = make_pipeline()
        before = pipeline.state.out_mult_q
        assert pipeline.update_density(0.9) is True
        assert pipeline.state.out_mult_q != before

    def test_refold_rescales_self_heating(self):
        pipeline = make_pipeline()
        t_rise_before = pipeline.state.t_rise_q
        pipeline.update_density(0.72)
        # Lower density -> lower h_c -> larger effective offset.
        assert pipeline.state.t_rise_q > t_rise_before


class TestSerialization:
    def test_reactive_block_is_18_bytes(self):
        assert len(make_pipeline().state.serialize_reactive()) == 18

    def test_shared_block_is_14_bytes(self):
        assert len(make_pipeline().state.serialize_shared()) == 14

    def test_single_sensor_total_within_budget(self):
        assert len(make_pipeline().state.serialize()) == 32 <= 60

    def test_serialization_reflects_state(self):
        a, b = make_pipeline(), make_pipeline()
        b.step(to_fixed(292.0, TEMP_FMT), to_fixed(290.0, TEMP_FMT))
        assert a.state.serialize() != b.state.serialize()
