import math

import pytest
from hypothesis import given, strategies as st

from dtdss import psychro
from dtdss.errors import InvalidInputError, SaturationOverflowError
from dtdss.psychro import (
    PsychroSample,
    air_properties,
    mixing_ratio,
    moist_air_density,
    moist_air_density_at,
    saturation_vapor_pressure,
    specific_enthalpy,
    vapor_pressure,
)


def sample(t=288.15, rh=50.0, p=1013.25, ts=0.0):
    return PsychroSample(timestamp=ts, temperature=t, relative_humidity=rh, pressure=p)


class TestSaturationVaporPressure:
    def test_zero_celsius_exact(self):
        # Exponent is exactly zero at 0 C.
        assert saturation_vapor_pressure(273.15) == 6.112

    def test_high_precision_oracle_25c(self):
        # Frozen from a 30-digit evaluation of the Magnus fit.
        assert saturation_vapor_pressure(298.15) == pytest.approx(
            31.6742943618728, rel=1e-12)

    def test_high_precision_oracle_minus20c(self):
        assert saturation_vapor_pressure(253.15) == pytest.approx(
            1.25739987577658, rel=1e-12)

    def test_strictly_increasing(self):
        temps = [233.15 + 5 * i for i in range(19)]
        values = [saturation_vapor_pressure(t) for t in temps]
        assert all(b > a for a, b in zip(values, values[1:]))

    def test_non_finite_rejected(self):
        with pytest.raises(InvalidInputError):
            saturation_vapor_pressure(float("nan"))


class TestVaporPressure:
    def test_zero_humidity(self):
        assert vapor_pressure(300.0, 0.0) == 0.0

    def test_saturation_identity(self):
        assert vapor_pressure(298.15, 100.0) == saturation_vapor_pressure(298.15)

    def test_half_saturation(self):
        assert vapor_pressure(298.15, 50.0) == pytest.approx(15.8371471809364, rel=1e-12)

    @pytest.mark.parametrize("rh", [-0.1, 100.1, float("inf")])
    def test_rh_out_of_range(self, rh):
        with pytest.raises(InvalidInputError):
            vapor_pressure(298.15, rh)


class TestMoistAirDensity:
    def test_sea_level_dry_standard(self):
        assert moist_air_density(sample(t=288.15, rh=0.0, p=1013.25)) == pytest.approx(
            1.225, abs=1e-3)

    def test_altitude_600hpa_dry(self):
        assert moist_air_density(sample(t=290.0, rh=0.0, p=600.0)) == pytest.approx(
            0.72, abs=0.05)

    def test_humid_less_dense_than_dry(self):
        humid = moist_air_density(sample(t=303.15, rh=100.0, p=1013.25))
        dry = moist_air_density(sample(t=303.15, rh=0.0, p=1013.25))
        assert humid < dry

    @given(t=st.floats(240.0, 350.0), p=st.floats(300.0, 1100.0))
    def test_dry_reduction_exact(self, t, p):
        assert moist_air_density_at(p, t, 0.0) == (p * 100.0) / (psychro.R_DRY * t)

    @given(p=st.floats(300.0, 1100.0), rh=st.floats(0.0, 100.0),
           t=st.floats(250.0, 320.0))
    def test_decreasing_in_temperature(self, p, rh, t):
        assert moist_air_density_at(p, t, rh) > moist_air_density_at(p, t + 5.0, rh)

    @given(p=st.floats(500.0, 1100.0), t=st.floats(250.0, 320.0),
           rh=st.floats(0.0, 90.0))
    def test_decreasing_in_humidity(self, p, t, rh):
        assert moist_air_density_at(p, t, rh) > moist_air_density_at(p, t, rh + 10.0)


class TestMixingRatio:
    def test_dry_air(self):
        assert mixing_ratio(0.0, 1013.25) == 0.0

    def test_arithmetic_oracles(self):
        assert mixing_ratio(15.83, 1013.25) == pytest.approx(0.00987172906098, rel=1e-10)
        assert mixing_ratio(31.67, 600.0) == pytest.approx(0.03466074287826, rel=1e-10)

    def test_saturation_overflow(self):
        with pytest.raises(SaturationOverflowError):
            mixing_ratio(601.0, 600.0)


class TestSpecificEnthalpy:
    def test_reference_state(self):
        assert specific_enthalpy(0.0, 0.0) == 0.0

    def test_arithmetic_oracle(self):
        assert specific_enthalpy(25.0, 0.00987) == pytest.approx(50.293825, rel=1e-12)

    def test_more_humid_air_carries_more_energy(self):
        x70 = mixing_ratio(vapor_pressure(298.15, 70.0), 1013.25)
        x50 = mixing_ratio(vapor_pressure(298.15, 50.0), 1013.25)
        assert specific_enthalpy(25.0, x70) > specific_enthalpy(25.0, x50)

    def test_decomposition_identity(self):
        # h(t, x) - h(t, 0) = x (2501 + 1.86 t) exactly
        for t, x in [(25.0, 0.01), (-10.0, 0.002), (40.0, 0.03)]:
            assert specific_enthalpy(t, x) - specific_enthalpy(t, 0.0) == pytest.approx(
                x * (2501.0 + 1.86 * t), rel=1e-14)

    def test_negative_mixing_ratio_rejected(self):
        with pytest.raises(InvalidInputError):
            specific_enthalpy(25.0, -1e-9)


class TestAirProperties:
    @given(t=st.floats(240.0, 320.0), rh=st.floats(0.0, 100.0),
           p=st.floats(500.0, 1100.0))
    def test_dalton_closure(self, t, rh, p):
        props = air_properties(sample(t=t, rh=rh, p=p))
        assert props.dry_partial_pressure + props.vapor_pressure == pytest.approx(
            p, rel=1e-9)

    def test_vapor_below_saturation(self):
        props = air_properties(sample(rh=73.0))
        assert props.vapor_pressure <= props.saturation_vapor_pressure
        assert props.moist_density > 0
        assert props.mixing_ratio >= 0


class TestEnvelope:
    def test_in_envelope(self):
        assert sample().in_envelope()

    @pytest.mark.parametrize("kwargs", [
        {"t": 360.0}, {"t": 190.0}, {"p": 250.0}, {"p": 1200.0}, {"rh": 101.0},
    ])
    def test_out_of_envelope_flagged_not_fatal(self, kwargs):
        s = sample(**kwargs)
        assert not s.in_envelope()

    def test_non_finite_field_rejected(self):
        with pytest.raises(InvalidInputError):
            sample(t=float("nan"))
