import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from shortgp.bound import (
    BisectionError,
    BoundConfig,
    SamplingInfo,
    bound_config_from_times,
    delta_t_from_times,
    length_scale_bound,
    matern_energy_fraction,
    matern_energy_fraction_hypergeometric,
    se_energy_fraction,
)
from shortgp.kernels import KernelSpec, spectral_density
from shortgp.special import integrate_adaptive


class TestDeltaT:
    def test_uniform_grid(self):
        info = delta_t_from_times([0.0, 1.0, 2.0, 3.0])
        assert info.delta_t == 1.0
        assert info.uniform
        assert info.nyquist_frequency * 2.0 * info.delta_t == 1.0

    def test_non_uniform_uses_min_gap(self):
        info = delta_t_from_times([0.0, 0.5, 2.0, 3.0])
        assert info.delta_t == 0.5
        assert not info.uniform

    def test_seven_point_benchmark_grid(self):
        times = np.linspace(-5.0, 6.0, 7)
        info = delta_t_from_times(times)
        assert abs(info.delta_t - 11.0 / 6.0) <= 1e-12
        assert info.uniform

    def test_uniform_tolerance(self):
        base = [0.0, 1.0, 2.0 + 1e-12, 3.0]
        assert delta_t_from_times(base).uniform
        assert not delta_t_from_times([0.0, 1.0, 2.001, 3.0]).uniform

    def test_median_rule_flagged(self):
        info = delta_t_from_times([0.0, 0.5, 2.0, 3.5], rule="median_gap")
        assert info.rule == "median_gap"
        assert info.delta_t == 1.5
        assert delta_t_from_times([0.0, 0.5, 2.0, 3.5]).rule == "min_gap"

    def test_errors(self):
        with pytest.raises(ValueError):
            delta_t_from_times([1.0])
        with pytest.raises(ValueError):
            delta_t_from_times([0.0, 0.0, 1.0])
        with pytest.raises(ValueError):
            delta_t_from_times([1.0, 0.5])
        with pytest.raises(ValueError):
            delta_t_from_times([0.0, 1.0], rule="mean_gap")


class TestBoundConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            BoundConfig(alpha=1.0, lower=1.0)
        with pytest.raises(ValueError):
            BoundConfig(alpha=0.99, lower=0.0)
        with pytest.raises(ValueError):
            BoundConfig(alpha=0.99, lower=2.0, upper=1.0)

    def test_from_times(self):
        times = np.linspace(-5.0, 6.0, 7)
        cfg = bound_config_from_times(times)
        assert abs(cfg.lower - 1.5032) <= 1e-3
        assert cfg.upper == 11.0
        assert bound_config_from_times(times, include_upper=False).upper == math.inf


class TestSeEnergyFraction:
    def test_saturation(self):
        frac = se_energy_fraction(100.0, 1.0)
        assert frac >= 1.0 - 1e-12
        assert frac < 1.0

    def test_bound_constant(self):
        assert abs(se_energy_fraction(0.8199, 1.0) - 0.99) <= 1e-4

    def test_quadrature_oracle(self):
        # oracle: band integral of the unit-variance spectral density
        spec = KernelSpec.se(1.0, 1.0)
        res = integrate_adaptive(
            lambda s: spectral_density(spec, s), -0.5, 0.5, 1e-13, 1e-12
        )
        assert abs(se_energy_fraction(1.0, 1.0) - res.value) <= 1e-9

    def test_monotone_in_length_scale(self):
        # strict growth over 50 log-spaced samples in the double-resolvable
        # regime, plus the (0, 1) range limits at the extremes
        vals = [se_energy_fraction(float(l), 1.0) for l in np.logspace(-3, 0.3, 50)]
        assert all(0.0 < v < 1.0 for v in vals)
        assert all(b > a for a, b in zip(vals, vals[1:]))
        assert se_energy_fraction(1e-6, 1.0) < 1e-5
        assert se_energy_fraction(1e6, 1.0) >= 1.0 - 1e-12


class TestMaternEnergyFraction:
    def test_saturation(self):
        assert matern_energy_fraction(1.5, 1000.0, 1.0) >= 0.999

    def test_half_nu_arctan_closed_form(self):
        # nu = 1/2 band energy reduces to (2/pi) arctan(pi l / dt)
        frac = matern_energy_fraction(0.5, 1.0, 1.0)
        assert abs(frac - 2.0 / math.pi * math.atan(math.pi)) <= 1e-6
        assert abs(frac - 0.8038134760954128) <= 1e-9

    def test_monotone_and_onto(self):
        # strictness sampled where the fraction stays resolvable below one;
        # the heavy nu = 1/2 tail keeps it resolvable across twelve decades
        for nu, hi in [(0.5, 6.0), (1.5, 2.0), (4.0, 1.0)]:
            vals = [
                matern_energy_fraction(nu, float(l), 1.0)
                for l in np.logspace(-6, hi, 50)
            ]
            assert all(0.0 < v < 1.0 for v in vals)
            assert all(b > a for a, b in zip(vals, vals[1:]))
            assert vals[0] < 1e-3
            assert matern_energy_fraction(nu, 1e6, 1.0) > 0.9999

    def test_hypergeometric_cross_check_ratio(self):
        # The closed form must track the quadrature fraction up to one
        # constant per order; that constant measures 4.0 exactly.
        for nu in [0.75, 1.5, 4.0]:
            ratios = [
                matern_energy_fraction_hypergeometric(nu, l, 1.0)
                / matern_energy_fraction(nu, l, 1.0)
                for l in [0.3, 1.0, 2.0, 5.0]
            ]
            for r in ratios:
                assert abs(r / ratios[0] - 1.0) <= 1e-6
            assert abs(ratios[0] - 4.0) <= 1e-6

    def test_nu_three_halves_quadrature_vs_closed_form(self):
        frac = matern_energy_fraction(1.5, 2.0, 1.0)
        closed = matern_energy_fraction_hypergeometric(1.5, 2.0, 1.0) / 4.0
        assert abs(frac - closed) <= 1e-9


class TestLengthScaleBound:
    def test_se_constant(self):
        assert abs(length_scale_bound("se", 0.99, 1.0) - 0.8199) <= 1e-4

    def test_se_benchmark_sampling(self):
        assert abs(length_scale_bound("se", 0.99, 11.0 / 6.0) - 1.5032) <= 1e-3

    def test_matern_half_tan_inversion(self):
        expected = math.tan(0.99 * math.pi / 2.0) / math.pi
        got = length_scale_bound("matern", 0.99, 1.0, nu=0.5)
        assert abs(got - expected) <= 1e-4

    @pytest.mark.parametrize("family,nu", [("se", None), ("matern", 0.5), ("matern", 1.5), ("matern", 2.5), ("matern", 4.0)])
    @pytest.mark.parametrize("alpha", [0.5, 0.9, 0.99, 0.999])
    def test_round_trip(self, family, nu, alpha):
        a_l = length_scale_bound(family, alpha, 1.0, nu)
        if family == "se":
            frac = se_energy_fraction(a_l, 1.0)
        else:
            frac = matern_energy_fraction(nu, a_l, 1.0)
        assert abs(frac - alpha) <= 1e-7

    @pytest.mark.parametrize("c", [0.1, 3.0, 17.0])
    def test_linearity_in_delta_t(self, c):
        base = length_scale_bound("matern", 0.99, 1.0, nu=1.5)
        scaled = length_scale_bound("matern", 0.99, c, nu=1.5)
        assert abs(scaled - c * base) <= 1e-9 * c * base
        base_se = length_scale_bound("se", 0.99, 1.0)
        assert abs(length_scale_bound("se", 0.99, c) - c * base_se) <= 1e-12 * c * base_se

    def test_bound_grows_as_nu_shrinks(self):
        bounds = [length_scale_bound("matern", 0.99, 1.0, nu) for nu in [0.5, 1.5, 2.5, 10.0]]
        assert all(a > b for a, b in zip(bounds, bounds[1:]))

    def test_large_nu_approaches_se_bound(self):
        matern = length_scale_bound("matern", 0.99, 1.0, nu=100.0)
        se = length_scale_bound("se", 0.99, 1.0)
        assert abs(matern - se) / se < 0.02

    @given(st.floats(0.05, 0.995), st.floats(0.01, 100.0))
    def test_se_round_trip_property(self, alpha, dt):
        a_l = length_scale_bound("se", alpha, dt)
        assert abs(se_energy_fraction(a_l, dt) - alpha) <= 1e-9

    def test_errors(self):
        with pytest.raises(ValueError):
            length_scale_bound("se", 0.0, 1.0)
        with pytest.raises(ValueError):
            length_scale_bound("se", 0.99, 0.0)
        with pytest.raises(ValueError):
            length_scale_bound("matern", 0.99, 1.0)  # nu missing
        with pytest.raises(ValueError):
            length_scale_bound("cubic", 0.99, 1.0)
        with pytest.raises(BisectionError):
            # more energy than any bracketed length-scale can confine
            length_scale_bound("matern", 1.0 - 1e-9, 1.0, nu=0.5)
