"""Tests for counting statistics, precision bounds and error propagation."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.errors import ConvergenceFailure, ZeroRate
from src.markov.generator import ChargeState, cycle_affinity, steady_state, validate_generator
from src.theory.bounds import (
    check_tur,
    fano_factor,
    optimal_precision,
    renewal_moments,
    tur_bound,
)
from src.theory.fcs import (
    CountingWeights,
    asymptotic_moments,
    dominant_eigenvalue,
    finite_difference_moments,
    net_current,
    net_weights,
    opt_weights,
    tilted_generator,
)
from src.theory.propagation import (
    precision_error_propagation,
    precision_gradient,
    theoretical_precision,
)

ZERO, R, L = ChargeState.ZERO, ChargeState.R, ChargeState.L


class TestNetCurrent:
    def test_unidirectional_cycle(self, unidirectional):
        assert net_current(unidirectional) == pytest.approx(10.0)

    def test_equilibrium(self, equilibrium):
        assert net_current(equilibrium) == pytest.approx(0.0, abs=1e-12)

    def test_net_weights_at_equilibrium(self, equilibrium):
        with pytest.raises(ZeroRate):
            net_weights(equilibrium)


class TestCountingWeights:
    def test_diagonal_is_cleared(self):
        w = CountingWeights(np.full((3, 3), 2.0))
        assert_allclose(np.diag(w.weights), 0.0)

    def test_all_zero_rejected(self):
        with pytest.raises(ValueError):
            CountingWeights(np.eye(3))

    def test_opt_weights_depend_on_source(self, biased):
        w = opt_weights(biased).weights
        assert w[L, ZERO] == w[R, ZERO]
        assert w[L, ZERO] != w[ZERO, L]


class TestAsymptoticMoments:
    def test_unidirectional_net(self, unidirectional):
        moments = asymptotic_moments(unidirectional, net_weights(unidirectional))
        assert moments.drift == pytest.approx(1.0)
        assert moments.precision == pytest.approx(30.0, rel=1e-10)

    def test_unidirectional_opt(self, unidirectional):
        moments = asymptotic_moments(unidirectional, opt_weights(unidirectional))
        assert moments.drift == pytest.approx(1.0)
        assert moments.precision == pytest.approx(30.0, rel=1e-10)

    def test_tick_count_diffusion(self, unidirectional):
        nu = net_current(unidirectional)
        moments = asymptotic_moments(unidirectional, net_weights(unidirectional))
        # D of the raw count: Erlang-3 renewal clock gives N_inf = 3
        count_diffusion = nu**2 * moments.diffusion
        assert renewal_moments(nu, count_diffusion).n_inf == pytest.approx(3.0, rel=1e-10)

    def test_estimators_are_unbiased(self, random_generators):
        for g in random_generators:
            assert asymptotic_moments(g, opt_weights(g)).drift == pytest.approx(1.0)
            assert asymptotic_moments(g, net_weights(g)).drift == pytest.approx(1.0)

    def test_opt_is_best(self, random_generators):
        for g in random_generators:
            s_opt = asymptotic_moments(g, opt_weights(g)).precision
            s_net = asymptotic_moments(g, net_weights(g)).precision
            assert s_net <= s_opt * (1 + 1e-9)
            assert s_opt == pytest.approx(optimal_precision(g), rel=1e-9)

    def test_matches_finite_differences(self, random_generators):
        for g in random_generators[:20]:
            for w in (opt_weights(g), net_weights(g)):
                exact = asymptotic_moments(g, w)
                numeric = finite_difference_moments(g, w)
                assert numeric.drift == pytest.approx(exact.drift, rel=1e-6)
                assert numeric.diffusion == pytest.approx(exact.diffusion, rel=1e-4)

    def test_equilibrium_current_has_no_drift(self, equilibrium):
        moments = asymptotic_moments(equilibrium, net_weights(equilibrium, nu=1.0))
        assert moments.drift == pytest.approx(0.0, abs=1e-10)
        assert moments.precision == pytest.approx(0.0, abs=1e-10)
        assert moments.diffusion > 0

    def test_scaling_rates_scales_precision(self, biased):
        base = asymptotic_moments(biased, opt_weights(biased)).precision
        faster = biased.scaled(4.0)
        assert asymptotic_moments(faster, opt_weights(faster)).precision == pytest.approx(
            4.0 * base, rel=1e-9
        )


class TestEigenvalue:
    def test_zero_tilt_gives_zero(self, biased):
        lam = dominant_eigenvalue(tilted_generator(biased, opt_weights(biased), 0.0))
        assert lam == pytest.approx(0.0, abs=1e-10)

    @pytest.mark.parametrize("s", [-2.0, -0.1, 0.05, 0.3, 1.0, 2.5])
    def test_unidirectional_tick_count_closed_form(self, unidirectional, s):
        w = np.zeros((3, 3))
        w[ZERO, R] = 1.0
        tilted = tilted_generator(unidirectional, CountingWeights(w), s)
        assert dominant_eigenvalue(tilted) == pytest.approx(30.0 * math.expm1(s / 3.0), rel=1e-10)

    @pytest.mark.parametrize("s", [-1.0, 0.5, 3.0])
    def test_unidirectional_net_estimator_closed_form(self, unidirectional, s):
        tilted = tilted_generator(unidirectional, net_weights(unidirectional), s)
        assert dominant_eigenvalue(tilted) == pytest.approx(30.0 * math.expm1(s / 30.0), rel=1e-10)

    def test_diagonal_matrix(self):
        assert dominant_eigenvalue(np.diag([-1.0, -2.0, -3.0])) == pytest.approx(-1.0, rel=1e-12)

    def test_non_finite_matrix(self):
        with pytest.raises(ConvergenceFailure):
            dominant_eigenvalue(np.array([[np.inf, 0.0], [0.0, 1.0]]))


class TestBounds:
    def test_optimal_precision_symmetric(self, symmetric):
        assert optimal_precision(symmetric) == pytest.approx(2.0)

    def test_tur_holds_for_net_estimator(self, random_generators):
        for g in random_generators:
            nu = net_current(g)
            if abs(nu) < 1e-6:
                continue
            s_net = asymptotic_moments(g, net_weights(g)).precision
            bound = tur_bound(g, sigma_tick=abs(cycle_affinity(g)))
            assert s_net <= bound * (1 + 1e-9)

    def test_tur_bound_of_biased_cycle(self, biased):
        assert tur_bound(biased) == pytest.approx(net_current(biased) * 3.0 / 2.0)
        assert cycle_affinity(biased) == pytest.approx(3.0)

    def test_unidirectional_bound_is_infinite(self, unidirectional):
        assert tur_bound(unidirectional) == math.inf

    def test_equilibrium_bound_is_zero(self, equilibrium):
        assert tur_bound(equilibrium) == 0.0

    def test_negative_entropy_rejected(self, biased):
        with pytest.raises(ValueError):
            tur_bound(biased, sigma_tick=-1.0)

    def test_check_tur_within_error(self):
        assert check_tur(10.0, 10.5, std_error_hz=0.2).satisfied
        assert not check_tur(10.0, 11.0, std_error_hz=0.2).satisfied

    def test_non_antisymmetric_estimator(self):
        check = check_tur(10.0, 30.0, antisymmetric=False)
        assert not check.satisfied
        assert not check.applicable


class TestRenewal:
    def test_moments(self):
        moments = renewal_moments(2.0, 0.5)
        assert moments.mean_s == 0.5
        assert moments.variance_s2 == pytest.approx(0.5 / 8.0)
        assert moments.fano == pytest.approx(4.0)

    def test_noiseless_clock(self):
        assert renewal_moments(2.0, 0.0).n_inf_infinite

    def test_zero_rate(self):
        with pytest.raises(ZeroRate):
            renewal_moments(0.0, 1.0)

    def test_fano_factor(self):
        assert fano_factor(30.0, 10.0) == pytest.approx(3.0)
        with pytest.raises(ZeroRate):
            fano_factor(1.0, 0.0)


class TestPropagation:
    def test_symmetric_gradient(self, symmetric):
        gradient = precision_gradient(symmetric, "opt")
        mask = ~np.eye(3, dtype=bool)
        assert_allclose(gradient[mask], 1.0 / 3.0, rtol=1e-5)

    def test_error_is_linear_in_rate_errors(self, symmetric):
        errors = np.full((3, 3), 0.1)
        sigma = precision_error_propagation(symmetric, errors, "opt")
        assert sigma == pytest.approx(math.sqrt(6) * 0.1 / 3.0, rel=1e-5)
        assert precision_error_propagation(symmetric, 2 * errors, "opt") == pytest.approx(
            2 * sigma, rel=1e-6
        )

    def test_no_errors_no_spread(self, biased):
        assert precision_error_propagation(biased, np.zeros((3, 3))) == 0.0

    def test_unknown_estimator(self, biased):
        with pytest.raises(ValueError):
            theoretical_precision(biased, "median")

    def test_zero_rate_uses_forward_difference(self, unidirectional):
        gradient = precision_gradient(unidirectional, "opt")
        assert np.all(np.isfinite(gradient))

    def test_net_precision_of_detailed_chain(self):
        raw = np.zeros((3, 3))
        raw[L, ZERO], raw[R, L], raw[ZERO, R] = 40.0, 40.0, 40.0
        raw[ZERO, L], raw[L, R], raw[R, ZERO] = 5.0, 5.0, 5.0
        g = validate_generator(raw)
        assert steady_state(g).probabilities == pytest.approx(np.full(3, 1 / 3))
        assert theoretical_precision(g, "net") < theoretical_precision(g, "opt")
