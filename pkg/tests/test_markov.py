"""Tests for generators and their stationary properties."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.errors import AbsorbingState, NegativeRate, Reducible
from src.markov.generator import (
    ChargeState,
    Distribution,
    biased_cycle_generator,
    cycle_affinity,
    exit_rates,
    is_irreducible,
    steady_state,
    unidirectional_cycle,
    validate_generator,
)

ZERO, R, L = ChargeState.ZERO, ChargeState.R, ChargeState.L


class TestValidateGenerator:
    def test_diagonal_is_rebuilt_from_off_diagonals(self):
        g = validate_generator([[99.0, 1.0, 1.0], [1.0, -5.0, 1.0], [1.0, 1.0, 0.0]])
        assert_allclose(np.diag(g.rates), [-2.0, -2.0, -2.0])
        assert_allclose(g.rates.sum(axis=0), 0.0, atol=1e-15)

    def test_negative_rate(self):
        with pytest.raises(NegativeRate):
            validate_generator([[0.0, -0.1, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 0.0]])

    def test_zero_column_is_absorbing(self):
        with pytest.raises(AbsorbingState):
            validate_generator([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0]])

    @pytest.mark.parametrize("raw", [[[0.0]], [[0.0, 1.0, 2.0], [1.0, 0.0, 1.0]]])
    def test_shape(self, raw):
        with pytest.raises(ValueError):
            validate_generator(raw)

    def test_result_is_read_only(self, symmetric):
        with pytest.raises(ValueError):
            symmetric.rates[0, 1] = 5.0


class TestSteadyState:
    def test_symmetric(self, symmetric):
        assert_allclose(steady_state(symmetric).probabilities, np.full(3, 1 / 3), rtol=1e-12)

    def test_unidirectional_cycle(self, unidirectional):
        assert_allclose(steady_state(unidirectional).probabilities, np.full(3, 1 / 3), rtol=1e-12)

    def test_detailed_balance_chain(self):
        raw = np.zeros((3, 3))
        raw[L, ZERO], raw[ZERO, L] = 2.0, 1.0
        raw[R, L], raw[L, R] = 3.0, 1.0
        raw[R, ZERO], raw[ZERO, R] = 6.0, 1.0
        p = steady_state(validate_generator(raw)).probabilities
        assert_allclose(p, np.array([1.0, 6.0, 2.0]) / 9.0, rtol=1e-10)

    def test_matches_null_space(self, random_generators):
        for g in random_generators[:20]:
            p = steady_state(g).probabilities
            assert_allclose(g.rates @ p, 0.0, atol=1e-10)
            assert math.isclose(p.sum(), 1.0, rel_tol=1e-12)

    def test_reducible(self):
        raw = np.zeros((3, 3))
        raw[1, 0] = raw[0, 1] = 1.0
        raw[0, 2] = 1.0  # state 2 drains into 0 and is never re-entered
        g = validate_generator(raw)
        assert not is_irreducible(g)
        with pytest.raises(Reducible):
            steady_state(g)


class TestExitRates:
    def test_symmetric(self):
        g = validate_generator(np.full((3, 3), 4.0))
        assert_allclose(exit_rates(g), [8.0, 8.0, 8.0])

    def test_unidirectional(self):
        assert_allclose(exit_rates(unidirectional_cycle(7.0)), [7.0, 7.0, 7.0])

    def test_sum_out_of_zero(self):
        raw = np.ones((3, 3))
        raw[R, ZERO], raw[L, ZERO] = 10.0, 30.0
        assert exit_rates(validate_generator(raw))[ZERO] == 40.0


class TestCycle:
    @pytest.mark.parametrize("sigma", [0.0, 1.5, 10.0])
    def test_biased_cycle_affinity(self, sigma):
        g = biased_cycle_generator(20.0, sigma, state_scale=(1.0, 2.0, 0.5))
        assert math.isclose(cycle_affinity(g), sigma, abs_tol=1e-12)

    def test_unidirectional_affinity_is_infinite(self, unidirectional):
        assert cycle_affinity(unidirectional) == math.inf

    def test_scaled_preserves_steady_state(self, biased):
        assert_allclose(
            steady_state(biased.scaled(3.0)).probabilities,
            steady_state(biased).probabilities,
            rtol=1e-10,
        )


class TestLabels:
    @pytest.mark.parametrize("state", list(ChargeState))
    def test_round_trip(self, state):
        assert ChargeState.from_label(state.label) is state

    def test_zero_label(self):
        assert ChargeState.ZERO.label == "0"


def test_distribution_rejects_bad_vectors():
    with pytest.raises(ValueError):
        Distribution(np.array([0.5, 0.6, -0.1]))
    with pytest.raises(ValueError):
        Distribution(np.array([0.5, 0.4, 0.0]))
    assert_allclose(Distribution.point(3, 2).probabilities, [0.0, 0.0, 1.0])
