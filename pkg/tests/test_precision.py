"""Tests for sliced precision estimates."""

import math

import numpy as np
import pytest

from src.errors import TooShort
from src.identification.classifier import StateSequence
from src.markov.generator import biased_cycle_generator, steady_state
from src.precision.stats import (
    PrecisionEstimate,
    SliceEnsemble,
    build_ensemble,
    calibration_uncertainty,
    empirical_precision,
    mean_std_error,
    slice_record,
    variance_std_error,
)
from src.simulation.trajectory import sample_trajectory, slice_jump_record
from src.theory.bounds import optimal_precision, tur_bound
from src.theory.propagation import theoretical_precision
from src.ticks.counting import count_net_transfers
from src.ticks.estimators import EstimatorKind, truth_calibration


class TestEmpiricalPrecision:
    def test_closed_form(self):
        ens = SliceEnsemble(estimates=np.array([9.0, 11.0, 10.0, 10.0]), horizon=10.0)
        prec = empirical_precision(ens)
        variance = 2.0 / 3.0
        assert prec.mean == 10.0
        assert prec.variance == pytest.approx(variance)
        assert prec.precision == pytest.approx(100.0 / (10.0 * variance))
        expected = (prec.precision / 2.0) * math.sqrt(4 * variance / 100.0 + 2 * 4 / 3)
        assert prec.std_error == pytest.approx(expected)

    def test_zero_variance_is_infinite(self):
        prec = empirical_precision(SliceEnsemble(estimates=np.full(5, 3.0), horizon=1.0))
        assert prec.infinite
        assert prec.precision == math.inf

    def test_zero_mean_gives_finite_error(self):
        ens = SliceEnsemble(estimates=np.array([-1.0, 1.0, -1.0, 1.0]), horizon=2.0)
        prec = empirical_precision(ens)
        assert prec.precision == 0.0
        assert math.isfinite(prec.std_error)

    def test_single_slice_rejected(self):
        with pytest.raises(ValueError):
            SliceEnsemble(estimates=np.array([1.0]), horizon=1.0)

    def test_moment_errors(self):
        ens = SliceEnsemble(estimates=np.array([1.0, 2.0, 3.0]), horizon=1.0)
        assert mean_std_error(ens) == pytest.approx(math.sqrt(1.0 / 3.0))
        assert variance_std_error(ens) == pytest.approx(1.0)


class TestSlicing:
    def test_remainder_is_dropped(self):
        seq = StateSequence(states=np.arange(10) % 3, dt=0.5)
        slices = slice_record(seq, 3)
        assert [len(s) for s in slices] == [3, 3, 3]
        assert slices[2].states.tolist() == [0, 1, 2]

    def test_too_short(self):
        with pytest.raises(TooShort):
            slice_record(StateSequence(states=np.zeros(4, dtype=int), dt=0.1), 5)

    def test_authority_is_inherited(self):
        seq = StateSequence(states=np.zeros(6, dtype=int), dt=0.1, authoritative=False)
        assert not any(s.authoritative for s in slice_record(seq, 2))


class TestClockPrecision:
    @pytest.mark.parametrize("kind", [EstimatorKind.NET, EstimatorKind.OPT])
    def test_unidirectional_clock_reaches_its_rate(self, unidirectional, kind):
        rec = sample_trajectory(unidirectional, steady_state(unidirectional), 1800.0, seed=31)
        ens = build_ensemble(slice_jump_record(rec, 300), kind, truth_calibration(unidirectional))
        prec = empirical_precision(ens)
        assert ens.horizon == pytest.approx(6.0)
        assert abs(prec.precision - 30.0) < 3 * prec.std_error

    def test_sequence_slices_match_record_slices(self, biased):
        rec = sample_trajectory(biased, steady_state(biased), 60.0, seed=5)
        dt = 1e-3
        seq = StateSequence(states=rec.state_at(np.arange(60000) * dt), dt=dt)
        ens = build_ensemble(slice_record(seq, 10), "opt", truth_calibration(biased))
        assert ens.size == 10
        assert ens.horizon == pytest.approx(6.0)
        assert np.all(ens.estimates > 0)

    @pytest.mark.slow
    def test_empirical_opt_precision_agrees_with_theory(self, biased):
        expected = theoretical_precision(biased, "opt")
        cal = truth_calibration(biased)
        p0 = steady_state(biased)
        agree = 0
        for k in range(20):
            rec = sample_trajectory(biased, p0, 600.0, seed=40, index=k)
            prec = empirical_precision(build_ensemble(slice_jump_record(rec, 100), "opt", cal))
            agree += abs(prec.precision - expected) < 3 * prec.std_error
        assert agree >= 19

    @pytest.mark.slow
    @pytest.mark.parametrize("kind", [EstimatorKind.NET, EstimatorKind.OPT])
    def test_repeated_long_records_agree_with_theory(self, kind):
        """Half-hour records of a clock with every rate between 20 and 60 Hz."""
        g = biased_cycle_generator(35.0, 2.0, state_scale=(1.0, 1.2, 0.9))
        off = g.off_diagonal()[g.off_diagonal() > 0]
        assert off.min() >= 20.0 and off.max() <= 60.0
        expected = theoretical_precision(g, kind.value)
        cal = truth_calibration(g)
        p0 = steady_state(g)
        agree = 0
        for k in range(20):
            rec = sample_trajectory(g, p0, 1800.0, seed=41, index=k)
            prec = empirical_precision(build_ensemble(slice_jump_record(rec, 300), kind, cal))
            agree += abs(prec.precision - expected) < 3 * prec.std_error
        assert agree >= 19


@pytest.mark.slow
class TestTrajectoryBounds:
    @pytest.mark.parametrize("bias", [0.5, 1.5, 3.0, 6.0])
    def test_net_precision_respects_the_bound(self, bias):
        g = biased_cycle_generator(20.0, bias)
        rec = sample_trajectory(g, steady_state(g), 1800.0, seed=52, index=int(10 * bias))
        prec = empirical_precision(
            build_ensemble(slice_jump_record(rec, 300), EstimatorKind.NET, truth_calibration(g))
        )
        assert prec.precision <= tur_bound(g) + 3 * prec.std_error

    def test_equilibrium_clock_has_no_net_motion(self, equilibrium):
        rec = sample_trajectory(equilibrium, steady_state(equilibrium), 1800.0, seed=53)
        count = count_net_transfers(rec)
        total = count.forward + count.backward
        assert total > 0
        assert abs(count.net) / total < 3.0 / math.sqrt(total)

        ens = build_ensemble(slice_jump_record(rec, 300), "opt", truth_calibration(equilibrium))
        prec = empirical_precision(ens)
        assert abs(prec.precision - optimal_precision(equilibrium)) < 3 * prec.std_error


class TestCalibrationUncertainty:
    def _estimate(self, precision: float, infinite: bool = False) -> PrecisionEstimate:
        return PrecisionEstimate(
            mean=1.0,
            variance=1.0,
            precision=precision,
            std_error=0.0,
            slices=10,
            horizon=1.0,
            infinite=infinite,
        )

    def test_relative_variance(self):
        assert calibration_uncertainty(self._estimate(20.0), 100.0) == pytest.approx(5e-4)

    def test_perfect_clock(self):
        assert calibration_uncertainty(self._estimate(math.inf, infinite=True), 10.0) == 0.0

    def test_useless_clock(self):
        assert calibration_uncertainty(self._estimate(0.0), 10.0) == math.inf
