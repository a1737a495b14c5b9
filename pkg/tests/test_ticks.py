"""Tests for jump extraction, tick counting and the time estimators."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from src.errors import EmptyTrace, ZeroRate
from src.identification.classifier import StateSequence
from src.markov.generator import ChargeState, exit_rates, steady_state
from src.simulation.trajectory import JumpRecord, sample_trajectory
from src.theory.fcs import net_current
from src.ticks.counting import (
    count_net_transfers,
    extract_jumps,
    record_to_sequence,
    transition_counts,
)
from src.ticks.estimators import (
    Calibration,
    CalibrationSource,
    EstimatorKind,
    calibrate,
    evaluate,
    theta_net,
    theta_opt,
    truth_calibration,
)

ZERO, R, L = ChargeState.ZERO, ChargeState.R, ChargeState.L


def record(states: list[int], duration: float | None = None) -> JumpRecord:
    times = np.arange(1, len(states), dtype=float)
    return JumpRecord(
        states=np.array(states),
        times=times,
        duration=duration if duration is not None else float(len(states)),
    )


class TestExtractJumps:
    def test_jump_at_first_sample_of_run(self):
        seq = StateSequence(states=np.array([0, 0, 2, 2, 1]), dt=0.1)
        rec = extract_jumps(seq)
        assert_array_equal(rec.states, [ZERO, L, R])
        assert_allclose(rec.times, [0.2, 0.4])
        assert rec.duration == pytest.approx(0.5)

    def test_constant_sequence_has_no_jumps(self):
        rec = extract_jumps(StateSequence(states=np.full(10, 1), dt=0.1))
        assert rec.n_jumps == 0
        assert_array_equal(rec.states, [1])

    def test_empty_sequence(self):
        with pytest.raises(EmptyTrace):
            extract_jumps(StateSequence(states=np.array([], dtype=int), dt=0.1))

    def test_sampling_then_extraction_recovers_states(self, biased):
        rec = sample_trajectory(biased, steady_state(biased), 2.0, seed=3)
        seq = record_to_sequence(rec, dt=1e-6)
        recovered = extract_jumps(seq)
        # dwells shorter than one sample are lost
        assert abs(recovered.n_jumps - rec.n_jumps) <= 2


class TestCounting:
    def test_forward_excursion(self):
        assert count_net_transfers(record([ZERO, L, R, ZERO])).net == 1

    def test_backward_excursion(self):
        count = count_net_transfers(record([ZERO, R, L, ZERO]))
        assert (count.forward, count.backward, count.net) == (0, 1, -1)

    def test_returning_excursions_carry_no_charge(self):
        count = count_net_transfers(record([ZERO, L, ZERO, R, ZERO, L, R, L, ZERO]))
        assert count.net == 0
        assert count.excursions == 3

    def test_wandering_forward_excursion(self):
        assert count_net_transfers(record([ZERO, L, R, L, R, ZERO])).forward == 1

    def test_partial_excursions_are_ignored(self):
        count = count_net_transfers(record([L, R, ZERO, L, R, ZERO, L]))
        assert count.forward == 1
        assert count.excursions == 1

    def test_no_return_to_zero_is_incomplete(self):
        count = count_net_transfers(record([L, R, L, R]))
        assert count.incomplete
        assert count.net == 0

    def test_net_matches_charge_through_right_barrier(self, biased):
        rec = sample_trajectory(biased, steady_state(biased), 300.0, seed=12)
        counts = transition_counts(rec)
        through_barrier = counts[ZERO, R] - counts[R, ZERO]
        assert abs(count_net_transfers(rec).net - through_barrier) <= 1

    def test_transition_counts(self):
        counts = transition_counts(record([ZERO, L, R, ZERO, L]))
        assert counts[L, ZERO] == 2
        assert counts[R, L] == 1
        assert counts[ZERO, R] == 1
        assert counts.sum() == 4


class TestEstimators:
    def test_theta_opt_counts_every_visit(self):
        cal = Calibration(nu=1.0, gamma=np.array([1.0, 2.0, 4.0]))
        rec = record([ZERO, L, R, ZERO])
        assert theta_opt(rec, cal) == pytest.approx(2.0 + 0.5 + 0.25)

    def test_theta_net(self):
        cal = Calibration(nu=0.5, gamma=np.ones(3))
        assert theta_net(record([ZERO, L, R, ZERO]), cal) == pytest.approx(2.0)

    def test_theta_net_at_equilibrium(self):
        cal = Calibration(nu=0.0, gamma=np.ones(3))
        with pytest.raises(ZeroRate):
            theta_net(record([ZERO, L, R, ZERO]), cal)

    def test_evaluate_dispatches(self):
        cal = Calibration(nu=0.5, gamma=np.ones(3))
        rec = record([ZERO, L, R, ZERO])
        assert evaluate(rec, cal, EstimatorKind.NET) == theta_net(rec, cal)
        assert evaluate(rec, cal, "opt") == theta_opt(rec, cal)

    def test_nu_within_its_error_is_unresolved(self):
        assert Calibration(nu=0.5, gamma=np.ones(3), nu_std_error=0.1).nu_resolved
        assert not Calibration(nu=-0.05, gamma=np.ones(3), nu_std_error=0.1).nu_resolved
        assert not Calibration(nu=0.0, gamma=np.ones(3)).nu_resolved
        with pytest.raises(ValueError):
            Calibration(nu=0.5, gamma=np.ones(3), nu_std_error=-1.0)

    def test_calibration_rejects_zero_exit_rate(self):
        with pytest.raises(ValueError):
            Calibration(nu=1.0, gamma=np.array([1.0, 0.0, 1.0]))

    def test_opt_estimator_tracks_time(self, unidirectional):
        rec = sample_trajectory(unidirectional, steady_state(unidirectional), 600.0, seed=6)
        theta = theta_opt(rec, truth_calibration(unidirectional))
        # Poisson clock at 30 Hz: one visit per 1/30 s
        assert abs(theta - 600.0) < 5 * math.sqrt(600.0 / 30.0)


class TestCalibration:
    def test_self_calibration_recovers_generator(self, biased):
        rec = sample_trajectory(biased, steady_state(biased), 1800.0, seed=19)
        cal = calibrate(rec)
        assert cal.source is CalibrationSource.FITTED
        assert cal.nu == pytest.approx(net_current(biased), rel=0.05)
        assert_allclose(cal.gamma, exit_rates(biased), rtol=0.03)

    def test_pooled_records(self, biased):
        p0 = steady_state(biased)
        records = [sample_trajectory(biased, p0, 300.0, seed=2, index=k) for k in range(4)]
        cal = calibrate(records)
        assert cal.nu == pytest.approx(net_current(biased), rel=0.05)

    def test_equilibrium_calibration_has_small_rate(self, equilibrium):
        rec = sample_trajectory(equilibrium, steady_state(equilibrium), 600.0, seed=8)
        cal = calibrate(rec)
        assert abs(cal.nu) < 0.5
        assert abs(cal.nu) < 3 * cal.nu_std_error

    def test_driven_rate_is_resolved(self, biased):
        rec = sample_trajectory(biased, steady_state(biased), 600.0, seed=8)
        cal = calibrate(rec)
        assert cal.nu_resolved
        assert abs(cal.nu - net_current(biased)) < 3 * cal.nu_std_error

    def test_truth_calibration(self, biased):
        cal = truth_calibration(biased)
        assert cal.source is CalibrationSource.TRUTH
        assert cal.nu_std_error == 0.0
        assert cal.nu == pytest.approx(net_current(biased))


class TestSymmetries:
    def test_swapping_left_and_right_reverses_the_count(self, biased):
        rec = sample_trajectory(biased, steady_state(biased), 120.0, seed=14)
        swap = np.array([ZERO, L, R])
        mirrored = JumpRecord(states=swap[rec.states], times=rec.times, duration=rec.duration)
        count, flipped = count_net_transfers(rec), count_net_transfers(mirrored)
        assert count.net != 0
        assert (flipped.forward, flipped.backward) == (count.backward, count.forward)
        assert flipped.net == -count.net
        assert flipped.excursions == count.excursions

    def test_theta_opt_ignores_time_reversal(self, biased):
        rec = sample_trajectory(biased, steady_state(biased), 120.0, seed=15)
        assert rec.times[-1] < rec.duration
        reversed_rec = JumpRecord(
            states=rec.states[::-1],
            times=rec.duration - rec.times[::-1],
            duration=rec.duration,
        )
        cal = truth_calibration(biased)
        assert theta_opt(reversed_rec, cal) == pytest.approx(theta_opt(rec, cal), rel=1e-12)
