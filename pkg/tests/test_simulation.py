"""Tests for trajectory sampling and synthetic traces."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from src.markov.generator import (
    ChargeState,
    Distribution,
    exit_rates,
    steady_state,
    unidirectional_cycle,
)
from src.simulation.telegraph import Channel, LevelTruth, synthesize_trace
from src.simulation.trajectory import (
    JumpRecord,
    crop_record,
    sample_ensemble,
    sample_piecewise_trajectory,
    sample_trajectory,
    slice_jump_record,
)

ZERO, R, L = ChargeState.ZERO, ChargeState.R, ChargeState.L

LEVELS = LevelTruth(level_values={ZERO: 0.0, R: 1.0, L: 2.0})


def _four_second_record() -> JumpRecord:
    return JumpRecord(states=np.array([0, 2, 1, 0]), times=np.array([1.0, 2.0, 3.0]), duration=4.0)


class TestJumpRecord:
    def test_consecutive_states_must_differ(self):
        with pytest.raises(ValueError):
            JumpRecord(states=np.array([0, 0]), times=np.array([1.0]), duration=2.0)

    def test_times_within_duration(self):
        with pytest.raises(ValueError):
            JumpRecord(states=np.array([0, 2]), times=np.array([3.0]), duration=2.0)

    def test_state_at_applies_jump_at_its_time(self):
        rec = JumpRecord(states=np.array([0, 2, 1]), times=np.array([1.0, 3.0]), duration=5.0)
        assert_array_equal(rec.state_at(np.array([0.0, 0.999, 1.0, 2.5, 4.0])), [0, 0, 2, 2, 1])

    def test_visit_counts(self):
        rec = _four_second_record()
        assert_array_equal(rec.visit_counts(3), [2, 1, 1])


class TestSampleTrajectory:
    def test_same_seed_same_record(self, biased):
        p0 = steady_state(biased)
        a = sample_trajectory(biased, p0, 50.0, seed=7)
        b = sample_trajectory(biased, p0, 50.0, seed=7)
        assert_array_equal(a.states, b.states)
        assert_array_equal(a.times, b.times)

    def test_index_selects_independent_stream(self, biased):
        p0 = steady_state(biased)
        a = sample_trajectory(biased, p0, 50.0, seed=7, index=0)
        b = sample_trajectory(biased, p0, 50.0, seed=7, index=1)
        assert a.n_jumps != b.n_jumps or not np.array_equal(a.times, b.times)

    def test_ensemble_matches_individual_draws(self, biased):
        p0 = steady_state(biased)
        records = sample_ensemble(biased, p0, 20.0, seed=3, count=3)
        assert_array_equal(records[2].times, sample_trajectory(biased, p0, 20.0, 3, index=2).times)

    def test_unidirectional_cycle_order(self, unidirectional):
        rec = sample_trajectory(unidirectional, Distribution.point(3, ZERO), 20.0, seed=1)
        expected = np.array([ZERO, L, R])[np.arange(rec.states.size) % 3]
        assert_array_equal(rec.states, expected)

    def test_jump_times_inside_record(self, biased):
        rec = sample_trajectory(biased, steady_state(biased), 30.0, seed=11)
        assert rec.times[0] > 0
        assert rec.times[-1] <= 30.0
        assert np.all(np.diff(rec.times) > 0)

    def test_mean_waiting_time(self, symmetric):
        rec = sample_trajectory(symmetric, steady_state(symmetric), 5000.0, seed=5)
        dwells = np.diff(rec.times)
        # exponential with rate 2 Hz: standard error of the mean is mean / sqrt(n)
        mean = dwells.mean()
        assert abs(mean - 0.5) < 4 * 0.5 / math.sqrt(dwells.size)

    def test_occupation_matches_steady_state(self, biased):
        rec = sample_trajectory(biased, steady_state(biased), 1800.0, seed=21)
        occupation = np.diff(np.concatenate([[0.0], rec.times, [rec.duration]]))
        fractions = np.bincount(rec.states, weights=occupation, minlength=3) / rec.duration
        assert_allclose(fractions, steady_state(biased).probabilities, atol=0.01)

    def test_jump_count_scales_with_duration(self):
        g = unidirectional_cycle(40.0)
        rec = sample_trajectory(g, steady_state(g), 1800.0, seed=2)
        expected = 40.0 * 1800.0
        assert abs(rec.n_jumps - expected) < 5 * math.sqrt(expected)


class TestPiecewise:
    def test_rate_change_shows_in_jump_density(self):
        slow, fast = unidirectional_cycle(5.0), unidirectional_cycle(50.0)
        segments = [(slow, 400.0), (fast, 400.0)]
        rec = sample_piecewise_trajectory(segments, Distribution.uniform(3), seed=4)
        assert rec.duration == 800.0
        first = np.count_nonzero(rec.times <= 400.0)
        second = rec.n_jumps - first
        assert abs(first - 2000) < 5 * math.sqrt(2000)
        assert abs(second - 20000) < 5 * math.sqrt(20000)

    def test_segments_continue_from_last_state(self, biased):
        rec = sample_piecewise_trajectory(
            [(biased, 10.0), (biased, 10.0)], steady_state(biased), seed=9
        )
        assert np.all(rec.states[1:] != rec.states[:-1])


class TestSlicing:
    def test_slices_partition_the_record(self, biased):
        rec = sample_trajectory(biased, steady_state(biased), 100.0, seed=13)
        parts = slice_jump_record(rec, 10)
        assert len(parts) == 10
        assert_allclose([p.duration for p in parts], 10.0)
        assert sum(p.n_jumps for p in parts) == rec.n_jumps

    def test_crop_starts_in_occupied_state(self):
        rec = _four_second_record()
        part = crop_record(rec, 1.5, 3.5)
        assert_array_equal(part.states, [2, 1, 0])
        assert_allclose(part.times, [0.5, 1.5])
        assert part.duration == 2.0

    def test_single_slice_rejected(self, biased):
        rec = sample_trajectory(biased, steady_state(biased), 10.0, seed=1)
        with pytest.raises(ValueError):
            slice_jump_record(rec, 1)


class TestSynthesizeTrace:
    def test_noiseless_trace_sits_on_levels(self, biased):
        rec = sample_trajectory(biased, steady_state(biased), 20.0, seed=8)
        trace = synthesize_trace(rec, LEVELS, dt=0.005, seed=8)
        expected = np.array([0.0, 1.0, 2.0])[rec.state_at(np.arange(len(trace)) * 0.005)]
        assert_array_equal(trace.samples, expected)

    def test_sample_count(self, biased):
        rec = sample_trajectory(biased, steady_state(biased), 1800.0, seed=8)
        trace = synthesize_trace(rec, LEVELS, dt=0.005, seed=8)
        assert len(trace) == 360000
        assert trace.channel is Channel.DC

    def test_noise_width(self, biased):
        rec = sample_trajectory(biased, steady_state(biased), 300.0, seed=4)
        truth = LevelTruth(level_values=LEVELS.level_values, noise_sigma=0.1)
        trace = synthesize_trace(rec, truth, dt=0.005, seed=4)
        clean = np.array([0.0, 1.0, 2.0])[rec.state_at(trace.times)]
        assert abs(np.std(trace.samples - clean) - 0.1) < 0.002

    def test_levels_must_be_distinct(self):
        with pytest.raises(ValueError):
            LevelTruth(level_values={ZERO: 0.0, R: 0.0, L: 1.0})

    def test_noise_is_reproducible(self, biased):
        rec = sample_trajectory(biased, steady_state(biased), 10.0, seed=4)
        truth = LevelTruth(level_values=LEVELS.level_values, noise_sigma=0.1)
        a = synthesize_trace(rec, truth, dt=0.01, seed=4)
        b = synthesize_trace(rec, truth, dt=0.01, seed=4)
        assert_array_equal(a.samples, b.samples)


def test_exit_rates_of_fixture(biased):
    assert np.all(exit_rates(biased) > 20.0)
