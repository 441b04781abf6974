import math

import numpy as np
import pytest
from scipy import stats

from binloss import (
    EnvelopeExceededError,
    OutsideSpaceError,
    build_rule,
    constant_model,
    gaussian_mixture_model,
    sample_list,
    uniform_grid,
    bin_counts,
    empirical_mean_check,
)
from binloss.errors import InputError
from binloss.model import G1_THETA
from binloss.montecarlo import list_mode_log_likelihood, read_events, write_events

CONST = constant_model()


def setup(model, m, n=4):
    s = uniform_grid(model.space, [m])
    return s, build_rule(model.space, s, n)


class TestSampleList:
    def test_uniform_events(self):
        _, r = setup(CONST, 4)
        pooled, seed = [], 0
        while sum(len(p) for p in pooled) < 10_000:
            pooled.append(sample_list(CONST, [3.7], r, seed).events[:, 0])
            seed += 1
        ev = np.concatenate(pooled)
        res = stats.kstest(ev, "uniform")
        assert res.pvalue > 0.01

    def test_mean_count(self):
        _, r = setup(CONST, 1)
        n = np.array([len(sample_list(CONST, [3.7], r, s)) for s in range(1000)])
        assert abs(n.mean() - 3.7) <= 5 * math.sqrt(3.7 / 1000)

    def test_determinism(self):
        _, r = setup(gaussian_mixture_model(), 8)
        a = sample_list(gaussian_mixture_model(), G1_THETA, r, 42)
        b = sample_list(gaussian_mixture_model(), G1_THETA, r, 42)
        np.testing.assert_array_equal(a.events, b.events)

    def test_events_inside(self):
        g = gaussian_mixture_model()
        _, r = setup(g, 8)
        ev = sample_list(g.scaled(200.0), G1_THETA, r, 1).events
        assert len(ev) > 100 and np.all((ev >= 0) & (ev <= 1))

    def test_envelope_exceeded(self):
        g = gaussian_mixture_model()
        _, r = setup(g, 1)
        with pytest.raises(EnvelopeExceededError, match="envelope exceeded"):
            for seed in range(20):
                sample_list(g.scaled(50.0), G1_THETA, r, seed)


class TestBinCounts:
    def test_empty(self):
        s = uniform_grid(CONST.space, [4])
        np.testing.assert_array_equal(bin_counts(np.empty((0, 1)), s), [0, 0, 0, 0])

    def test_single(self):
        s = uniform_grid(CONST.space, [4])
        np.testing.assert_array_equal(bin_counts(np.array([[0.3]]), s), [0, 1, 0, 0])

    def test_conservation(self):
        s, r = setup(CONST, 5)
        ev = sample_list(CONST.scaled(100.0), [3.7], r, 3)
        assert bin_counts(ev, s).sum() == len(ev)

    def test_outside(self):
        s = uniform_grid(CONST.space, [4])
        with pytest.raises(OutsideSpaceError, match="point outside attribute space"):
            bin_counts(np.array([[1.5]]), s)


class TestMeanCheck:
    def test_constant(self):
        s, r = setup(CONST, 4)
        check = empirical_mean_check(CONST, [3.7], s, r, 200, seed=1)
        assert check.passed and check.counts_conserved

    def test_g1(self):
        g = gaussian_mixture_model()
        s, r = setup(g, 8)
        assert empirical_mean_check(g, G1_THETA, s, r, 200, seed=2).max_abs_z <= 5

    def test_recovers_means(self):
        s, r = setup(CONST, 4)
        check = empirical_mean_check(CONST, [40.0], s, r, 500, seed=3)
        big = check.expected >= 5
        assert big.all()
        np.testing.assert_allclose(check.empirical[big], check.expected[big], rtol=0.1)

    def test_negative_control(self):
        s, r = setup(CONST, 4)
        check = empirical_mean_check(CONST, [3.7], s, r, 200, seed=1, reference_theta=[2.0])
        assert not check.passed and check.max_abs_z > 5

    def test_too_few_trials(self):
        s, r = setup(CONST, 4)
        with pytest.raises(InputError):
            empirical_mean_check(CONST, [3.7], s, r, 10, seed=1)


def test_event_file_round_trip(tmp_path):
    g = gaussian_mixture_model()
    _, r = setup(g, 8)
    ev = sample_list(g.scaled(20.0), G1_THETA, r, 5)
    write_events(tmp_path / "ev.txt", ev)
    np.testing.assert_array_equal(read_events(tmp_path / "ev.txt"), ev.events)


def test_log_likelihood_constant():
    _, r = setup(CONST, 1)
    ev = np.array([[0.1], [0.5], [0.9]])
    expected = -3.7 + 3 * math.log(3.7) - math.log(6)
    assert list_mode_log_likelihood(CONST, [3.7], ev, r) == pytest.approx(expected, rel=1e-14)


def test_log_likelihood_peaks_at_count():
    # for a constant intensity the maximiser over theta is N / |A|
    _, r = setup(CONST, 1)
    ev = np.random.default_rng(0).random((7, 1))
    grid = np.linspace(3, 11, 801)
    ll = [list_mode_log_likelihood(CONST, [t], ev, r) for t in grid]
    assert grid[int(np.argmax(ll))] == pytest.approx(7.0, abs=0.011)
