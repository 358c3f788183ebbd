import math

import numpy as np
import pytest

from ifsdim import (
    ShiftMeasure,
    Subshift,
    chaos_game,
    entropy,
    local_dims,
    lyapunov_dimension,
    lyapunov_exponents,
)
from ifsdim.errors import InsufficientResolutionError, MeasureSupportError

import example_systems as ex

GOLDEN = Subshift.sft([[1, 1], [1, 0]])


class TestShiftMeasure:
    def test_bernoulli_validation(self):
        with pytest.raises(ValueError):
            ShiftMeasure.bernoulli([0.5, 0.6])
        with pytest.raises(ValueError):
            ShiftMeasure.bernoulli([-0.1, 1.1])

    def test_markov_stationary_computed(self):
        m = ShiftMeasure.markov([[0.5, 0.5], [1.0, 0.0]])
        assert np.allclose(m.pi, [2.0 / 3.0, 1.0 / 3.0], atol=1e-12)

    def test_markov_bad_pi_rejected(self):
        with pytest.raises(ValueError):
            ShiftMeasure.markov([[0.5, 0.5], [1.0, 0.0]], pi=[0.5, 0.5])

    def test_support_check(self):
        m = ShiftMeasure.markov([[0.5, 0.5], [1.0, 0.0]])
        m.check_support(GOLDEN)
        bad = ShiftMeasure.markov([[0.5, 0.5], [0.5, 0.5]])
        with pytest.raises(MeasureSupportError):
            bad.check_support(GOLDEN)
        with pytest.raises(MeasureSupportError):
            ShiftMeasure.bernoulli([0.5, 0.5]).check_support(GOLDEN)

    def test_sampling_respects_transitions(self):
        m = ShiftMeasure.markov([[0.5, 0.5], [1.0, 0.0]])
        rng = np.random.default_rng(0)
        words = m.sample_words(rng, 500, 30)
        assert not ((words[:, :-1] == 1) & (words[:, 1:] == 1)).any()

    def test_sampling_frequencies(self):
        m = ShiftMeasure.bernoulli([0.2, 0.3, 0.5])
        rng = np.random.default_rng(1)
        words = m.sample_words(rng, 2000, 50)
        freq = np.bincount(words.ravel(), minlength=3) / words.size
        assert np.allclose(freq, [0.2, 0.3, 0.5], atol=0.01)


class TestEntropy:
    def test_uniform(self):
        m = ShiftMeasure.bernoulli([1 / 3, 1 / 3, 1 / 3])
        assert abs(entropy(m) - math.log(3)) < 1e-12
        assert abs(entropy(m) - 1.098612) < 1e-6

    def test_atomic(self):
        assert entropy(ShiftMeasure.bernoulli([1.0, 0.0, 0.0])) == 0.0

    def test_golden_markov(self):
        m = ShiftMeasure.markov([[0.5, 0.5], [1.0, 0.0]])
        want = (2.0 / 3.0) * math.log(2.0)
        assert abs(entropy(m) - want) < 1e-12
        assert abs(entropy(m) - 0.462098) < 1e-6


class TestLyapunovExponents:
    def test_constant_cocycle_exact(self):
        sys_ = ex.three_diag()
        m = ShiftMeasure.bernoulli([1 / 3, 1 / 3, 1 / 3])
        spec = lyapunov_exponents(sys_, m, n_orbit=100, n_samples=16, seed=0)
        assert np.allclose(spec.lam, [math.log(0.5), math.log(1 / 3)], rtol=1e-14)
        assert (spec.ci_half_width == 0).all()

    def test_similarities(self):
        sys_ = ex.sierpinski()
        m = ShiftMeasure.uniform(sys_.subshift)
        spec = lyapunov_exponents(sys_, m, n_orbit=64, n_samples=8, seed=0)
        assert np.allclose(spec.lam, [math.log(0.5), math.log(0.5)])

    def test_perturbed_close_to_base(self):
        m = ShiftMeasure.bernoulli([1 / 3, 1 / 3, 1 / 3])
        pert = ex.three_diag_perturbed(1e-3)
        spec = lyapunov_exponents(pert, m, n_orbit=150, n_samples=32, seed=2)
        base = np.array([math.log(0.5), math.log(1 / 3)])
        assert np.abs(spec.lam - base).max() < 1e-2
        assert (np.diff(spec.lam) <= 1e-12).all()
        assert (spec.lam < 0).all()

    def test_repeller_exponents(self):
        rep = ex.torus_repeller()
        m = ShiftMeasure.uniform(rep.subshift)
        spec = lyapunov_exponents(rep, m, n_orbit=80, n_samples=8, seed=1)
        assert np.allclose(spec.lam, [math.log(0.5), math.log(1 / 3)], rtol=1e-14)


class TestLyapunovDimension:
    def test_piecewise_root(self):
        # log2 - log2 = 0 exactly at s = 1
        assert lyapunov_dimension(math.log(2), [-math.log(2), -math.log(3)]) == 1.0

    def test_equal_exponents(self):
        got = lyapunov_dimension(math.log(3), [-math.log(2), -math.log(2)])
        assert abs(got - math.log(3) / math.log(2)) < 1e-15
        assert abs(got - 1.5849625) < 1e-7

    def test_zero_entropy(self):
        assert lyapunov_dimension(0.0, [-0.2, -0.5]) == 0.0

    def test_above_ambient_dimension_branch(self):
        lam = [-math.log(2), -math.log(3)]
        h = 2 * math.log(6)
        got = lyapunov_dimension(h, lam)
        assert abs(got - 2 * h / math.log(6)) < 1e-12
        assert got == 4.0

    def test_rejects_nonnegative_exponent(self):
        with pytest.raises(ValueError):
            lyapunov_dimension(0.5, [0.1, -0.5])

    def test_monotone_and_continuous_in_entropy(self):
        lam = np.array([-0.3, -0.7, -1.1])
        hs = np.linspace(0.0, 2.5, 400)
        vals = np.array([lyapunov_dimension(h, lam) for h in hs])
        assert (np.diff(vals) >= -1e-12).all()
        assert np.abs(np.diff(vals)).max() < 0.05  # no jumps across kinks


class TestLocalDims:
    def test_uniform_square(self):
        rng = np.random.default_rng(10)
        cloud = rng.random((100_000, 2))
        r_grid = 2.0 ** -np.arange(3, 9)
        res = local_dims(cloud, r_grid, n_probes=1500, seed=0)
        assert abs(res.estimate - 2.0) < 0.1

    def test_interval_pushforward_is_lebesgue(self):
        sys_ = ex.interval_halves()
        cloud, err = chaos_game(sys_, ShiftMeasure.bernoulli([0.5, 0.5]), 100_000, 60, seed=4)
        r_grid = 2.0 ** -np.arange(4, 11)
        res = local_dims(cloud, r_grid, n_probes=1500, resolution=err, seed=0)
        assert abs(res.estimate - 1.0) < 0.05

    def test_atomic_cloud(self):
        cloud = np.zeros((500, 2))
        res = local_dims(cloud, [0.1, 0.05, 0.025], n_probes=100, seed=0)
        assert res.estimate == 0.0

    def test_resolution_guard(self):
        cloud = np.random.default_rng(0).random((1000, 2))
        with pytest.raises(InsufficientResolutionError):
            local_dims(cloud, [1e-4, 1e-3], resolution=1e-4)
