import math

import numpy as np
import pytest

from ifsdim import (
    AffineMap,
    Box,
    ShiftMeasure,
    SinePerturbedMap,
    chaos_game,
    code_point,
    jacobians_along,
    product_spectrum,
)
from ifsdim.errors import (
    ContractionError,
    InadmissibleWordError,
    PointOutsideDomainError,
)
from ifsdim.systems import batched_log_spectra, tail_length

import example_systems as ex


class TestMaps:
    def test_contraction_certificate(self):
        sys_ = ex.sierpinski()
        assert sys_.gamma_max == 0.5
        rng = np.random.default_rng(0)
        pts = rng.random((200, 2))
        for m in sys_.maps:
            jac = m.jacobian(pts)
            norms = np.linalg.norm(jac, ord=2, axis=(1, 2))
            assert (norms < 1.0).all()

    def test_expansion_rejected(self):
        dom = ex.unit_box(2)
        with pytest.raises(ContractionError):
            AffineMap(np.diag([1.1, 0.5]), [0.0, 0.0], dom)
        with pytest.raises(ContractionError):
            SinePerturbedMap(0.99 * np.eye(2), [0.0, 0.0], 0.01, dom)

    def test_map_escaping_domain_rejected(self):
        dom = ex.unit_box(1)
        from ifsdim import IfsSystem

        with pytest.raises(PointOutsideDomainError):
            IfsSystem(
                [
                    AffineMap([[0.5]], [0.0], dom),
                    AffineMap([[0.5]], [0.8], dom),  # image [0.8, 1.3]
                ]
            )

    def test_perturbation_jacobian_is_analytic(self):
        # finite differences agree with the closed-form Jacobian
        dom = ex.unit_box(2)
        m = SinePerturbedMap(ex.DIAG_LINEAR, [0.2, 0.3], 1e-2, dom)
        rng = np.random.default_rng(5)
        z = rng.uniform(0.2, 0.8, size=2)
        jac = m.jacobian(z)
        eps = 1e-7
        for j in range(2):
            dz = np.zeros(2)
            dz[j] = eps
            col = (m(z + dz) - m(z - dz)) / (2 * eps)
            assert np.allclose(col, jac[:, j], atol=1e-6)


class TestCodePoint:
    def test_fixed_point_of_first_map(self):
        sys_ = ex.interval_halves()
        pt, err = code_point(sys_, (0,) * 50, np.array([0.7]))
        assert abs(pt[0]) < 1e-12
        assert err == 0.5**50 * sys_.domain.diameter

    def test_periodic_word_limit(self):
        # fixed point of f0 o f1 : t/9 + 2/9 -> 1/4
        sys_ = ex.interval_thirds()
        pt, _ = code_point(sys_, (0, 1) * 20, np.array([0.3]))
        assert abs(pt[0] - 0.25) < 1e-15

    def test_sierpinski_vertex(self):
        sys_ = ex.sierpinski()
        pt, _ = code_point(sys_, (1,) * 40)
        assert np.allclose(pt, [1.0, 0.0], atol=1e-11)

    def test_composition_associativity(self):
        sys_ = ex.three_diag()
        z0 = np.array([0.3, 0.4])
        left, _ = code_point(sys_, (0, 2, 1, 1, 0, 2), z0)
        inner, _ = code_point(sys_, (1, 0, 2), z0)
        outer, _ = code_point(sys_, (0, 2, 1), inner)
        assert np.array_equal(left, outer)

    def test_inadmissible_and_domain_errors(self):
        sys_ = ex.sierpinski()
        with pytest.raises(InadmissibleWordError):
            code_point(sys_, (0, 3))
        with pytest.raises(PointOutsideDomainError):
            code_point(sys_, (0, 1), np.array([2.0, 2.0]))


class TestJacobiansAlong:
    def test_affine_shared_linear(self):
        sys_ = ex.three_diag()
        jacs = jacobians_along(sys_, (0, 1, 2, 1))
        assert len(jacs) == 4
        for j in jacs:
            assert np.array_equal(j, ex.DIAG_LINEAR)

    def test_zero_amplitude_matches_affine_base(self):
        base = ex.three_diag_perturbed(0.0)
        jacs = jacobians_along(base, (0, 1, 2), np.array([0.4, 0.4]))
        for j in jacs:
            assert np.allclose(j, ex.DIAG_LINEAR, atol=1e-15)

    def test_small_amplitude_stays_near_base(self):
        pert = ex.three_diag_perturbed(1e-3)
        jacs = jacobians_along(pert, (0, 1, 2, 0, 1), np.array([0.4, 0.4]))
        for j in jacs:
            assert np.abs(j - ex.DIAG_LINEAR).max() < 1e-2

    def test_repeller_pairs(self):
        rep = ex.torus_repeller()
        jacs = jacobians_along(rep, (0, 3, 5), np.array([0.2, 0.2]))
        assert len(jacs) == 2
        la = product_spectrum(jacs)
        assert np.allclose(la, [2 * math.log(0.5), 2 * math.log(1.0 / 3.0)])

    def test_batched_matches_sequential(self):
        pert = ex.three_diag_perturbed(5e-3)
        rng = np.random.default_rng(9)
        words = rng.integers(0, 3, size=(20, 6))
        tails = rng.uniform(0.1, 0.9, size=(20, 2))
        batched = batched_log_spectra(pert, words, tails)
        for i in range(20):
            jacs = jacobians_along(pert, tuple(words[i]), tails[i])
            want = product_spectrum(jacs)
            assert np.allclose(batched[i], want, rtol=1e-10, atol=1e-10)

    def test_tail_length_reaches_tolerance(self):
        sys_ = ex.sierpinski()
        n = tail_length(sys_)
        assert sys_.gamma_max**n * sys_.domain.diameter < 1e-12


class TestChaosGame:
    def test_interval_attractor(self):
        sys_ = ex.interval_halves()
        pts, err = chaos_game(sys_, ShiftMeasure.bernoulli([0.5, 0.5]), 2000, 40, seed=1)
        assert pts.shape == (2000, 1)
        assert (pts >= 0.0).all() and (pts <= 1.0).all()
        assert err == 0.5**40 * 1.0

    def test_error_bound_value(self):
        sys_ = ex.sierpinski()
        _, err = chaos_game(sys_, ShiftMeasure.uniform(sys_.subshift), 10, 60, seed=0)
        assert err == 2.0**-60 * sys_.domain.diameter

    def test_sierpinski_membership(self):
        sys_ = ex.sierpinski()
        pts, _ = chaos_game(sys_, ShiftMeasure.uniform(sys_.subshift), 100_000, 60, seed=3)
        defect = ex.sierpinski_membership_error(pts, steps=30)
        assert defect.max() < 1e-6

    def test_deterministic_given_seed(self):
        sys_ = ex.three_diag()
        m = ShiftMeasure.bernoulli([0.2, 0.3, 0.5])
        a, _ = chaos_game(sys_, m, 5000, 30, seed=42)
        b, _ = chaos_game(sys_, m, 5000, 30, seed=42)
        assert np.array_equal(a, b)
        c, _ = chaos_game(sys_, m, 5000, 30, seed=43)
        assert not np.array_equal(a, c)

    def test_prefix_restricts_to_cylinder(self):
        sys_ = ex.sierpinski()
        m = ShiftMeasure.uniform(sys_.subshift)
        pts, _ = chaos_game(sys_, m, 500, 40, seed=7, prefix=(1, 1))
        # f1 o f1 image: x in [0.75, 1], y in [0, 0.25]
        assert (pts[:, 0] >= 0.75 - 1e-9).all()
        assert (pts[:, 1] <= 0.25 + 1e-9).all()

    def test_repeller_cloud_fills_square(self):
        rep = ex.torus_repeller()
        m = ShiftMeasure.uniform(rep.subshift)
        pts, _ = chaos_game(rep, m, 20_000, 40, seed=5)
        assert (pts >= 0).all() and (pts <= 1).all()
        # Lebesgue-like coverage: every cell of an 8x8 grid is hit
        cells = np.floor(pts * 8).astype(int).clip(0, 7)
        assert len({(i, j) for i, j in cells}) == 64

    def test_measure_support_mismatch(self):
        rep = ex.torus_repeller()
        bad = ShiftMeasure.bernoulli([0.5, 0.5])
        from ifsdim.errors import MeasureSupportError

        with pytest.raises(MeasureSupportError):
            chaos_game(rep, bad, 10, 5, seed=0)
