from math import erfc, sqrt

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.special import sici

from binloss import (
    AttributeSpace,
    InputError,
    NonpositiveDensityError,
    ObjectGrid,
    PsfSpec,
    ShapeError,
    apply_binning,
    apply_system,
    bandlimited_psf_values,
    binned_system,
    build_convolution_operator,
    build_rule,
    equality_residual,
    loss_object,
    uniform_grid,
)
from binloss.binning import weighted_inner
from binloss.reconstruction import fim_object, object_from_bumps

SPACE = AttributeSpace.interval(-1.0, 1.0)
GRID = ObjectGrid(-1.0, 1.0, 400)
G2_OBJECT = dict(background=0.2, bumps=[dict(amplitude=1.0, center=0.0, width=0.15)])


def setup(m=8, n=8, psf=PsfSpec("gaussian", width=0.05)):
    s = uniform_grid(SPACE, [m])
    r = build_rule(SPACE, s, n)
    return s, r, build_convolution_operator(psf, GRID, r)


class TestObjectGrid:
    def test_points(self):
        g = ObjectGrid(0.0, 1.0, 4)
        np.testing.assert_allclose(g.points, [0.125, 0.375, 0.625, 0.875])
        assert g.spacing == 0.25

    def test_invalid(self):
        with pytest.raises(InputError):
            ObjectGrid(0.0, 1.0, 1)
        with pytest.raises(InputError):
            PsfSpec("gaussian", width=0.0)
        with pytest.raises(InputError):
            PsfSpec("boxcar", width=1.0)


class TestConvolutionOperator:
    def test_delta_surrogate(self):
        # width well below the object spacing: each node sees a normalised
        # mix of its nearest samples, i.e. f interpolated to within 1%
        s, r, _ = setup()
        fine = ObjectGrid(-1.0, 1.0, 4000)
        op = build_convolution_operator(PsfSpec("gaussian", width=0.2 * fine.spacing), fine, r)
        kernel = op.kernel / op.kernel.sum(axis=1, keepdims=True)
        f = object_from_bumps(fine, **G2_OBJECT)
        lf = kernel @ f
        exact = 0.2 + np.exp(-0.5 * (r.nodes[:, 0] / 0.15) ** 2)
        assert np.max(np.abs(lf / exact - 1)) <= 0.01

    def test_constant_interior(self):
        s, r, op = setup()
        lf = apply_system(op, np.full(GRID.n_points, 2.5))
        x = r.nodes[:, 0]
        inner = np.abs(x) <= 1 - 5 * 0.05
        np.testing.assert_allclose(lf[inner], 2.5, rtol=1e-6)
        # nearer the edge the shortfall is the gaussian tail beyond the support
        edge = (np.abs(x) > 1 - 5 * 0.05) & (np.abs(x) <= 1 - 4 * 0.05)
        tail = 0.5 * np.array([erfc((1 - abs(v)) / (0.05 * sqrt(2))) for v in x[edge]])
        np.testing.assert_allclose(lf[edge], 2.5 * (1 - tail), rtol=1e-6)

    def test_linearity(self):
        _, _, op = setup()
        f = object_from_bumps(GRID, **G2_OBJECT)
        np.testing.assert_array_equal(apply_system(op, 2 * f), 2 * apply_system(op, f))

    def test_two_d_rejected(self):
        sp = AttributeSpace([0, 0], [1, 1])
        r = build_rule(sp, uniform_grid(sp, [2, 2]), 2)
        with pytest.raises(ShapeError, match="dimension mismatch"):
            build_convolution_operator(PsfSpec("gaussian", width=0.1), GRID, r)


class TestApplySystem:
    def test_zero(self):
        _, r, op = setup()
        np.testing.assert_array_equal(apply_system(op, np.zeros(GRID.n_points)), np.zeros(r.n_nodes))

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1))
    def test_superposition(self, seed):
        _, _, op = setup(4, 4)
        rng = np.random.default_rng(seed)
        f, h = rng.normal(size=(2, GRID.n_points))
        np.testing.assert_allclose(apply_system(op, f + h), apply_system(op, f) + apply_system(op, h),
                                   rtol=0, atol=1e-12)

    def test_g2_positive(self):
        _, r, op = setup()
        assert np.all(apply_system(op, object_from_bumps(GRID, **G2_OBJECT), r, require_positive=True) > 0)

    def test_nonpositive_reports_node(self):
        _, r, op = setup()
        with pytest.raises(NonpositiveDensityError, match="nonpositive mean density"):
            apply_system(op, -np.ones(GRID.n_points), r, require_positive=True)

    def test_wrong_length(self):
        _, _, op = setup()
        with pytest.raises(ShapeError):
            apply_system(op, np.ones(3))


class TestBinnedSystem:
    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1))
    def test_factorization(self, seed):
        s, r, op = setup(8, 4)
        f = np.random.default_rng(seed).normal(size=GRID.n_points)
        h = binned_system(op, s, r)
        assert np.max(np.abs(h @ f - apply_binning(s, r, apply_system(op, f)))) <= 1e-12

    def test_constant_interior_bins(self):
        s, r, op = setup(8, 8)
        hf = binned_system(op, s, r) @ np.full(GRID.n_points, 2.0)
        np.testing.assert_allclose(hf[2:6], 2.0 * 0.25, rtol=1e-6)

    def test_single_bin_row(self):
        s, r, op = setup(1, 8)
        np.testing.assert_allclose(binned_system(op, s, r)[0], r.weights @ op.kernel, rtol=1e-14)

    def test_mismatched_rule(self):
        s, r, op = setup(8, 4)
        s2 = uniform_grid(SPACE, [8])
        r2 = build_rule(SPACE, s2, 2)
        with pytest.raises(ShapeError):
            binned_system(op, s2, r2)


class TestLossObject:
    @pytest.mark.parametrize("m", [1, 2, 8])
    @pytest.mark.parametrize("psf", [PsfSpec("gaussian", width=0.05), PsfSpec("bandlimited-sinc", bandwidth=4.0)])
    def test_proportional_change_is_free(self, m, psf):
        s, r, op = setup(m, 16, psf)
        f = object_from_bumps(GRID, 1.0, [dict(amplitude=2.0, center=0.0, width=0.15)])
        rep = loss_object(op, s, r, f, 0.5 * f)
        assert rep.quadform_lm > 0
        assert all(abs(v) <= 1e-14 * rep.quadform_lm for v in rep.routes)
        res = equality_residual(op, s, r, f, 0.5 * f)
        assert np.max(np.abs(res)) <= 1e-13 * np.max(apply_system(op, 0.5 * f))

    def test_random_perturbation(self):
        s, r, op = setup(8, 8)
        f = object_from_bumps(GRID, **G2_OBJECT)
        rng = np.random.default_rng(4)
        for _ in range(10):
            df = rng.normal(size=GRID.n_points)
            rep = loss_object(op, s, r, f, df)
            assert rep.routes_agree()
            assert rep.loss_direct >= -1e-12 * rep.quadform_lm
            gbar = apply_system(op, f)
            res = equality_residual(op, s, r, f, df)
            assert weighted_inner(res, res, gbar, r) == pytest.approx(rep.loss_direct, rel=1e-10)
            assert np.max(np.abs(apply_binning(s, r, res))) <= 1e-12 * np.max(np.abs(apply_system(op, df)))

    def test_functional_pythagoras(self):
        from binloss.binning import decompose
        s, r, op = setup(8, 8)
        f = object_from_bumps(GRID, **G2_OBJECT)
        df = np.random.default_rng(9).normal(size=GRID.n_points)
        gbar, gamma = apply_system(op, f), apply_system(op, df)
        g1, g0 = decompose(gamma, gbar, r)
        total = weighted_inner(gamma, gamma, gbar, r)
        parts = weighted_inner(g1, g1, gbar, r) + weighted_inner(g0, g0, gbar, r)
        assert parts == pytest.approx(total, rel=1e-12)

    def test_fim_object_dominance(self):
        s, r, op = setup(4, 4)
        grid = ObjectGrid(-1.0, 1.0, 40)
        op = build_convolution_operator(PsfSpec("gaussian", width=0.1), grid, r)
        f_lm, f_b = fim_object(op, s, r, object_from_bumps(grid, **G2_OBJECT))
        assert np.linalg.eigvalsh(f_lm - f_b)[0] >= -1e-10 * np.trace(f_lm)

    def test_zero_perturbation(self):
        from binloss import ZeroPerturbationError
        s, r, op = setup()
        with pytest.raises(ZeroPerturbationError):
            loss_object(op, s, r, np.ones(GRID.n_points), np.zeros(GRID.n_points))

    def test_nonpositive_density(self):
        s, r, op = setup()
        with pytest.raises(NonpositiveDensityError):
            loss_object(op, s, r, -np.ones(GRID.n_points), np.ones(GRID.n_points))


class TestBandlimitedPsf:
    def test_peak(self):
        assert bandlimited_psf_values(4.0, 0.0) == 4.0

    def test_first_zero(self):
        assert abs(bandlimited_psf_values(4.0, 0.25)) <= 1e-15

    def test_area_slow_convergence(self):
        # over [-A/B, A/B] the area is (2/pi) Si(pi A), about 1 - 2/(pi^2 A)
        b = 4.0
        area = quad(lambda x: bandlimited_psf_values(b, x), -50 / b, 50 / b, limit=500)[0]
        assert area == pytest.approx(2 / np.pi * sici(50 * np.pi)[0], abs=1e-10)
        wide = quad(lambda x: bandlimited_psf_values(b, x), -250 / b, 250 / b, limit=2000)[0]
        assert abs(wide - 1.0) <= 1e-3

    def test_invalid(self):
        with pytest.raises(InputError):
            bandlimited_psf_values(0.0, 0.1)
