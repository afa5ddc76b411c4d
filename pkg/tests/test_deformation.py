import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from z2glue import checks
from z2glue import deformation as dfm
from z2glue.edge import cartesian_gradient, model_harmonic_spinor
from z2glue.errors import ObstructedDeformationError
from z2glue.geometry import build_grid
from z2glue.obstruction import ObstructionSpectrum, mode_range

LF = dfm.LoopFunction
ONE, ZERO = LF.from_modes({0: 1.0}), LF.from_modes({0: 0.0})


class TestLoops:
    def test_hilbert_of_cosine(self):
        t = np.linspace(0, 2 * np.pi, 17)
        cos = LF.from_modes({1: 0.5, -1: 0.5})
        np.testing.assert_allclose(dfm.hilbert_transform(cos)(t), np.sin(t), atol=1e-15)

    def test_hilbert_of_exponential(self):
        h = dfm.hilbert_transform(LF.from_modes({5: 1.0}))
        assert h[5] == -1j

    @settings(max_examples=50)
    @given(st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
                    min_size=3, max_size=15).filter(lambda c: len(c) % 2 == 1))
    def test_hilbert_squared(self, coeffs):
        f = LF(np.array(coeffs))
        hh = dfm.hilbert_transform(dfm.hilbert_transform(f))
        assert hh.allclose((f - LF.from_modes({0: f.mean()})).scale(-1), atol=1e-12)

    @settings(max_examples=50)
    @given(st.integers(1, 6), st.floats(0.5, 10))
    def test_samples_roundtrip(self, P, Z):
        rng = np.random.default_rng(P)
        f = LF(rng.normal(size=2 * P + 1) + 1j * rng.normal(size=2 * P + 1), Z)
        t = np.arange(2 * P + 1) * Z / (2 * P + 1)
        assert LF.from_samples(f(t), Z).allclose(f)

    def test_conj_and_derivative(self):
        f = LF.from_modes({2: 1 + 1j, -1: 0.5})
        t = np.linspace(0, 1, 7)
        np.testing.assert_allclose(f.conj()(t), np.conj(f(t)))
        np.testing.assert_allclose(f.derivative()(t), 2j * (1 + 1j) * np.exp(2j * t) - 0.5j * np.exp(-1j * t))

    def test_validation(self):
        with pytest.raises(ValueError):
            LF(np.ones(4))
        with pytest.raises(ValueError):
            LF(np.array([np.inf, 0, 0]))


class TestClosedForm:
    def test_constants_are_killed(self):
        assert dfm.deformation_operator_closed(LF.from_modes({0: 3.0}), ONE, ZERO).norm() == 0

    @pytest.mark.parametrize("p", [-7, -1, 1, 3, 16])
    def test_single_mode(self, p):
        out = dfm.deformation_operator_closed(LF.from_modes({p: 1.0}), ONE, ZERO)
        expected = 3 * np.pi * p**2 * (1 + p**2) ** -0.75 * (-1j * np.sign(p))
        assert out[p] == pytest.approx(expected, rel=1e-14)
        assert out.norm() == pytest.approx(abs(expected) * np.sqrt(2 * np.pi), rel=1e-14)

    def test_order_one_half(self):
        p = sp.symbols("p", positive=True)
        assert sp.limit(p**2 * (1 + p**2) ** sp.Rational(-3, 4) / sp.sqrt(p), p, sp.oo) == 1
        out = dfm.deformation_operator_closed(LF.from_modes({64: 1.0}), ONE, ZERO)
        assert abs(out[64]) / 8 == pytest.approx(3 * np.pi, rel=0.02)

    def test_conjugate_coupling(self):
        eta = LF.from_modes({2: 1.0})
        out = dfm.deformation_operator_closed(eta, ZERO, ONE)
        # -conj(eta'') d lands on mode -2
        assert out[2] == 0 and out[-2] != 0


class TestCutoffs:
    fam = dfm.ModeCutoffFamily(R0=1.0, r0=1.0)

    def test_single_mode_support(self):
        g = build_grid(16, 4, 400, 1.0)
        for p in (2, 4, 7):
            X = dfm.underline_apply(self.fam, LF.from_modes({p: 1.0}), g)
            assert not np.any(X[..., g.r > 2 * self.fam.R0 / p + 1e-12])

    def test_constant_loop(self):
        g = build_grid(8, 4, 64, 1.0)
        X = dfm.underline_apply(self.fam, LF.from_modes({0: 2.5}), g)
        np.testing.assert_allclose(X, 2.5 * self.fam.outer(g.r) * np.ones(g.shape))

    def test_linearity(self):
        g = build_grid(8, 4, 64, 1.0)
        a, b = LF.from_modes({1: 1.0, -2: 0.3j}), LF.from_modes({3: -0.7})
        np.testing.assert_array_equal(dfm.underline_apply(self.fam, a + b, g),
                                      dfm.underline_apply(self.fam, a, g) + dfm.underline_apply(self.fam, b, g))

    def test_profile_derivatives(self):
        r = np.linspace(0.01, 1, 2001)
        for k in (1, 2):
            num = np.gradient(self.fam.profile(3.0, r, k - 1), r)
            np.testing.assert_allclose(num[5:-5], self.fam.profile(3.0, r, k)[5:-5], atol=2e-3 * 9**k)


class TestMetric:
    fam = dfm.ModeCutoffFamily()

    def test_zero_loop(self):
        g = build_grid(8, 8, 32)
        assert not np.any(dfm.pullback_metric_derivative(LF.from_modes({0: 0.0}), g, self.fam).g)

    def test_translation_is_isometry(self):
        g = build_grid(8, 8, 64, 1.0)
        gd = dfm.pullback_metric_derivative(LF.from_modes({0: 1 + 2j}), g, self.fam).g
        assert not np.any(gd[..., g.r <= self.fam.r0 / 2])

    def test_matches_pullback_difference(self):
        g = build_grid(16, 16, 400, 1.0)
        eta = LF.from_modes({2: 0.7, -1: 0.2 - 0.4j, 0: 0.3})
        X = dfm.underline_apply(self.fam, eta, g)
        grads = np.stack([cartesian_gradient(X.real, g), cartesian_gradient(X.imag, g)])  # [b, a]

        def pulled(s):
            DF = np.broadcast_to(np.eye(3)[:, :, None, None, None], (3, 3, *g.shape)).copy()
            DF[1] += s * grads[0]
            DF[2] += s * grads[1]
            return np.einsum("ca...,cb...->ab...", DF, DF)

        s = 1e-4
        fd = (pulled(s) - pulled(-s)) / (2 * s)
        gd = dfm.pullback_metric_derivative(eta, g, self.fam).g
        inner_r = g.r < 0.9  # away from the one-sided boundary stencil
        assert np.linalg.norm((fd - gd)[..., inner_r]) <= 1e-3 * np.linalg.norm(gd[..., inner_r])

    def test_symmetric_only(self):
        with pytest.raises(ValueError):
            dfm.MetricPerturbation(np.arange(9.0).reshape(3, 3))


class TestBG:
    def test_zero_perturbation(self):
        g = build_grid(8, 8, 32)
        phi = model_harmonic_spinor(g)
        assert not np.any(dfm.bg_variation(dfm.MetricPerturbation(np.zeros((3, 3, *g.shape))), phi, g))

    def test_constant_diagonal_symbol_term(self):
        g = build_grid(8, 8, 64, 1.0)
        rng = np.random.default_rng(1)
        phi = checks.random_sigma_fixed_field(g, rng, 2)
        a = 0.37
        gd = np.zeros((3, 3, *g.shape))
        gd[1, 1] = gd[2, 2] = 2 * a
        B = dfm.bg_variation(dfm.MetricPerturbation(gd), phi, g)
        nab = dfm.spinor_cartesian_derivatives(phi, g)
        from z2glue.clifford import GAMMA
        expected = -a * (np.einsum("ab,bs...->as...", GAMMA[1], nab[1])
                         + np.einsum("ab,bs...->as...", GAMMA[2], nab[2]))
        np.testing.assert_allclose(B, expected, atol=1e-13)

    def test_conformal_oracle_quadratic(self):
        g = build_grid(16, 16, 96, 2.0, radial_scheme="graded")
        phi, f = checks.bg_test_case(g)
        e3, e4 = (dfm.conformal_fd_error(phi, f, s, g) for s in (1e-3, 1e-4))
        assert e4 <= 1e-3
        assert e3 / e4 == pytest.approx(100, rel=0.1)

    def test_other_normalization_breaks_covariance(self):
        g = build_grid(16, 16, 96, 2.0, radial_scheme="graded")
        phi, f = checks.bg_test_case(g)
        assert dfm.conformal_fd_error(phi, f, 1e-4, g, trace_coeff=0.5, div_coeff=0.5) > 0.1


class TestAssembledAndSolve:
    def test_zero_loop(self):
        g = checks.symbol_grid(8, 120)
        sp_ = dfm.deformation_operator_assembled(LF.from_modes({0: 0.0}, 8), dfm.default_phi_model(g), g)
        assert sp_.norm() == 0

    def test_phase_matches_closed_form(self):
        rows = checks.symbol_sweep((8, 16), 200)
        ratios = [a / c for _, _, a, c in rows]
        # leading order only: the closed form drops a compact remainder
        assert ratios[0] == pytest.approx(ratios[1], rel=2e-2)
        assert abs(ratios[0].real) <= 1e-8 * abs(ratios[0])

    def test_slope_one_half(self):
        rows = checks.symbol_sweep((8, 16, 32, 64), 200)
        assert dfm.fit_exponent([r[0] for r in rows], [r[1] for r in rows]) == pytest.approx(0.5, abs=0.1)

    def test_roundtrip(self):
        rt = checks.deformation_roundtrip(0.05, 1e-2, seed=3)
        assert rt["recover_rel_error"] <= 1e-6
        assert rt["roundtrip_rel_residual"] <= 1e-6

    def test_zero_target(self):
        M = dfm.DeformationMatrix(np.array([-1, 1]), mode_range(1), np.eye(4), 1.0, 2 * np.pi, 1)
        sol = dfm.solve_deformation(ObstructionSpectrum.zeros(1), M)
        assert sol.eta.norm() == 0 and sol.residual == 0

    def test_singular_matrix(self):
        M = dfm.DeformationMatrix(np.array([-1, 1]), mode_range(1), np.zeros((4, 4)), np.inf, 2 * np.pi, 1)
        with pytest.raises(ObstructedDeformationError):
            dfm.solve_deformation(ObstructionSpectrum.zeros(1), M)


def test_weight_two_terms_scale_like_sqrt_p():
    r = checks.weight_two_scaling()
    assert r.passed, r.detail


def test_effective_support_exponent():
    slope, _, _ = checks.effective_support_exponent(nu=0.5)
    assert slope == pytest.approx(0.5, abs=0.15)
