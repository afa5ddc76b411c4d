import numpy as np
import pytest

from z2glue.clifford import real_inner, split_re_im
from z2glue.edge import (DiracModelParams, FormField, LinearizedSWParams, WeightedNormSpec, dirac_apply,
                         form_inner, inner, linearized_sw_apply, model_harmonic_spinor, solve_dirac,
                         weighted_norm)
from z2glue.errors import ConfigError, SingularParameterError
from z2glue.geometry import build_grid, integrate
from z2glue.obstruction import cokernel_element


def bump_field(g, rng, a=0.3, b=0.7, modes=2):
    """Smooth random spinor supported in a < r < b, band-limited in (t, theta)."""
    t, th, r = g.mesh
    x = np.clip((r - a) / (b - a), 0, 1)
    prof = np.where((x > 0) & (x < 1), np.exp(-1 / np.maximum(x * (1 - x), 1e-300)), 0.0)
    out = np.zeros((2, 2, *g.shape), complex)
    for p in range(-modes, modes + 1):
        for k in range(-modes, modes + 1):
            c = rng.normal(size=(2, 2, 1, 1, 1)) + 1j * rng.normal(size=(2, 2, 1, 1, 1))
            out += c * np.exp(1j * (p * t + k * th))
    return out * prof


@pytest.fixture
def rng():
    return np.random.default_rng(5)


def test_zero_maps_to_zero():
    g = build_grid(8, 8, 16)
    assert not np.any(dirac_apply(np.zeros((2, 2, *g.shape)), g))


def test_model_spinor_is_harmonic():
    g = build_grid(8, 8, 64, 1.0)
    phi = model_harmonic_spinor(g, 1.0, 0.5 - 0.25j)
    assert np.max(np.abs(dirac_apply(phi, g))) <= 1e-10 * np.max(np.abs(phi))


def test_commutes_with_real_structure(rng):
    g = build_grid(8, 8, 32)
    f = bump_field(g, rng, modes=1)
    re, _ = split_re_im(f, g.mesh[1])
    _, im = split_re_im(dirac_apply(re, g), g.mesh[1])
    assert np.max(np.abs(im)) <= 1e-12 * np.max(np.abs(dirac_apply(re, g)))


def test_cokernel_element_annihilated_under_refinement():
    rel = []
    for n in (64, 128, 256):
        g = build_grid(16, 8, n, 3.0)
        psi = cokernel_element(1, g)
        rel.append(np.sqrt(inner(dirac_apply(psi, g), dirac_apply(psi, g), g).real))
    assert rel[0] / rel[1] >= 3 and rel[1] / rel[2] >= 3


def test_formally_self_adjoint(rng):
    g = build_grid(16, 16, 128, 1.0)
    f, h = bump_field(g, rng), bump_field(g, rng)
    a, b = inner(dirac_apply(f, g), h, g), inner(f, dirac_apply(h, g), g)
    assert abs(a - b) <= 1e-10 * abs(a)


def test_dt_toggle_and_holonomy_validation():
    with pytest.raises(ConfigError):
        DiracModelParams(holonomy_coefficient=0)
    g = build_grid(8, 4, 16)
    t = g.mesh[0]
    f = np.zeros((2, 2, *g.shape), complex)
    f[0, 0] = np.exp(1j * t) * np.ones(g.shape)  # r-independent, theta-mode 0
    full = dirac_apply(f, g)
    nodt = dirac_apply(f, g, DiracModelParams(include_dt=False))
    np.testing.assert_allclose(full[0, 0] - nodt[0, 0], -f[0, 0], atol=1e-12)


class TestWeightedNorm:
    def test_constant_field(self):
        g = build_grid(8, 8, 64, 1.0)
        f = np.zeros((2, 2, *g.shape), complex)
        f[0, 0] = 2 - 1j
        val = weighted_norm(f, WeightedNormSpec(nu=0.0), g) ** 2
        assert val == pytest.approx(5 * (2 * np.pi) ** 2 / 2, rel=1e-12)

    def test_linear_field(self):
        g = build_grid(8, 8, 400, 1.0)
        f = np.zeros((2, 2, *g.shape))
        f[0, 0] = g.r
        assert weighted_norm(f, WeightedNormSpec(nu=0.0), g) ** 2 == pytest.approx((2 * np.pi) ** 2 / 4, rel=1e-4)

    def test_cokernel_element_weighted_domains(self):
        l2, h1 = [], []
        for n in (64, 256, 1024):
            g = build_grid(16, 4, n, 3.0)
            psi = cokernel_element(1, g)
            l2.append(weighted_norm(psi, WeightedNormSpec(nu=-1), g))
            h1.append(weighted_norm(psi, WeightedNormSpec(nu=0.0, kind="edge_h1"), g))
        assert abs(l2[2] - l2[1]) <= 1e-2 * l2[2]  # finite
        assert h1[1] / h1[0] > 1.5 and h1[2] / h1[1] > 1.5  # not in the edge domain

    @pytest.mark.parametrize("nu", [-0.5, 0.6, -2])
    def test_nu_range(self, nu):
        with pytest.raises(ConfigError):
            WeightedNormSpec(nu=nu)

    def test_r_eps_weight_is_bounded_at_axis(self):
        g = build_grid(8, 8, 64, 1.0, radial_scheme="graded", q=1e-8 ** (1 / 63))
        spec = WeightedNormSpec(nu=0.4, weight_function="r_eps", epsilon=1e-2)
        assert spec.density(g).max() <= (1e-2 ** (2 / 3)) ** -0.8 * (1 + 1e-9)


class TestLinearizedSW:
    def _setup(self, n=64):
        g = build_grid(16, 16, n, 1.0)
        return g, LinearizedSWParams(0.1, model_harmonic_spinor(g))

    def test_zero_input(self):
        g, P = self._setup()
        top, form = linearized_sw_apply(np.zeros((2, 2, *g.shape)), FormField.zeros(g), g, P)
        assert not np.any(top) and not np.any(form.a0) and not np.any(form.a1)

    def test_block_decoupling(self, rng):
        g, P = self._setup()
        phi, _ = split_re_im(bump_field(g, rng, modes=1), g.mesh[1])
        top, form = linearized_sw_apply(phi, FormField.zeros(g), g, P)
        _, im = split_re_im(top, g.mesh[1])
        assert np.max(np.abs(im)) <= 1e-12 * np.max(np.abs(top))
        assert np.max(np.abs(form.a0)) <= 1e-12 and np.max(np.abs(form.a1)) <= 1e-12

    def test_symmetric_up_to_discretization(self, rng):
        def imag_form(g):
            b = bump_field(g, rng)
            return FormField(1j * b[0, 0].real, 1j * np.stack([b[0, 1].real, b[1, 0].real, b[1, 1].real]))

        gaps = []
        for n in (64, 128):
            g, P = self._setup(n)
            x, y, ax, ay = bump_field(g, rng), bump_field(g, rng), imag_form(g), imag_form(g)
            Lx, Lax = linearized_sw_apply(x, ax, g, P)
            Ly, Lay = linearized_sw_apply(y, ay, g, P)
            lhs = integrate(real_inner(Lx, y), g) + form_inner(Lax, ay, g)
            rhs = integrate(real_inner(x, Ly), g) + form_inner(ax, Lay, g)
            gaps.append(abs(lhs - rhs) / abs(lhs))
        assert gaps[1] <= 1e-2 and gaps[1] < gaps[0] / 3

    def test_zero_epsilon_is_singular(self):
        g = build_grid(4, 4, 4)
        with pytest.raises(SingularParameterError):
            LinearizedSWParams(0.0, np.zeros((2, 2, *g.shape)))


class TestSolver:
    def test_recovers_compact_solution(self, rng):
        errs = []
        for n in (64, 128):
            g = build_grid(16, 16, n, 1.0)
            u0 = bump_field(g, np.random.default_rng(2))
            sol = solve_dirac(dirac_apply(u0, g), WeightedNormSpec(nu=0.0), g)
            errs.append(np.linalg.norm(sol.u - u0) / np.linalg.norm(u0))
        assert errs[1] <= 5e-3 and errs[0] / errs[1] > 3

    def test_cokernel_rhs_is_obstructed_at_nu_zero(self):
        res = []
        for n in (64, 128, 256):
            g = build_grid(16, 8, n, 3.0)
            res.append(solve_dirac(cokernel_element(1, g), WeightedNormSpec(nu=0.0), g).relative_residual)
        assert min(res) > 0.99

    def test_cokernel_rhs_solvable_on_enlarged_domain(self):
        g = build_grid(16, 8, 256, 3.0)
        sol = solve_dirac(cokernel_element(1, g), WeightedNormSpec(nu=-1), g)
        assert sol.relative_residual <= 1e-5
        # the solution carries the r^{-1/2} profile at the axis
        amp = np.sqrt(np.sum(np.abs(sol.u) ** 2, axis=(0, 1))).max(axis=(0, 1)) * np.sqrt(g.r)
        assert amp[0] > 0.05 and abs(amp[1] / amp[0] - 1) < 0.05

    def test_zero_rhs(self):
        g = build_grid(8, 8, 16)
        sol = solve_dirac(np.zeros((2, 2, *g.shape)), WeightedNormSpec(), g)
        assert not np.any(sol.u)

    def test_orthogonality_constraint(self, rng):
        g = build_grid(8, 8, 64, 1.0)
        f = bump_field(g, rng, modes=1)
        c = bump_field(g, rng, modes=1)
        sol = solve_dirac(f, WeightedNormSpec(nu=0.0), g, orthogonality=c)
        assert abs(inner(sol.u, c, g)) <= 1e-8 * np.sqrt(inner(sol.u, sol.u, g).real * inner(c, c, g).real)


def test_solution_mass_near_axis_decays_with_epsilon():
    from z2glue import checks

    exponent, masses = checks.dirac_decay()
    print(f"near-axis mass exponent {exponent:.3f}; masses {['%.3e' % m for m in masses]}")
    assert exponent > 0
    assert all(a > b for a, b in zip(masses, masses[1:]))
