import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from z2glue import engine
from z2glue.errors import ConfigError, DivergenceError


def diagonal_problem(n=20, m=10, seed=0):
    """No overlap coupling: L diagonal, indicator cut-offs, exact local inverses."""
    d = 2.0 ** np.random.default_rng(seed).integers(-3, 4, n)  # exact reciprocals
    plus = np.arange(n) < m

    def inverse(mask):
        return lambda f: np.where(mask, f / d, 0.0)

    ind = plus.astype(float)
    return engine.GluingProblem(apply_L=lambda u: d * u, chi_plus=ind, chi_minus=1 - ind,
                                zeta_plus=ind, zeta_minus=1 - ind,
                                solve_plus=inverse(plus), solve_minus=inverse(~plus))


@pytest.fixture(scope="module")
def poisson():
    return engine.schwarz_poisson(255, 0.2)


@pytest.fixture(scope="module")
def sf():
    return engine.synthetic_semifredholm()


class TestParametrix:
    def test_disjoint_supports_invert_exactly(self):
        prob = diagonal_problem()
        P1 = engine.parametrix_patch(prob)
        M = engine.operator_matrix(lambda g: prob.apply_L(P1(g)), prob.n_residual)
        np.testing.assert_array_equal(M, np.eye(prob.n_residual))

    def test_defect_lives_on_bands(self, poisson):
        prob, _ = poisson
        rng = np.random.default_rng(0)
        for _ in range(3):
            d = engine.patch_defect(prob, rng.normal(size=prob.n_residual))
            assert d.relative_outside <= 1e-10
            assert d.defect_norm > 1e-3 * d.input_norm  # the bands do carry an error

    def test_nested_defect_decays_geometrically(self, poisson):
        prob, g = poisson
        norms = engine.nested_defect_norms(prob, 6)
        delta = engine.contraction_rate(engine.alternate_classic(prob, g, 30), skip=1).delta
        ratios = norms[1:] / norms[:-1]
        # one nested step is one half of a two-step cycle
        np.testing.assert_allclose(ratios[1:], np.sqrt(delta), rtol=0.02)

    def test_nested_matches_operator_definition(self, poisson):
        prob, _ = poisson
        g = np.random.default_rng(1).normal(size=prob.n_residual)
        P3 = engine.nested_parametrix(prob, 3)
        r = prob.apply_L(P3(g)) - g
        E = np.eye(prob.n_residual) - engine.operator_matrix(
            lambda v: prob.apply_L(engine.parametrix_patch(prob)(v)), prob.n_residual)
        np.testing.assert_allclose(r, -np.linalg.matrix_power(E, 3) @ g, atol=1e-9 * np.linalg.norm(g))


class TestClassical:
    def test_poisson_midpoint(self, poisson):
        prob, g = poisson
        h = engine.alternate_classic(prob, g, 40)
        assert abs(h.u[127] - 0.125) <= 1e-8
        x = np.arange(1, 256) / 256
        np.testing.assert_allclose(h.u, x * (1 - x) / 2, atol=1e-10)

    def test_geometric_after_cycle_three(self, poisson):
        prob, g = poisson
        r = engine.alternate_classic(prob, g, 15).residual_norms
        ratios = r[4:] / r[3:-1]
        assert np.ptp(ratios) <= 0.1 * ratios.mean()

    def test_rate_against_dense_oracle(self, poisson):
        prob, g = poisson
        delta = engine.contraction_rate(engine.alternate_classic(prob, g, 30), skip=1).delta
        # the cycle error operator is (I - L P+ Z+)(I - L P- Z-) acting on residuals
        n = prob.n_residual
        L = engine.operator_matrix(prob.apply_L, n)
        Pp = engine.operator_matrix(lambda e: prob.chi_plus * prob.solve_plus(prob.zeta_plus * e), n)
        Pm = engine.operator_matrix(lambda e: prob.chi_minus * prob.solve_minus(prob.zeta_minus * e), n)
        C = (np.eye(n) - L @ Pp) @ (np.eye(n) - L @ Pm)
        assert delta == pytest.approx(max(abs(np.linalg.eigvals(C))), rel=1e-3)

    def test_overlap_monotone(self):
        deltas = [engine.contraction_rate(engine.alternate_classic(*engine.schwarz_poisson(255, w), 25),
                                          skip=1).delta for w in (0.1, 0.2, 0.3)]
        assert deltas[0] > deltas[1] > deltas[2]

    def test_zero_data(self, poisson):
        prob, _ = poisson
        h = engine.alternate_classic(prob, np.zeros(prob.n_residual), 5)
        assert not np.any(h.u) and not np.any(h.residual_norms)

    def test_early_stop(self, poisson):
        prob, g = poisson
        h = engine.alternate_classic(prob, g, 100, tol=1e-6)
        assert len(h.states) < 101 and h.residual_norms[-1] <= 1e-6 * np.linalg.norm(g)

    def test_support_invariant_during_iteration(self, poisson):
        prob, g = poisson
        h = engine.alternate_classic(prob, g, 6)
        top = h.residual_norms.max()
        leaks = [s.outside_band for s in h.steps[2:]
                 if s.step in ("minus", "plus") and s.residual_norm > 1e-3 * top]
        assert max(leaks) <= 1e-8

    def test_classical_rejects_obstructed_problem(self, sf):
        with pytest.raises(ConfigError):
            engine.alternate_classic(sf.problem, np.zeros(sf.problem.n_residual), 4)

    def test_divergence_detected(self, poisson):
        prob, g = poisson
        bad = engine.GluingProblem(prob.apply_L, prob.chi_plus, prob.chi_minus, prob.zeta_plus,
                                   prob.zeta_minus, lambda f: 3.0 * prob.solve_plus(f),
                                   lambda f: 3.0 * prob.solve_minus(f))
        with pytest.raises(DivergenceError) as exc:
            engine.alternate_classic(bad, g, 20)
        assert len(exc.value.history) >= 4

    def test_history_csv(self, poisson, tmp_path):
        prob, g = poisson
        h = engine.alternate_classic(prob, g, 4)
        h.write_csv(tmp_path / "h.csv")
        lines = (tmp_path / "h.csv").read_text().splitlines()
        assert lines[0] == "cycle,step,residual_norm,ob_component,range_component,delta_estimate"
        assert len(lines) == 1 + len(h.steps)

    def test_tracked_residual_matches_recomputed(self, poisson):
        prob, g = poisson
        assert engine.alternate_classic(prob, g, 10).max_drift <= 1e-12


class TestSemiFredholm:
    def test_cycle_contracts(self, sf):
        g = np.random.default_rng(0).normal(size=sf.problem.n_residual)
        h = engine.alternate_semifredholm(sf.problem, g, 15)
        assert engine.contraction_rate(h).delta < 1
        for s in h.steps_named("minus"):
            assert s.ob_component <= 1e-8 * h.states[s.cycle - 1].residual_norm

    def test_solution_solves_the_system(self, sf):
        g = np.random.default_rng(2).normal(size=sf.problem.n_residual)
        h = engine.alternate_semifredholm(sf.problem, g, 40)
        r = sf.L @ h.u + sf.dF @ h.xi - g
        assert np.linalg.norm(r) <= 1e-9 * np.linalg.norm(g)

    def test_without_deformation_obstruction_stalls(self, sf):
        g = np.random.default_rng(0).normal(size=sf.problem.n_residual)
        off = engine.alternate_semifredholm(sf.problem, g, 15, deformation=False)
        assert off.ob_norms[-1] > 0.1 * off.ob_norms[1]
        assert off.range_norms[-1] < 1e-3 * off.range_norms[1]

    def test_zero_data(self, sf):
        h = engine.alternate_semifredholm(sf.problem, np.zeros(sf.problem.n_residual), 5)
        assert not np.any(h.u) and not np.any(h.xi)

    def test_telescoping(self, sf):
        v = np.random.default_rng(3).normal(size=sf.k + 2 * sf.problem.n_config)
        for N in (1, 2, 3):
            assert engine.telescoping_defect(sf.problem, N, v) <= 1e-12

    def test_excision(self, sf):
        rep = engine.excision_ranks(sf)
        assert rep.consistent and rep.coker_minus == sf.k_prime

    def test_semifredholm_requires_projector(self, poisson):
        prob, g = poisson
        with pytest.raises(ConfigError):
            engine.alternate_semifredholm(prob, g, 4)

    def test_k_prime_range(self):
        with pytest.raises(ConfigError):
            engine.synthetic_semifredholm(k=2, k_prime=3)


class TestRate:
    def test_halving(self):
        assert engine.contraction_rate(2.0 ** -np.arange(12)).delta == pytest.approx(0.5, rel=1e-12)

    @settings(max_examples=50)
    @given(st.floats(0.05, 0.95), st.floats(0.1, 100), st.integers(4, 30))
    def test_exact_geometric(self, q, c, n):
        fit = engine.contraction_rate(c * q ** np.arange(n), floor=0)
        assert fit.delta == pytest.approx(q, rel=1e-9) and not fit.warning

    def test_constant_history_warns(self):
        with pytest.warns(RuntimeWarning):
            fit = engine.contraction_rate(np.ones(8))
        assert fit.delta == pytest.approx(1.0) and fit.warning

    def test_all_zero(self):
        assert engine.contraction_rate(np.zeros(5)).delta == 0

    def test_needs_four_points(self):
        with pytest.raises(ValueError):
            engine.contraction_rate([1.0, 0.5, 0.25])


class TestValidation:
    base = dict(apply_L=lambda u: u, solve_plus=lambda f: f, solve_minus=lambda f: f)

    def test_cutoff_range(self):
        with pytest.raises(ConfigError):
            engine.GluingProblem(chi_plus=np.full(4, 1.5), chi_minus=np.zeros(4),
                                 zeta_plus=np.ones(4), zeta_minus=np.zeros(4), **self.base)

    def test_zeta_partition(self):
        with pytest.raises(ConfigError):
            engine.GluingProblem(chi_plus=np.ones(4), chi_minus=np.zeros(4),
                                 zeta_plus=np.ones(4), zeta_minus=np.ones(4), **self.base)

    def test_projector_idempotent(self):
        with pytest.raises(ConfigError):
            engine.GluingProblem(chi_plus=np.ones(4), chi_minus=np.zeros(4), zeta_plus=np.ones(4),
                                 zeta_minus=np.zeros(4), obstruction_projector=lambda y: 2 * y, **self.base)

    def test_deformation_pairing(self):
        with pytest.raises(ConfigError):
            engine.GluingProblem(chi_plus=np.ones(4), chi_minus=np.zeros(4), zeta_plus=np.ones(4),
                                 zeta_minus=np.zeros(4), deformation_solver=lambda y: y, **self.base)

    def test_layout_resolution(self):
        with pytest.raises(ConfigError):
            engine.Layout(15, 0.01)
