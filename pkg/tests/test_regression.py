import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from rbmlearn.convert import observed_marginal, rbm_to_mrf
from rbmlearn.errors import InsufficientDataError, ParameterError
from rbmlearn.exact import config_matrix, distribution_from_potential, marginal
from rbmlearn.generators import random_mrf, random_rbm
from rbmlearn.model import MrfPotential, as_ising
from rbmlearn.regression import (
    FittedLocalPotential,
    RegressionProblem,
    assemble_potential,
    config_prob_ratio,
    discrete_partial,
    glmtron_fit,
    glmtron_population,
    learn_potential,
    learn_potential_population,
    risk_to_parameter_bound,
)
from rbmlearn.sampler import make_rng, sample_distribution, sample_exact

from conftest import single_unit_rbm


def _suite_rbm(seed, n=5, m=2):
    return random_rbm(make_rng(seed), n, m, 2, 0.2, 1.0)


class TestDiscretePartial:
    def test_example(self):
        p = MrfPotential(3, {(0,): 0.2, (0, 1): 0.5, (1, 2): 0.3, (0, 1, 2): -0.1})
        q = discrete_partial(p, 0)
        assert q.terms == {(1,): 0.5, (1, 2): -0.1}
        assert q.offset == 0.2

    def test_absent_variable_gives_zero(self):
        q = discrete_partial(MrfPotential(3, {(1, 2): 0.3}), 0)
        assert q.terms == {} and q.offset == 0.0

    def test_rejects_out_of_range(self):
        with pytest.raises(ParameterError):
            discrete_partial(MrfPotential(2, {}), 2)

    @given(st.integers(0, 10_000))
    @settings(max_examples=30)
    def test_half_difference_of_flips(self, seed):
        # q_i(x) = (p(x with x_i=+1) - p(x with x_i=-1)) / 2
        rng = make_rng(seed)
        p = random_mrf(rng, 4, 3, 6)
        X = config_matrix(4)
        for i in range(4):
            up, down = X.copy(), X.copy()
            up[:, i], down[:, i] = 1, -1
            assert_allclose(discrete_partial(p, i).evaluate(X), (p.evaluate(up) - p.evaluate(down)) / 2, atol=1e-12)


class TestConditionalLink:
    @pytest.mark.parametrize("seed", range(5))
    def test_tanh_of_partial_is_conditional_mean(self, seed):
        rbm = _suite_rbm(seed)
        dist = observed_marginal(rbm)
        pstar = rbm_to_mrf(rbm)
        P = dist.probabilities()
        idx = np.arange(P.size)
        X = config_matrix(rbm.n_observed)
        for i in range(rbm.n_observed):
            plus = idx | (1 << i)
            minus = idx & ~(1 << i)
            cond = (P[plus] - P[minus]) / (P[plus] + P[minus])
            assert_allclose(np.tanh(discrete_partial(pstar, i).evaluate(X)), cond, atol=1e-10)

    @pytest.mark.parametrize("seed", range(5))
    def test_partial_bounded_by_node_mass(self, seed):
        rbm = _suite_rbm(seed)
        beta = float(as_ising(rbm).node_mass().max())
        pstar = rbm_to_mrf(rbm)
        X = config_matrix(rbm.n_observed)
        for i in range(rbm.n_observed):
            assert np.abs(discrete_partial(pstar, i).evaluate(X)).max() <= beta + 1e-12

    @pytest.mark.parametrize("seed", range(5))
    def test_blanket_configurations_not_too_rare(self, seed):
        rbm = _suite_rbm(seed)
        beta = float(as_ising(rbm).node_mass().max())
        dist = observed_marginal(rbm)
        for N in [(0, 1), (1, 2, 3), (0, 2, 3, 4)]:
            p = marginal(dist, N).probabilities()
            assert p.min() * 2 ** len(N) >= config_prob_ratio(beta, len(N)) - 1e-12


class TestRegressionProblem:
    def test_population_rows(self):
        dist = observed_marginal(single_unit_rbm(3, 0.5))
        prob = RegressionProblem.from_distribution(dist, 0, (1,))
        assert prob.features == ((), (1,))
        assert prob.weights.sum() == pytest.approx(1.0)
        assert prob.design.shape == (4, 2)

    def test_rejects_target_in_neighbourhood(self):
        dist = observed_marginal(single_unit_rbm(3, 0.5))
        with pytest.raises(ParameterError):
            RegressionProblem.from_distribution(dist, 0, (0, 1))


class TestGlmtron:
    @pytest.mark.parametrize("seed", range(6))
    def test_population_fit_recovers_partial(self, seed):
        rbm = _suite_rbm(seed)
        dist = observed_marginal(rbm)
        pstar = rbm_to_mrf(rbm)
        for i, nb in pstar.neighborhoods().items():
            fit = glmtron_population(RegressionProblem.from_distribution(dist, i, nb), 10.0)
            assert fit.as_partial().max_abs_diff(discrete_partial(pstar, i)) <= 1e-6

    @pytest.mark.parametrize("seed", range(3))
    def test_population_potential(self, seed):
        rbm = _suite_rbm(seed)
        pstar = rbm_to_mrf(rbm)
        fitted = learn_potential_population(observed_marginal(rbm), pstar.neighborhoods(), 10.0)
        assert fitted.max_abs_diff(pstar) <= 1e-6

    def test_uniform_labels(self):
        samples = sample_distribution(distribution_from_potential(MrfPotential(3, {})), 20_000, 4)
        fit = glmtron_fit(RegressionProblem.from_samples(samples, 0, (1, 2)), 1.0)
        assert max(abs(c) for c in fit.coefficients.values()) < 0.05
        assert fit.holdout_risk == pytest.approx(1.0, abs=0.03)

    def test_single_unit_pair_coefficient(self):
        rbm = single_unit_rbm(4, 0.8, support=(0, 1))
        pstar = rbm_to_mrf(rbm)
        samples = sample_exact(as_ising(rbm), 100_000, 11)
        fit = glmtron_fit(RegressionProblem.from_samples(samples, 0, (1,)), 1.0)
        assert abs(fit.coefficients[(1,)] - pstar.coefficient((0, 1))) <= 0.05

    def test_projection_caps_norm(self):
        rbm = single_unit_rbm(2, 1.5)
        fit = glmtron_population(RegressionProblem.from_distribution(observed_marginal(rbm), 0, (1,)), 0.1)
        assert np.linalg.norm(list(fit.coefficients.values())) <= 0.1 + 1e-12

    def test_too_few_rows(self):
        samples = sample_exact(as_ising(single_unit_rbm(2, 0.5)), 12, 0)
        with pytest.raises(InsufficientDataError):
            glmtron_fit(RegressionProblem.from_samples(samples, 0, (1,)), 1.0)

    def test_seeded_fit_is_reproducible(self):
        samples = sample_exact(as_ising(single_unit_rbm(3, 0.5)), 5000, 3)
        prob = RegressionProblem.from_samples(samples, 0, (1,))
        assert glmtron_fit(prob, 1.0, seed=5) == glmtron_fit(prob, 1.0, seed=5)

    def test_error_shrinks_with_samples(self):
        rbm = _suite_rbm(1)
        pstar = rbm_to_mrf(rbm)
        blankets = pstar.neighborhoods()
        medians = []
        for M in (1_000, 10_000, 100_000):
            errs = [
                learn_potential(sample_exact(as_ising(rbm), M, s), blankets, 1.0, seed=s).max_abs_diff(pstar)
                for s in range(7)
            ]
            medians.append(np.median(errs))
        assert medians[0] >= medians[1] >= medians[2]


def _local(node, coefs, n):
    return FittedLocalPotential(node, coefs, 0.0, 0, n)


class TestAssemble:
    def test_zero_fits(self):
        p = assemble_potential([_local(i, {(): 0.0}, 3) for i in range(3)])
        assert all(c == 0.0 for c in p.terms.values())

    def test_consistent_fits_agree_across_rules(self):
        pstar = MrfPotential(3, {(0,): 0.1, (0, 1): 0.4, (1, 2): -0.2, (0, 1, 2): 0.05})
        fits = []
        for i in range(3):
            q = discrete_partial(pstar, i)
            fits.append(_local(i, {(): q.offset, **q.terms}, 3))
        for rule in ("min-index", "average"):
            assert assemble_potential(fits, rule).max_abs_diff(pstar) <= 1e-15

    def test_rules_differ_on_inconsistent_fits(self):
        fits = [_local(0, {(1,): 0.4}, 2), _local(1, {(0,): 0.2}, 2)]
        assert assemble_potential(fits, "min-index").coefficient((0, 1)) == 0.4
        assert assemble_potential(fits, "average").coefficient((0, 1)) == pytest.approx(0.3)

    def test_missing_node(self):
        with pytest.raises(ParameterError):
            assemble_potential([_local(0, {}, 2)])

    def test_unknown_rule(self):
        with pytest.raises(ParameterError):
            assemble_potential([_local(0, {}, 1)], "median")


class TestRiskToParameters:
    @given(st.integers(0, 10_000))
    @settings(max_examples=40)
    def test_bound_holds_by_brute_force(self, seed):
        rng = make_rng(seed)
        n = 3
        P = rng.dirichlet(np.ones(1 << n))
        delta = float((P * (1 << n)).min())
        f, g = random_mrf(rng, n, 3, 5), random_mrf(rng, n, 3, 5)
        diff = f - g
        risk = float(P @ (diff.table() ** 2))
        coef_sq = sum(c * c for c in diff.terms.values())
        assert coef_sq <= risk_to_parameter_bound(risk, delta) * (1 + 1e-12) + 1e-15

    def test_rejects_bad_delta(self):
        with pytest.raises(ParameterError):
            risk_to_parameter_bound(0.1, 0.0)
        with pytest.raises(ParameterError):
            risk_to_parameter_bound(-0.1, 0.5)

    def test_ratio_values(self):
        assert config_prob_ratio(0.0, 3) == pytest.approx(1.0)
        assert config_prob_ratio(1.0, 0) == 1.0

