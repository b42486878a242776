import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from rbmlearn.convert import (
    block_coefficient,
    feasible_coefficient,
    mrf_to_rbm,
    observed_marginal,
    parity_coupling,
    rbm_to_mrf,
    rho,
    solve_building_block,
    sparse_parity_potential,
    sparse_parity_rbm,
    unit_fourier,
)
from rbmlearn.errors import InfeasibleError, ParameterError
from rbmlearn.exact import config_matrix, distribution_from_potential, marginal, observed_distribution, tv_distance
from rbmlearn.generators import random_mrf, random_rbm
from rbmlearn.model import MrfPotential, Rbm, as_ising
from rbmlearn.sampler import make_rng

from conftest import single_unit_rbm

# log(cosh 2) / 2, the pair coefficient of one unit with weights (1, 1)
SINGLE_UNIT_PAIR = 0.6625013736789322


class TestRho:
    def test_values(self):
        assert rho(0.0) == pytest.approx(math.log(2))
        assert rho(1.0) == pytest.approx(math.log(math.e + 1 / math.e))
        assert rho(800.0) == pytest.approx(800.0)

    @given(st.floats(-50, 50))
    def test_even_and_above_abs(self, x):
        assert rho(x) == pytest.approx(rho(-x))
        assert abs(x) <= rho(x) <= abs(x) + math.log(2) + 1e-15

    def test_vectorized(self):
        assert_allclose(rho(np.array([0.0, -1.0])), [math.log(2), math.log(2 * math.cosh(1))])


class TestRbmToMrf:
    def test_single_unit_expansion(self):
        p = rbm_to_mrf(single_unit_rbm(2, 1.0))
        assert p.terms == pytest.approx({(0, 1): SINGLE_UNIT_PAIR})

    def test_fields_enter_linearly(self):
        rbm = Rbm(np.array([[0.5], [0.5]]), np.array([0.3, -0.1]))
        p = rbm_to_mrf(rbm)
        assert p.coefficient((0,)) == pytest.approx(0.3)
        assert p.coefficient((1,)) == pytest.approx(-0.1)

    def test_over_parameterized_example_is_empty(self):
        assert rbm_to_mrf(Rbm(np.array([[1.0, -1.0], [1.0, 1.0]]))).terms == {}

    def test_unit_fourier_matches_block_coefficient(self):
        w = np.array([0.3, -0.2, 0.4])
        coef = unit_fourier(w, 0.1)
        assert coef[0b111] == pytest.approx(block_coefficient(w, 0.1), abs=1e-15)

    @pytest.mark.parametrize("seed", range(10))
    def test_observed_law_matches(self, seed):
        rbm = random_rbm(make_rng(seed), 5, 3, 2, 0.2, 1.0, field_max=0.3)
        induced = distribution_from_potential(rbm_to_mrf(rbm))
        assert tv_distance(induced, observed_marginal(rbm)) <= 1e-10
        assert tv_distance(induced, observed_distribution(as_ising(rbm))) <= 1e-10

    def test_support_stays_inside_hidden_neighbourhoods(self):
        rbm = random_rbm(make_rng(3), 6, 2, 3, 0.2, 1.5)
        supports = [set(rbm.hidden_support(j)) for j in range(rbm.n_hidden)]
        for S in rbm_to_mrf(rbm).terms:
            assert any(set(S) <= sup for sup in supports)


class TestBuildingBlock:
    def test_zero_target(self):
        block = solve_building_block((0, 1), 0.0)
        assert abs(block.coefficient()) <= 1e-12

    def test_pair_endpoint_and_midpoint(self):
        reach = feasible_coefficient(2, 1.0)
        assert reach == pytest.approx(math.log(math.cosh(1.0)) / 2)
        block = solve_building_block((3, 5), reach / 2, gamma=1.0)
        assert block.support == (3, 5)
        assert block.coefficient() == pytest.approx(reach / 2, abs=1e-12)
        assert block.l1_mass <= 1.0 + 1e-12

    @pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
    @pytest.mark.parametrize("frac", [-1.0, -0.4, 0.25, 0.9])
    def test_hits_target_within_budget(self, k, frac):
        target = frac * feasible_coefficient(k, 0.5)
        block = solve_building_block(tuple(range(k)), target)
        assert abs(block.coefficient() - target) <= 1e-12
        assert block.achieved_coefficient == pytest.approx(block.coefficient(), abs=1e-15)
        assert block.l1_mass <= 0.5 + 1e-12

    def test_infeasible_target_reports_range(self):
        reach = feasible_coefficient(3, 0.5)
        with pytest.raises(InfeasibleError) as err:
            solve_building_block((0, 1, 2), 2 * reach)
        assert err.value.feasible_range == pytest.approx((-reach, reach))

    def test_rejects_empty_support(self):
        with pytest.raises(ParameterError):
            solve_building_block((), 0.1)


class TestMrfToRbm:
    def test_empty_mrf(self):
        rbm = mrf_to_rbm(MrfPotential(3, {}))
        assert rbm.n_hidden == 0
        assert tv_distance(observed_marginal(rbm), distribution_from_potential(MrfPotential(3, {}))) <= 1e-15

    def test_pairwise(self):
        mrf = MrfPotential(3, {(0, 1): 0.3, (1, 2): -0.2, (0,): 0.1})
        rbm = mrf_to_rbm(mrf)
        assert rbm_to_mrf(rbm).max_abs_diff(mrf) <= 1e-9
        assert max(len(rbm.hidden_support(j)) for j in range(rbm.n_hidden)) == 2

    def test_triple_term(self):
        mrf = MrfPotential(4, {(0, 1, 2): 0.15, (2, 3): 0.2})
        rbm = mrf_to_rbm(mrf)
        back = rbm_to_mrf(rbm)
        assert back.max_abs_diff(mrf) <= 1e-9
        assert tv_distance(observed_marginal(rbm), distribution_from_potential(mrf)) <= 1e-9

    def test_rejects_offset(self):
        with pytest.raises(ParameterError):
            mrf_to_rbm(MrfPotential(2, {}, 0.5))

    @pytest.mark.parametrize("seed", range(15))
    def test_round_trip(self, seed):
        rng = make_rng(seed)
        n = int(rng.integers(2, 7))
        mrf = random_mrf(rng, n, min(3, n), int(rng.integers(1, 8)), coef_max=0.5)
        rbm = mrf_to_rbm(mrf)
        assert rbm_to_mrf(rbm).max_abs_diff(mrf) <= 1e-6
        assert tv_distance(observed_marginal(rbm), distribution_from_potential(mrf)) <= 1e-6
        terms = set(mrf.terms)
        for j in range(rbm.n_hidden):
            sup = rbm.hidden_support(j)
            # each unit sits on one monomial of degree at least two
            assert len(sup) <= mrf.order
            assert any(set(sup) <= set(S) for S in terms if len(S) >= 2)

    def test_level_isolation(self):
        # a unit on a pair changes only that pair and its singletons
        block = solve_building_block((0, 1), 0.05)
        coef = unit_fourier(np.array(block.weights), block.field)
        assert coef[0b11] == pytest.approx(0.05, abs=1e-12)
        assert abs(coef[0b01]) <= 1e-15 and abs(coef[0b10]) <= 1e-15


class TestSparseParity:
    def test_coupling(self):
        assert parity_coupling(0.2) == pytest.approx(0.5 * math.log(0.7 / 0.3))
        assert 1 / (1 + math.exp(-2 * parity_coupling(0.2))) == pytest.approx(0.7)
        with pytest.raises(ParameterError):
            parity_coupling(0.5)

    def test_potential_shape(self):
        p = sparse_parity_potential(5, (0, 2), 0.2)
        assert p.n_vars == 6 and set(p.terms) == {(0, 2, 5)}

    def test_agreement_probability(self):
        rbm = sparse_parity_rbm(5, (0, 2), 0.2)
        P = observed_marginal(rbm).probabilities()
        X = config_matrix(6)
        agree = X[:, 5] == X[:, 0] * X[:, 2]
        assert P[agree].sum() == pytest.approx(0.7, abs=1e-6)
        inputs = marginal(observed_marginal(rbm), range(5)).probabilities()
        assert 0.5 * np.abs(inputs - 1 / 32).sum() <= 1e-6

    def test_vanishing_noise_margin_gives_independent_label(self):
        rbm = sparse_parity_rbm(3, (0, 1), 1e-9)
        P = observed_marginal(rbm).probabilities()
        assert_allclose(P, np.full(16, 1 / 16), atol=1e-8)
