import numpy as np
import pytest
from hypothesis import given, strategies as st

from rbmlearn.errors import ParameterError
from rbmlearn.exact import enumerate_model, tv_distance
from rbmlearn.model import (
    IsingModel,
    MrfPotential,
    NondegeneracyParams,
    Rbm,
    all_subsets,
    as_ising,
    ghost_vertex,
    graph_blankets,
    latent_paths,
    max_latent_path,
    validate_nondegeneracy,
)
from rbmlearn.sampler import make_rng
from rbmlearn.exact import ExactDistribution, config_matrix

from conftest import random_rbm_params


def rbm_joint_oracle(rbm: Rbm) -> ExactDistribution:
    """Joint table of (x, y) built directly from x'Wy + h1.x + h2.y, x in the low bits."""
    n, m = rbm.n_observed, rbm.n_hidden
    Z = config_matrix(n + m).astype(float)
    x, y = Z[:, :n], Z[:, n:]
    lw = np.einsum("ci,ij,cj->c", x, rbm.weights, y) + x @ rbm.fields_observed + y @ rbm.fields_hidden
    return ExactDistribution.from_log_weights(lw)


class TestIsingModel:
    def test_weight_is_symmetric(self):
        m = IsingModel(3, {(2, 0): 0.5}, np.zeros(3))
        assert m.weight(0, 2) == m.weight(2, 0) == 0.5
        assert m.weight(0, 1) == 0.0

    def test_self_loop_rejected(self):
        with pytest.raises(ParameterError):
            IsingModel(2, {(1, 1): 0.3}, np.zeros(2))

    def test_hidden_mask_length_checked(self):
        with pytest.raises(ParameterError):
            IsingModel(2, {}, np.zeros(2), np.zeros(3, dtype=bool))

    def test_ferromagnetic_flag(self):
        assert IsingModel(2, {(0, 1): 0.5}, np.array([0.1, 0.0])).is_ferromagnetic()
        assert not IsingModel(2, {(0, 1): -0.5}, np.zeros(2)).is_ferromagnetic()
        assert not IsingModel(2, {(0, 1): 0.5}, np.array([-0.1, 0.0])).is_ferromagnetic()

    def test_coupling_matrix_matches_weights(self):
        m = IsingModel(3, {(0, 1): 0.5, (1, 2): -0.25}, np.zeros(3))
        J = m.coupling_matrix()
        np.testing.assert_array_equal(J, J.T)
        assert J[0, 1] == 0.5 and J[2, 1] == -0.25 and J[0, 2] == 0.0


class TestAsIsing:
    def test_zero_rbm_has_no_interactions(self):
        m = as_ising(Rbm(np.zeros((3, 2))))
        assert m.interactions == {}
        assert m.n_nodes == 5

    def test_over_parameterized_example(self):
        rbm = Rbm(np.array([[1.0, -1.0], [1.0, 1.0]]))
        m = as_ising(rbm)
        assert m.interactions == {(0, 2): 1.0, (0, 3): -1.0, (1, 2): 1.0, (1, 3): 1.0}
        np.testing.assert_array_equal(m.hidden_mask, [False, False, True, True])

    @pytest.mark.parametrize("seed", range(10))
    def test_joint_law_matches_rbm(self, seed):
        rng = make_rng(seed)
        rbm = random_rbm_params(rng, int(rng.integers(1, 7)), int(rng.integers(1, 5)))
        assert tv_distance(enumerate_model(as_ising(rbm)), rbm_joint_oracle(rbm)) <= 1e-12

    def test_bipartite_by_construction(self):
        m = as_ising(random_rbm_params(make_rng(3), 4, 3))
        for a, b in m.interactions:
            assert m.hidden_mask[a] != m.hidden_mask[b]


class TestGhostVertex:
    def test_zero_field_adds_isolated_node(self):
        m = IsingModel(2, {(0, 1): 0.4}, np.zeros(2))
        g = ghost_vertex(m)
        assert g.n_nodes == 3 and g.interactions == m.interactions

    def test_field_becomes_edge(self):
        g = ghost_vertex(IsingModel(2, {}, np.array([0.5, 0.0])))
        assert g.interactions == {(0, 2): 0.5}
        np.testing.assert_array_equal(g.fields, np.zeros(3))

    @pytest.mark.parametrize("seed", range(50))
    def test_conditional_on_ghost_is_original(self, seed):
        rng = make_rng(seed)
        inter = {(i, j): float(rng.normal()) for i in range(4) for j in range(i + 1, 4) if rng.random() < 0.6}
        m = IsingModel(4, inter, rng.normal(size=4))
        joint = enumerate_model(ghost_vertex(m))
        lw = joint.log_weights[1 << 4 :]  # ghost bit set
        assert tv_distance(ExactDistribution.from_log_weights(lw), enumerate_model(m)) <= 1e-12


class TestNondegeneracy:
    def test_empty_model_passes(self):
        assert validate_nondegeneracy(IsingModel(3, {}, np.zeros(3)), NondegeneracyParams(0.5, 1.0)).passed

    def test_weak_edge_named(self):
        rep = validate_nondegeneracy(IsingModel(2, {(0, 1): 0.05}, np.zeros(2)), NondegeneracyParams(0.1, 1.0))
        assert rep.violated_clauses == (1,)
        assert rep.weak_edges == ((0, 1, 0.05),)

    def test_heavy_node_mass(self):
        m = IsingModel(3, {(0, 1): 1.0, (0, 2): 1.5}, np.array([0.6, 0.0, 0.0]))
        rep = validate_nondegeneracy(m, NondegeneracyParams(0.5, 3.0))
        assert rep.violated_clauses == (2,)
        (node, mass), = rep.heavy_nodes
        assert node == 0 and mass == pytest.approx(3.1)

    def test_alpha_above_beta_rejected(self):
        with pytest.raises(ParameterError):
            NondegeneracyParams(2.0, 1.0)

    @given(
        st.integers(0, 10_000),
        st.floats(0.05, 0.5),
        st.floats(0.6, 3.0),
        st.floats(0.0, 0.05),
        st.floats(0.0, 2.0),
    )
    def test_loosening_never_breaks_a_pass(self, seed, alpha, beta, d_alpha, d_beta):
        rng = make_rng(seed)
        inter = {(i, j): float(rng.uniform(0, 1)) for i in range(5) for j in range(i + 1, 5) if rng.random() < 0.5}
        m = IsingModel(5, inter, rng.uniform(0, 0.5, 5))
        if validate_nondegeneracy(m, NondegeneracyParams(alpha, beta)).passed:
            loose = NondegeneracyParams(max(alpha - d_alpha, 1e-3), beta + d_beta)
            assert validate_nondegeneracy(m, loose).passed


class TestMrfPotential:
    def test_empty_set_not_stored(self):
        with pytest.raises(ParameterError):
            MrfPotential(2, {(): 1.0})

    def test_evaluate_is_sum_of_parities(self):
        p = MrfPotential(3, {(0, 1): 0.7, (2,): -0.3, (0, 1, 2): 0.2})
        x = np.array([1, -1, -1])
        assert p.evaluate(x) == pytest.approx(0.7 * -1 + -0.3 * -1 + 0.2 * 1)

    def test_table_matches_evaluate(self):
        p = MrfPotential(3, {(0, 1): 0.7, (2,): -0.3})
        X = config_matrix(3)
        np.testing.assert_allclose(p.table(), [p.evaluate(x) for x in X])

    def test_neighborhood(self):
        p = MrfPotential(4, {(0, 1): 0.7, (1, 2, 3): 0.1})
        assert p.neighborhood(1) == (0, 2, 3)
        assert p.neighborhood(0) == (1,)

    def test_arithmetic(self):
        p = MrfPotential(2, {(0, 1): 0.5})
        q = MrfPotential(2, {(0, 1): 0.5, (0,): 0.2})
        assert (q - p).max_abs_diff(MrfPotential(2, {(0,): 0.2})) == pytest.approx(0.0, abs=1e-15)
        assert (p + p).coefficient((0, 1)) == 1.0


class TestGraphBlankets:
    def test_rbm_two_hop(self):
        W = np.array([[0.5, 0.0], [0.5, 0.5], [0.0, 0.5], [0.0, 0.0]])
        m = as_ising(Rbm(W))
        assert graph_blankets(m) == {0: (1,), 1: (0, 2), 2: (1,), 3: ()}
        assert max_latent_path(m) == 2

    def test_latent_chain_lengths(self):
        m = IsingModel(4, {(0, 2): 0.3, (2, 3): 0.3, (3, 1): 0.3}, np.zeros(4), np.array([False, False, True, True]))
        assert latent_paths(m) == {0: {1: 3}, 1: {0: 3}}

    def test_all_subsets_order(self):
        assert all_subsets([2, 0, 1], 2) == [(), (0,), (1,), (2,), (0, 1), (0, 2), (1, 2)]
