import numpy as np
import pytest
from hypothesis import given, strategies as st

from rbmlearn import io
from rbmlearn.errors import FormatError
from rbmlearn.generators import random_ferromagnet, random_mrf
from rbmlearn.model import IsingModel, MrfPotential, Rbm
from rbmlearn.sampler import SampleSet, make_rng, sample_exact

from conftest import random_rbm_params


def same_ising(a: IsingModel, b: IsingModel) -> bool:
    return (
        a.n_nodes == b.n_nodes
        and a.interactions == b.interactions
        and np.array_equal(a.fields, b.fields)
        and np.array_equal(a.hidden_mask, b.hidden_mask)
    )


class TestModelFiles:
    def test_ising_layout(self):
        m = IsingModel(3, {(0, 2): 0.5}, np.array([0.0, 0.1, 0.0]), np.array([False, False, True]))
        assert io.dumps_model(m) == "format=ising-v1\nn=3\nedge 1 3 0.5\nfield 2 0.1\nhidden 3\n"

    def test_rbm_layout(self):
        text = io.dumps_model(Rbm(np.array([[0.4], [0.0]]), np.array([0.0, 0.1]), np.zeros(1)))
        assert text == "format=rbm-v1\nn=2\nm=1\nedge 1 1 0.4\nfield1 2 0.1\n"

    def test_mrf_layout(self):
        text = io.dumps_model(MrfPotential(3, {(0, 1): 0.7, (0, 1, 2): -0.2}))
        assert text == "format=mrf-v1\nn=3\nterm 1,2 0.7\nterm 1,2,3 -0.2\n"

    @given(st.integers(0, 10_000))
    def test_ising_round_trip(self, seed):
        m = random_ferromagnet(make_rng(seed), 6, n_hidden=2)
        assert same_ising(io.loads_model(io.dumps_model(m)), m)

    @given(st.integers(0, 10_000))
    def test_rbm_round_trip(self, seed):
        r = random_rbm_params(make_rng(seed), 4, 3)
        back = io.loads_model(io.dumps_model(r))
        np.testing.assert_array_equal(back.weights, r.weights)
        np.testing.assert_array_equal(back.fields_observed, r.fields_observed)
        np.testing.assert_array_equal(back.fields_hidden, r.fields_hidden)

    @given(st.integers(0, 10_000))
    def test_mrf_round_trip(self, seed):
        p = random_mrf(make_rng(seed), 5, 3, 6)
        back = io.loads_model(io.dumps_model(p))
        assert back.terms == p.terms and back.n_vars == p.n_vars

    def test_comments_and_blank_lines(self):
        m = io.loads_model("# a model\nformat=ising-v1\n\nn=2\nedge 1 2 0.3  \n")
        assert m.interactions == {(0, 1): 0.3}

    @pytest.mark.parametrize(
        "text",
        [
            "format=ising-v2\nn=2\n",
            "format=ising-v1\nedge 1 2 0.3\n",
            "format=ising-v1\nn=2\nedge 1 3 0.3\n",
            "format=ising-v1\nn=2\nbond 1 2 0.3\n",
            "format=ising-v1\nn=2\nedge 1 2 abc\n",
            "format=rbm-v1\nn=2\nm=1\nedge 1 2 0.3\n",
            "format=mrf-v1\nn=2\nterm 1,1 0.3\n",
            "",
        ],
    )
    def test_malformed(self, text):
        with pytest.raises(FormatError):
            io.loads_model(text)

    def test_file_helpers(self, tmp_path):
        m = random_ferromagnet(make_rng(0), 4)
        io.write_model(tmp_path / "m.txt", m)
        assert same_ising(io.read_model(tmp_path / "m.txt"), m)


class TestSampleFiles:
    def test_round_trip(self):
        s = sample_exact(random_ferromagnet(make_rng(1), 4), 50, 3)
        back = io.loads_samples(io.dumps_samples(s))
        np.testing.assert_array_equal(back.rows, s.rows)
        assert (back.seed, back.source) == (s.seed, s.source)

    def test_layout(self):
        s = SampleSet(2, np.array([[1, -1]]), seed=4)
        assert io.dumps_samples(s) == "samples-v1 n=2 m=1 seed=4\n+1 -1\n"

    @pytest.mark.parametrize(
        "text",
        ["", "samples-v2 n=1 m=0 seed=0\n", "samples-v1 n=2 m=1 seed=0\n+1\n", "samples-v1 n=1 m=2 seed=0\n+1\n",
         "samples-v1 n=1 m=1 seed=0\n0\n", "samples-v1 n=1 m=1 seed=0 colour=red\n+1\n"],
    )
    def test_malformed(self, text):
        with pytest.raises(FormatError):
            io.loads_samples(text)


class TestStructureFiles:
    def test_round_trip(self):
        b = {0: (1, 3), 1: (0,), 2: (), 3: (0,)}
        text = io.dumps_structure(b)
        assert text == "structure-v1\nnbhd 1: 2 4\nnbhd 2: 1\nnbhd 3:\nnbhd 4: 1\n"
        assert io.loads_structure(text) == b

    def test_malformed(self):
        with pytest.raises(FormatError):
            io.loads_structure("structure-v1\nnbhd 1 2\n")
