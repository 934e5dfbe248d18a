import numpy as np
import pytest

from sis_pmcmc.errors import ContractViolation, DataLoadError
from sis_pmcmc.model import AgentRates, AgentStateVector, transition_probability
from sis_pmcmc.network import block_network, fully_connected, grid8_network, load_edge_list


def _check_invariants(net):
    assert net.is_symmetric()
    assert not net.has_self_loops()
    lists = net.neighbor_lists
    for n, neighbours in enumerate(lists):
        assert len(np.unique(neighbours)) == len(neighbours) == net.degrees[n]
    assert int(net.degrees.sum()) % 2 == 0


class TestFullyConnected:
    def test_pair(self):
        net = fully_connected(2)
        np.testing.assert_array_equal(net.neighbors(0), [1])
        np.testing.assert_array_equal(net.neighbors(1), [0])

    def test_degrees(self):
        assert np.all(fully_connected(100).degrees == 99)

    def test_too_small(self):
        with pytest.raises(ContractViolation):
            fully_connected(1)

    def test_invariants(self):
        _check_invariants(fully_connected(7))

    def test_symmetry_spot_check_large(self):
        net = fully_connected(3711)
        rng = np.random.default_rng(0)
        for n, m in rng.integers(0, 3711, size=(200, 2)):
            if n != m:
                assert (m in net.neighbors(n)) == (n in net.neighbors(m))


class TestBlockNetwork:
    def test_degrees(self):
        net = block_network(["a", "a", "b", "b", "b"])
        np.testing.assert_array_equal(net.degrees, [1, 1, 2, 2, 2])
        _check_invariants(net)

    def test_undersized_group(self):
        with pytest.raises(ContractViolation):
            block_network([0, 0, 1])

    def test_two_components(self):
        labels = np.r_[np.zeros(1045), np.ones(2666)]
        net = block_network(labels)
        assert net.n_components() == 2
        assert sorted(set(net.degrees.tolist())) == [1044, 2665]

    def test_no_cross_group_pressure(self):
        net = block_network([0, 0, 1, 1])
        rates = AgentRates(np.zeros(4), np.ones(4), np.full(4, 0.1))
        state = AgentStateVector(np.array([1, 0, 0, 0]))
        assert transition_probability(2, state, rates, net) == 0.0
        assert transition_probability(1, state, rates, net) == 1.0

    def test_block_counts_match_csr(self):
        labels = np.repeat([0, 1, 2], [3, 4, 5])
        net = block_network(labels)
        rng = np.random.default_rng(4)
        ensemble = (rng.random((6, 12)) < 0.4).astype(np.uint8)
        adjacency = net.to_sparse().toarray()
        np.testing.assert_array_equal(net.infected_neighbor_counts(ensemble), ensemble @ adjacency.T)


class TestGrid8:
    def test_wrapped_degrees(self):
        net = grid8_network(3, 3, wrap=True)
        assert np.all(net.degrees == 8)
        _check_invariants(net)

    def test_unwrapped_degrees(self):
        net = grid8_network(3, 3, wrap=False)
        assert net.degrees[0] == 3
        assert net.degrees[4] == 8
        _check_invariants(net)

    def test_dimension_mismatch(self):
        with pytest.raises(ContractViolation):
            grid8_network(3, 4, n_agents=10)

    def test_wrap_needs_three(self):
        with pytest.raises(ContractViolation):
            grid8_network(2, 5, wrap=True)

    def test_counts_single_and_ensemble_agree(self):
        net = grid8_network(4, 5, wrap=True)
        rng = np.random.default_rng(1)
        ensemble = (rng.random((3, 20)) < 0.5).astype(np.uint8)
        batch = net.infected_neighbor_counts(ensemble)
        for p in range(3):
            np.testing.assert_array_equal(net.infected_neighbor_counts(ensemble[p]), batch[p])


class TestEdgeList:
    def test_symmetrised_and_deduplicated(self, tmp_path):
        path = tmp_path / "edges.txt"
        path.write_text("# custom\n0 1\n1 0\n1 2\n2 2\n")
        net = load_edge_list(str(path), 4)
        np.testing.assert_array_equal(net.degrees, [1, 2, 1, 0])
        _check_invariants(net)

    def test_index_out_of_range(self, tmp_path):
        path = tmp_path / "edges.txt"
        path.write_text("0 5\n")
        with pytest.raises(DataLoadError):
            load_edge_list(str(path), 3)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataLoadError):
            load_edge_list(str(tmp_path / "nope.txt"), 3)
