"""
Unit tests for MorseInsight/components/morse.py

Tests cover digraph construction, SCC condensation (against a transitive
closure oracle), the Morse graph, nu/pred (against exhaustive attractor
enumeration), index pairs and Morse-set intervals.
"""

import networkx as nx
import numpy as np
import pytest

from config.config import Domain
from MorseInsight.components.enclosure import FiberTable
from MorseInsight.components.grid import CellComplex1D
from MorseInsight.components.morse import (
    Attractor,
    Digraph,
    enumerate_attractors,
    format_intervals,
    index_pair,
    is_attractor,
    lattice_meet,
    morse_graph,
    morse_set_intervals,
    nu,
    pred,
    scc_condense,
    verify_attractor_lattice,
)
from MorseInsight.utils.exceptions import ValidationError
from tests.conftest import random_fiber_ranges


def _reachability(adjacency):
    """Reflexive-transitive closure by Floyd-Warshall on a boolean matrix."""
    n = len(adjacency)
    reach = np.eye(n, dtype=bool)
    for v, targets in enumerate(adjacency):
        reach[v, list(targets)] = True
    for k in range(n):
        reach |= np.outer(reach[:, k], reach[k, :])
    return reach


def _random_adjacency(rng, n):
    return [sorted(set(rng.integers(0, n, size=int(rng.integers(1, 4))).tolist())) for _ in range(n)]


class TestDigraph:
    """Test suite for Digraph"""

    def test_from_ranges(self):
        """Test contiguous ranges expand to CSR targets"""
        g = Digraph.from_ranges([1, 0, 2], [2, 0, 2])
        assert g.n == 3
        assert g.successors(0).tolist() == [1, 2]
        assert g.edge_count == 4

    def test_empty_range_rejected(self):
        """Test a cell without image is rejected"""
        with pytest.raises(ValidationError):
            Digraph.from_ranges([0, 1], [0, 0])
        with pytest.raises(ValidationError):
            Digraph.from_adjacency([[1], []])

    def test_image_ranges_and_adjacency_agree(self):
        """Test the prefix-sum image equals the CSR image"""
        first, last = [2, 0, 1, 3], [3, 1, 2, 3]
        ranged = Digraph.from_ranges(first, last)
        listed = Digraph.from_adjacency([range(a, b + 1) for a, b in zip(first, last)])
        mask = np.array([True, False, True, False])
        assert np.array_equal(ranged.image(mask), listed.image(mask))
        assert ranged.image(mask).tolist() == [False, True, True, True]

    def test_to_networkx(self):
        """Test the networkx view keeps every edge"""
        g = Digraph.from_adjacency([[1], [0, 2], [2]])
        assert sorted(g.to_networkx().edges()) == [(0, 1), (1, 0), (1, 2), (2, 2)]


class TestSccCondense:
    """Test suite for scc_condense"""

    def test_hand_example(self):
        """Test 0->1, 1->0, 1->2, 2->2 gives {0,1} and {2}"""
        cond = scc_condense(Digraph.from_adjacency([[1], [0, 2], [2]]))
        assert cond.labels[0] == cond.labels[1] != cond.labels[2]
        assert cond.dag.has_edge(int(cond.labels[0]), int(cond.labels[2]))
        assert cond.recurrent.all()

    def test_isolated_loops(self):
        """Test n self-loops give n recurrent components"""
        cond = scc_condense(Digraph.from_adjacency([[i] for i in range(6)]))
        assert cond.n_components == 6
        assert cond.recurrent.all()

    def test_matches_transitive_closure(self):
        """Test 200 random digraphs against mutual reachability"""
        rng = np.random.default_rng(17)
        for _ in range(200):
            n = int(rng.integers(1, 51))
            adjacency = _random_adjacency(rng, n)
            labels = scc_condense(Digraph.from_adjacency(adjacency)).labels
            reach = _reachability(adjacency)
            mutual = reach & reach.T
            assert np.array_equal(labels[:, None] == labels[None, :], mutual)


class TestMorseGraph:
    """Test suite for morse_graph"""

    def test_hand_example(self):
        """Test nodes {0,1} and {2} with {2} below {0,1}"""
        mg = morse_graph(Digraph.from_adjacency([[1], [0, 2], [2]]))
        assert [n.tolist() for n in mg.nodes] == [[0, 1], [2]]
        assert mg.labels == ["M0", "M1"]
        assert mg.below(0) == {1}
        assert mg.minimal_nodes() == [1]

    def test_gradient_chain(self):
        """Test 0->1->2->3 with 3->3 has the single node {3}"""
        g = Digraph.from_adjacency([[1], [2], [3], [3]])
        mg = morse_graph(g)
        assert [n.tolist() for n in mg.nodes] == [[3]]
        assert nu(mg, g, 0).cells.tolist() == [3]

    def test_bistability_shape(self, repeller_fixture):
        """Test two attracting ends and a repelling middle give two minimal nodes"""
        _, g = repeller_fixture
        mg = morse_graph(g)
        assert [n.tolist() for n in mg.nodes] == [[0], [3, 4], [7]]
        assert mg.minimal_nodes() == [0, 2]
        assert mg.hasse_edges() == [(1, 0), (1, 2)]
        assert mg.covers(1, 0) and not mg.covers(0, 1)

    def test_hasse_reduced_once(self, monkeypatch):
        """Test the transitive reduction is computed once and shared by covers and hasse_edges"""
        calls = []
        reduce = nx.transitive_reduction

        def counting(graph):
            calls.append(graph)
            return reduce(graph)

        monkeypatch.setattr(nx, "transitive_reduction", counting)
        mg = morse_graph(Digraph.from_adjacency([[0, 1], [1, 2], [2]]))
        assert mg.below(0) == {1, 2}
        assert mg.hasse_edges() == [(0, 1), (1, 2)]
        assert mg.covers(0, 1) and mg.covers(1, 2)
        assert not mg.covers(0, 2)
        mg.hasse_edges().clear()
        assert mg.hasse_edges() == [(0, 1), (1, 2)]
        assert len(calls) == 1

    def test_nodes_are_strongly_connected(self):
        """Test every node is strongly connected and has an internal edge"""
        rng = np.random.default_rng(3)
        for _ in range(50):
            adjacency = _random_adjacency(rng, 30)
            g = Digraph.from_adjacency(adjacency)
            reach = _reachability(adjacency)
            for cells in morse_graph(g).nodes:
                assert reach[np.ix_(cells, cells)].all()
                assert any(t in set(cells.tolist()) for c in cells for t in adjacency[c])


class TestAttractors:
    """Test suite for nu, pred and the attractor lattice"""

    def test_nu_of_minimal_node(self, swap_fixture):
        """Test nu of the swapped attracting edges is exactly those edges"""
        _, g = swap_fixture
        mg = morse_graph(g)
        assert nu(mg, g, "M0").cells.tolist() == [1, 6]
        assert len(pred(mg, g, "M0")) == 0

    def test_pred_of_repeller(self, repeller_fixture):
        """Test pred of the repelling middle is the union of both ends"""
        _, g = repeller_fixture
        mg = morse_graph(g)
        assert nu(mg, g, 1).cells.tolist() == list(range(8))
        assert pred(mg, g, 1).cells.tolist() == [0, 7]

    def test_unknown_node(self, swap_fixture):
        """Test unknown labels and indices are rejected"""
        _, g = swap_fixture
        mg = morse_graph(g)
        with pytest.raises(ValidationError):
            nu(mg, g, "M9")
        with pytest.raises(ValidationError):
            nu(mg, g, 17)

    def test_exhaustive_lattice_oracle(self, unit_domain):
        """Test nu and pred against every attractor of 100 random 16-cell maps"""
        rng = np.random.default_rng(8)
        complex_ = CellComplex1D(unit_domain, 4)
        for _ in range(100):
            first, last = random_fiber_ranges(complex_, rng, spread=0.03)
            g = Digraph.from_fibers(FiberTable.from_ranges(complex_, first, last))
            mg = morse_graph(g)
            attractors = enumerate_attractors(g)
            for node in range(len(mg)):
                cells = set(mg.nodes[node].tolist())
                containing = [a for a in attractors if cells <= set(a.cells.tolist())]
                smallest = min(containing, key=len)
                assert nu(mg, g, node) == smallest
                inside = [a for a in attractors if a.issubset(nu(mg, g, node)) and a != nu(mg, g, node)]
                assert pred(mg, g, node) == max(inside, key=len)
                assert all(a.issubset(pred(mg, g, node)) for a in inside)
            verify_attractor_lattice(mg, g)

    def test_lattice_meet(self):
        """Test the meet settles the intersection under F"""
        g = Digraph.from_adjacency([[0, 1], [2], [2], [1, 3]])
        a = Attractor([0, 1, 2])
        b = Attractor([1, 2, 3])
        assert is_attractor(g, a.mask(g.n)) and is_attractor(g, b.mask(g.n))
        # the intersection {1, 2} drains into {2}
        assert not is_attractor(g, Attractor([1, 2]).mask(g.n))
        assert lattice_meet(g, a, b) == Attractor([2])
        assert len(lattice_meet(g, a, Attractor([3]))) == 0

    def test_enumeration_limit(self):
        """Test exhaustive enumeration refuses large digraphs"""
        g = Digraph.from_adjacency([[i] for i in range(20)])
        with pytest.raises(ValidationError):
            enumerate_attractors(g)

    def test_index_pair_closures(self, swap_fixture):
        """Test a minimal interval of k edges has k+1 closure vertices per piece"""
        _, g = swap_fixture
        mg = morse_graph(g)
        pair = index_pair(mg, g, 0)
        assert pair.closure1_vertices.tolist() == [1, 2, 6, 7]
        assert pair.closure0_vertices.size == 0
        again = np.union1d(pair.closure1_vertices, np.union1d(pair.closure1_edges, pair.closure1_edges + 1))
        assert np.array_equal(again, pair.closure1_vertices)


class TestMorseSetIntervals:
    """Test suite for morse_set_intervals and format_intervals"""

    def test_single_interval_at_b9(self):
        """Test cells 47..142 at B=9 print as [0.09179688, 0.27929688]"""
        complex_ = CellComplex1D(Domain(lower=0.0, upper=1.0), 9)
        intervals = morse_set_intervals(complex_, range(47, 143))
        assert format_intervals(intervals) == "[0.09179688, 0.27929688]"

    def test_gap_splits(self, complex8):
        """Test adjacent cells merge and a one-cell gap splits"""
        intervals = morse_set_intervals(complex8, Attractor([1, 2, 4]))
        assert intervals == [(0.125, 0.375), (0.5, 0.625)]
        assert format_intervals(intervals) == "[0.12500000, 0.37500000] U [0.50000000, 0.62500000]"

    def test_measure_conservation(self, complex8):
        """Test total length equals cell count times eps"""
        cells = [0, 2, 3, 7]
        total = sum(hi - lo for lo, hi in morse_set_intervals(complex8, cells))
        assert total == pytest.approx(len(cells) * complex8.epsilon)

    def test_empty(self, complex8):
        """Test an empty cell set has no intervals"""
        assert morse_set_intervals(complex8, []) == []
        assert format_intervals([]) == ""
