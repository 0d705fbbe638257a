"""
Unit tests for MorseInsight/components/conley.py

Tests cover relative homology of 1D pairs (against an independent rank
computation), the chain selector, index maps on hand-built maps, index
interpretation and the connecting-orbit test.
"""

import numpy as np
import pytest

from MorseInsight.components.conley import (
    ConleyIndex,
    ConleyIndexer,
    IndexKind,
    RelativePair,
    build_selector,
    index_map,
    interpret,
    relative_homology,
)
from MorseInsight.components.enclosure import FiberTable
from MorseInsight.components.grid import CellComplex1D
from MorseInsight.components.morse import Attractor, Digraph, IndexPairCells, index_pair, morse_graph
from MorseInsight.utils import finite_field as ff
from MorseInsight.utils.exceptions import AcyclicityError, ValidationError
from tests.conftest import random_fiber_ranges


def _rank_mod5(matrix):
    """Plain row reduction over Z5, kept apart from the package code."""
    rows = [[int(v) % 5 for v in row] for row in matrix]
    rank = 0
    cols = len(rows[0]) if rows else 0
    for c in range(cols):
        pivot = next((r for r in range(rank, len(rows)) if rows[r][c]), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        inv = pow(rows[rank][c], 3, 5)  # a^(p-2)
        rows[rank] = [(v * inv) % 5 for v in rows[rank]]
        for r in range(len(rows)):
            if r != rank and rows[r][c]:
                factor = rows[r][c]
                rows[r] = [(a - factor * b) % 5 for a, b in zip(rows[r], rows[rank])]
        rank += 1
    return rank


def _random_pair(rng, n_edges):
    e1 = np.flatnonzero(rng.random(n_edges) < 0.6)
    v1 = np.union1d(np.flatnonzero(rng.random(n_edges + 1) < 0.2), np.union1d(e1, e1 + 1))
    e0 = e1[rng.random(e1.size) < 0.3]
    v0 = np.union1d(v1[rng.random(v1.size) < 0.2], np.union1d(e0, e0 + 1))
    return RelativePair.from_closures(n_edges, e1, v1, e0, v0)


def _index(fixture, complex_, node, rule="leftmost"):
    fibers, g = fixture
    indexer = ConleyIndexer(complex_, fibers, g, morse_graph(g), rule=rule)
    return indexer.conley_index(node)


class TestRelativeHomology:
    """Test suite for relative_homology"""

    def test_contractible_path(self):
        """Test a 2-edge path relative to nothing has one H0 class"""
        pair = RelativePair.from_closures(8, [2, 3], [])
        h = relative_homology(pair)
        assert (h.dim0, h.dim1) == (1, 0)

    def test_relative_circle(self):
        """Test a k-edge path relative to its endpoints has one H1 class"""
        pair = RelativePair.from_closures(8, [1, 2, 3, 4], [], [], [1, 5])
        h = relative_homology(pair)
        assert (h.dim0, h.dim1) == (0, 1)
        assert h.h1_chains.tolist() == [[1, 5]]

    def test_half_anchored_path_is_acyclic(self):
        """Test a path anchored at one end has no homology"""
        pair = RelativePair.from_closures(8, [1, 2, 3], [], [], [4])
        h = relative_homology(pair)
        assert (h.dim0, h.dim1) == (0, 0)

    def test_isolated_vertex(self):
        """Test a lone vertex is an H0 class"""
        pair = RelativePair.from_closures(8, [], [6])
        h = relative_homology(pair)
        assert (h.dim0, h.dim1) == (1, 0)
        assert h.h0_reps.tolist() == [6]

    def test_boundary_matrix(self):
        """Test the boundary of an edge is head minus tail"""
        pair = RelativePair.from_closures(4, [1], [])
        assert pair.boundary.tolist() == [[4], [1]]

    def test_closure0_outside_closure1_rejected(self):
        """Test pairs with closure0 not inside closure1 are rejected"""
        with pytest.raises(ValidationError):
            RelativePair.from_closures(8, [1], [], [5])

    def test_from_index_pair(self):
        """Test IndexPairCells input needs n_edges and matches from_closures"""
        cells = IndexPairCells.from_attractors(Attractor([0, 1, 2, 3]), Attractor([0]))
        with pytest.raises(ValidationError):
            relative_homology(cells)
        h = relative_homology(cells, n_edges=8)
        assert (h.dim0, h.dim1) == (0, 0)

    def test_projections(self):
        """Test projecting boundaries gives zero and cycles give their coefficient"""
        pair = RelativePair.from_closures(8, [0, 1, 2, 3, 5], [], [3], [])
        h = relative_homology(pair)
        assert (h.dim0, h.dim1) == (1, 0)
        # vertices of the chain anchored at vertex 3 are null-homologous
        chain = np.zeros(9, dtype=np.int64)
        chain[0], chain[2] = 1, 4
        assert h.project0(chain).tolist() == [0]

    def test_dims_match_rank_oracle(self):
        """Test 200 random pairs of up to 30 cells against an independent rank"""
        rng = np.random.default_rng(2024)
        for _ in range(200):
            n = int(rng.integers(1, 15))
            pair = _random_pair(rng, n)
            h = relative_homology(pair)
            b0, b1 = pair.basis0.size, pair.basis1.size
            r = _rank_mod5(pair.boundary) if b0 and b1 else 0
            assert (h.dim0, h.dim1) == (b0 - r, b1 - r)
            assert b1 - b0 == h.dim1 - h.dim0


class TestBuildSelector:
    """Test suite for build_selector"""

    def test_constant_map(self, complex8):
        """Test every edge sent to edge 5 gives phi0 = v5 and empty phi1"""
        fibers = FiberTable.from_ranges(complex8, [5] * 8, [5] * 8)
        s = build_selector(fibers, complex8)
        assert s.phi0.tolist() == [5] * 9
        assert np.all(s.sign == 0)

    def test_identity_like_map(self, complex8):
        """Test F(e_i) = {e_i} selects phi0(v_i) = v_i with short chains"""
        idx = list(range(8))
        s = build_selector(FiberTable.from_ranges(complex8, idx, idx), complex8)
        for v in range(1, 8):
            assert s.phi0[v] in (v, v - 1)
        assert np.all(s.stop - s.start <= 1)

    def test_rightmost_rule(self, complex8):
        """Test the rightmost rule takes the top of each intersection"""
        fibers = FiberTable.from_ranges(complex8, [5] * 8, [5] * 8)
        s = build_selector(fibers, complex8, rule="rightmost")
        assert s.phi0.tolist() == [6] * 9

    def test_unknown_rule(self, complex8):
        """Test unknown rules are rejected"""
        fibers = FiberTable.from_ranges(complex8, [5] * 8, [5] * 8)
        with pytest.raises(ValidationError):
            build_selector(fibers, complex8, rule="middle")

    def test_disjoint_images_raise(self, complex8):
        """Test disjoint incident images raise AcyclicityError naming the vertex"""
        first = [0, 0, 0, 6, 6, 6, 6, 6]
        last = [0, 0, 1, 6, 6, 6, 6, 6]
        with pytest.raises(AcyclicityError) as exc_info:
            build_selector(FiberTable.from_ranges(complex8, first, last), complex8)
        assert exc_info.value.vertex == 3

    def test_commutation_on_random_tables(self, unit_domain):
        """Test d(phi1(e)) = phi0(head) - phi0(tail) on random fiber tables"""
        rng = np.random.default_rng(5)
        complex_ = CellComplex1D(unit_domain, 5)
        for _ in range(50):
            first, last = random_fiber_ranges(complex_, rng)
            s = build_selector(FiberTable.from_ranges(complex_, first, last), complex_)
            for e in range(complex_.n_edges):
                boundary = np.zeros(complex_.n_vertices, dtype=np.int64)
                chain = s.chain(e)
                for f in np.flatnonzero(chain):
                    boundary[f + 1] += chain[f]
                    boundary[f] -= chain[f]
                expected = np.zeros(complex_.n_vertices, dtype=np.int64)
                expected[s.phi0[e + 1]] += 1
                expected[s.phi0[e]] -= 1
                assert np.array_equal(ff.as_field(boundary), ff.as_field(expected))
                assert first[e] <= s.start[e] and s.stop[e] <= last[e] + 1


class TestIndexMap:
    """Test suite for index_map on hand-built maps"""

    def test_swap_gives_permutation(self, complex8, swap_fixture):
        """Test the attracting pair of swapped edges maps H0 by [[0, 1], [1, 0]]"""
        fibers, _ = swap_fixture
        pair = RelativePair.from_closures(8, [1, 6], [])
        maps = index_map(pair, build_selector(fibers, complex8))
        assert maps[0].tolist() == [[0, 1], [1, 0]]
        assert maps[1].shape == (0, 0)

    def test_repeller_gives_degree_one(self, complex8, repeller_fixture):
        """Test the repelling middle relative to both ends maps H1 by [1]"""
        fibers, _ = repeller_fixture
        pair = RelativePair.from_closures(8, range(8), [], [0, 7], [])
        maps = index_map(pair, build_selector(fibers, complex8))
        assert maps[0].shape == (0, 0)
        assert maps[1].tolist() == [[1]]

    def test_empty_homology(self, complex8, drift_fixture):
        """Test an acyclic pair gives empty matrices"""
        fibers, _ = drift_fixture
        pair = RelativePair.from_closures(8, [3, 4, 5, 6, 7], [], [7], [])
        maps = index_map(pair, build_selector(fibers, complex8))
        assert maps[0].shape == (0, 0) and maps[1].shape == (0, 0)


class TestConleyIndex:
    """Test suite for conley_index and interpret"""

    def test_stable_fixed_point(self, complex8, repeller_fixture):
        """Test the attracting end has index (x - 1, 0)"""
        index = _index(repeller_fixture, complex8, 0)
        assert index.text() == ("x - 1", "0")
        assert interpret(index).kind == IndexKind.FIXED_POINT

    def test_unstable_fixed_point(self, complex8, repeller_fixture):
        """Test the repelling middle has index (0, x - 1)"""
        index = _index(repeller_fixture, complex8, 1)
        assert index.text() == ("0", "x - 1")
        assert str(interpret(index)) == "fixed_point"

    def test_period_two_attractor(self, complex8, swap_fixture):
        """Test the swapped attracting edges have index (x^2 - 1, 0)"""
        index = _index(swap_fixture, complex8, 0)
        assert index.text() == ("x^2 - 1", "0")
        cls = interpret(index)
        assert cls.kind == IndexKind.PERIODIC and cls.period == 2
        assert str(cls) == "periodic(2)"

    def test_weak_recurrence_is_trivial(self, complex8, drift_fixture):
        """Test the drifting edge has a trivial index"""
        index = _index(drift_fixture, complex8, 0)
        assert index.trivial
        assert interpret(index).kind == IndexKind.TRIVIAL

    def test_interpret_forms(self):
        """Test classification of canonical matrix forms"""
        cycle4 = np.roll(np.eye(4, dtype=np.int64), 1, axis=0)
        empty = np.zeros((0, 0), dtype=np.int64)
        assert str(interpret(ConleyIndex.from_matrices(empty, cycle4))) == "periodic(4)"
        assert str(interpret(ConleyIndex.from_matrices(empty, empty))) == "trivial"
        assert str(interpret(ConleyIndex.from_matrices([[4]], empty))) == "fixed_point"
        both = ConleyIndex.from_matrices([[1]], [[1]])
        assert interpret(both).kind == IndexKind.NONTRIVIAL_OTHER
        assert interpret(ConleyIndex.from_matrices([[2]], empty)).kind == IndexKind.NONTRIVIAL_OTHER

    def test_direct_sum_nests_invariant_factors(self):
        """Test swap plus identity sums to invariant factors (x - 1, x^2 - 1)"""
        empty = np.zeros((0, 0), dtype=np.int64)
        total = ConleyIndex.from_matrices([[0, 1], [1, 0]], empty).direct_sum(ConleyIndex.from_matrices([[1]], empty))
        assert [ff.poly_to_string(f) for f in total.invariant_factors[0]] == ["x - 1", "x^2 - 1"]
        assert total.cores[0].dimension == 3

    def test_selector_rule_independence(self, unit_domain):
        """Test leftmost and rightmost selectors give the same invariants on random maps"""
        rng = np.random.default_rng(99)
        complex_ = CellComplex1D(unit_domain, 4)
        for _ in range(100):
            first, last = random_fiber_ranges(complex_, rng, spread=0.02)
            fibers = FiberTable.from_ranges(complex_, first, last)
            g = Digraph.from_fibers(fibers)
            mg = morse_graph(g)
            left = ConleyIndexer(complex_, fibers, g, mg, rule="leftmost")
            right = ConleyIndexer(complex_, fibers, g, mg, rule="rightmost")
            for node in range(len(mg)):
                assert left.conley_index(node).key() == right.conley_index(node).key()


class TestPairIndex:
    """Test suite for ConleyIndexer.pair_index"""

    def test_matches_node_index(self, complex8, repeller_fixture):
        """Test the index of a node's own index pair equals its Conley index"""
        fibers, g = repeller_fixture
        mg = morse_graph(g)
        indexer = ConleyIndexer(complex8, fibers, g, mg)
        for node in range(len(mg)):
            pair = index_pair(mg, g, node)
            assert indexer.pair_index(pair.A1, pair.A0).key() == indexer.conley_index(node).key()

    def test_empty_pair_is_trivial(self, complex8, repeller_fixture):
        """Test an empty attractor pair has zero homology"""
        fibers, g = repeller_fixture
        indexer = ConleyIndexer(complex8, fibers, g, morse_graph(g))
        empty = Attractor(np.array([], dtype=np.int64))
        index = indexer.pair_index(empty, empty)
        assert index.text() == ("0", "0")
        assert interpret(index).kind is IndexKind.TRIVIAL


class TestConnectingOrbit:
    """Test suite for connecting_orbit"""

    def test_repeller_connects_to_attractor(self, complex8, repeller_fixture):
        """Test the combined index differs from the sum for repeller over attractor"""
        fibers, g = repeller_fixture
        indexer = ConleyIndexer(complex8, fibers, g, morse_graph(g))
        result = indexer.connecting_orbit(1, 0)
        assert result.connecting_orbit is True
        assert result.combined.text() == ("x - 1", "0")

    def test_trivial_upper_node_has_no_forced_connection(self, complex8, drift_fixture):
        """Test the combined index equals the sum when the upper index is trivial"""
        fibers, g = drift_fixture
        indexer = ConleyIndexer(complex8, fibers, g, morse_graph(g))
        assert indexer.connecting_orbit(0, 1).connecting_orbit is False

    def test_requires_covering_pair(self, complex8, repeller_fixture):
        """Test non-covering pairs are rejected"""
        fibers, g = repeller_fixture
        indexer = ConleyIndexer(complex8, fibers, g, morse_graph(g))
        with pytest.raises(ValidationError):
            indexer.connecting_orbit(0, 2)
