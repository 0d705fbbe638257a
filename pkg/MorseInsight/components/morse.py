"""
Graph dynamics of the multivalued map.

The map is a digraph on the edges of the cell complex. Its recurrent
strongly connected components, ordered by reachability, form the Morse
graph; each Morse node M has a smallest attractor nu(M) (its forward
orbit) and a predecessor attractor pred(M) (the union of the nu's strictly
below it), which together give the index pair of M.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple, Union

import networkx as nx
import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from config.config import MORSE_ENUMERATION_CELL_LIMIT
from MorseInsight.components.enclosure import FiberTable
from MorseInsight.components.grid import CellComplex1D
from MorseInsight.utils.exceptions import InvariantViolationError, ValidationError
from MorseInsight.utils.logger import get_logger

logger = get_logger("MorseGraph")


# --------------------------------------------------------------------------------
# Digraph
# --------------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class Digraph:
    """
    Directed graph on cells 0..n-1 in CSR form.

    Graphs built from fibers also keep their contiguous target ranges, which
    makes set images a prefix-sum operation.
    """

    indptr: np.ndarray
    indices: np.ndarray
    first: Optional[np.ndarray] = None
    last: Optional[np.ndarray] = None

    def __post_init__(self):
        counts = np.diff(self.indptr)
        empty = np.flatnonzero(counts == 0)
        if empty.size:
            raise ValidationError(f"cell {int(empty[0])} has no image", field="digraph")

    @classmethod
    def from_ranges(cls, first, last) -> "Digraph":
        first = np.asarray(first, dtype=np.int64)
        last = np.asarray(last, dtype=np.int64)
        counts = last - first + 1
        if np.any(counts < 1):
            raise ValidationError(f"cell {int(np.flatnonzero(counts < 1)[0])} has no image", field="digraph")
        indptr = np.concatenate([[0], np.cumsum(counts)])
        offsets = np.arange(indptr[-1]) - np.repeat(indptr[:-1], counts)
        indices = np.repeat(first, counts) + offsets
        return cls(indptr=indptr, indices=indices, first=first, last=last)

    @classmethod
    def from_fibers(cls, fibers: FiberTable) -> "Digraph":
        return cls.from_ranges(fibers.first, fibers.last)

    @classmethod
    def from_adjacency(cls, adjacency: Sequence[Iterable[int]]) -> "Digraph":
        targets = [np.unique(np.asarray(list(t), dtype=np.int64)) for t in adjacency]
        counts = np.array([t.size for t in targets], dtype=np.int64)
        indptr = np.concatenate([[0], np.cumsum(counts)])
        indices = np.concatenate(targets) if targets else np.zeros(0, dtype=np.int64)
        return cls(indptr=indptr, indices=indices)

    @property
    def n(self) -> int:
        return int(self.indptr.size - 1)

    @property
    def edge_count(self) -> int:
        return int(self.indices.size)

    @cached_property
    def matrix(self) -> sparse.csr_array:
        data = np.ones(self.indices.size, dtype=np.int8)
        return sparse.csr_array((data, self.indices, self.indptr), shape=(self.n, self.n))

    @cached_property
    def sources(self) -> np.ndarray:
        return np.repeat(np.arange(self.n), np.diff(self.indptr))

    def successors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def image(self, mask: np.ndarray) -> np.ndarray:
        """Boolean mask of F(A) for a boolean cell mask A."""
        mask = np.asarray(mask, dtype=bool)
        if self.first is not None:
            marks = np.zeros(self.n + 1, dtype=np.int64)
            np.add.at(marks, self.first[mask], 1)
            np.add.at(marks, self.last[mask] + 1, -1)
            return np.cumsum(marks[:-1]) > 0
        out = np.zeros(self.n, dtype=bool)
        out[self.indices[mask[self.sources]]] = True
        return out

    def to_networkx(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(range(self.n))
        graph.add_edges_from(zip(self.sources.tolist(), self.indices.tolist()))
        return graph


def _mask(cells, n: int) -> np.ndarray:
    m = np.zeros(n, dtype=bool)
    m[np.asarray(cells, dtype=np.int64)] = True
    return m


# --------------------------------------------------------------------------------
# Attractors and index pairs
# --------------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class Attractor:
    """Sorted set of cells with F(A) = A."""

    cells: np.ndarray

    def __post_init__(self):
        cells = np.unique(np.asarray(self.cells, dtype=np.int64))
        cells.flags.writeable = False
        object.__setattr__(self, "cells", cells)

    def __len__(self) -> int:
        return int(self.cells.size)

    def __eq__(self, other) -> bool:
        return isinstance(other, Attractor) and np.array_equal(self.cells, other.cells)

    def __hash__(self) -> int:
        return hash(self.cells.tobytes())

    def mask(self, n: int) -> np.ndarray:
        return _mask(self.cells, n)

    def issubset(self, other: "Attractor") -> bool:
        return bool(np.all(np.isin(self.cells, other.cells)))

    def union(self, other: "Attractor") -> "Attractor":
        return Attractor(np.union1d(self.cells, other.cells))


def is_attractor(g: Digraph, mask: np.ndarray) -> bool:
    mask = np.asarray(mask, dtype=bool)
    return bool(np.array_equal(g.image(mask), mask))


def closure_vertices(edges: np.ndarray) -> np.ndarray:
    """Vertices of the closure of a set of edges (both endpoints of each edge)."""
    e = np.asarray(edges, dtype=np.int64)
    return np.union1d(e, e + 1)


@dataclass(frozen=True, eq=False)
class IndexPairCells:
    """Nested attractors A0 within A1 with their closures (edges plus endpoint vertices)."""

    A1: Attractor
    A0: Attractor
    closure1_vertices: np.ndarray
    closure0_vertices: np.ndarray

    @classmethod
    def from_attractors(cls, A1: Attractor, A0: Attractor) -> "IndexPairCells":
        if not A0.issubset(A1):
            raise ValidationError("A0 must be contained in A1", field="index_pair")
        return cls(A1=A1, A0=A0,
                   closure1_vertices=closure_vertices(A1.cells),
                   closure0_vertices=closure_vertices(A0.cells))

    @property
    def closure1_edges(self) -> np.ndarray:
        return self.A1.cells

    @property
    def closure0_edges(self) -> np.ndarray:
        return self.A0.cells


# --------------------------------------------------------------------------------
# SCC condensation and the Morse graph
# --------------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class Condensation:
    """Component of every cell, the acyclic condensation and the recurrent components."""

    labels: np.ndarray
    dag: nx.DiGraph
    recurrent: np.ndarray

    @property
    def n_components(self) -> int:
        return int(self.recurrent.size)


def scc_condense(g: Digraph) -> Condensation:
    """Strongly connected components and their condensation."""
    n_comp, labels = csgraph.connected_components(g.matrix, directed=True, connection="strong")
    labels = labels.astype(np.int64)
    src = labels[g.sources]
    dst = labels[g.indices]
    recurrent = np.zeros(n_comp, dtype=bool)
    recurrent[src[src == dst]] = True

    cross = src != dst
    pairs = np.unique(src[cross] * n_comp + dst[cross])
    dag = nx.DiGraph()
    dag.add_nodes_from(range(n_comp))
    dag.add_edges_from(zip((pairs // n_comp).tolist(), (pairs % n_comp).tolist()))
    if not nx.is_directed_acyclic_graph(dag):
        raise InvariantViolationError("condensation graph has a cycle", check="condensation_acyclic")
    logger.debug(f"{n_comp} components, {dag.number_of_edges()} condensation edges, {int(recurrent.sum())} recurrent")
    return Condensation(labels=labels, dag=dag, recurrent=recurrent)


@dataclass(frozen=True, eq=False)
class MorseGraph:
    """
    Recurrent components ordered by reachability.

    ``order`` holds an edge i -> j whenever node j is reachable from node i
    (j strictly below i). Labels M0, M1, ... follow the leftmost cell.
    """

    nodes: List[np.ndarray]
    labels: List[str]
    order: nx.DiGraph
    condensation: Condensation
    _nu_cache: Dict[int, Attractor] = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return len(self.nodes)

    def below(self, node: int) -> Set[int]:
        return set(self.order.successors(node))

    def above(self, node: int) -> Set[int]:
        return set(self.order.predecessors(node))

    def is_minimal(self, node: int) -> bool:
        return self.order.out_degree(node) == 0

    def minimal_nodes(self) -> List[int]:
        return [i for i in range(len(self)) if self.is_minimal(i)]

    @cached_property
    def _hasse(self) -> Tuple[Tuple[int, int], ...]:
        return tuple(sorted(nx.transitive_reduction(self.order).edges()))

    @cached_property
    def _hasse_set(self) -> frozenset:
        return frozenset(self._hasse)

    def hasse_edges(self) -> List[Tuple[int, int]]:
        """Covering pairs (upper, lower) of the Morse order, reduced once per graph."""
        return list(self._hasse)

    def covers(self, upper: int, lower: int) -> bool:
        return (upper, lower) in self._hasse_set


def morse_graph(g: Digraph, condensation: Optional[Condensation] = None) -> MorseGraph:
    """Keep the components with an internal edge and order them by reachability."""
    cond = condensation or scc_condense(g)
    comps = np.flatnonzero(cond.recurrent)
    members = {int(c): np.flatnonzero(cond.labels == c) for c in comps}
    ranked = sorted(members, key=lambda c: int(members[c][0]))
    index_of = {c: i for i, c in enumerate(ranked)}

    order = nx.DiGraph()
    order.add_nodes_from(range(len(ranked)))
    for c in ranked:
        for d in nx.descendants(cond.dag, c):
            if d in index_of:
                order.add_edge(index_of[c], index_of[d])
    for i, j in order.edges():
        if order.has_edge(j, i):
            raise InvariantViolationError(f"Morse nodes {i} and {j} reach each other", check="antisymmetry")

    mg = MorseGraph(
        nodes=[members[c] for c in ranked],
        labels=[f"M{i}" for i in range(len(ranked))],
        order=order,
        condensation=cond,
    )
    logger.info(f"Morse graph has {len(mg)} nodes ({len(mg.minimal_nodes())} minimal)")
    return mg


def _node_index(mg: MorseGraph, node: Union[int, str]) -> int:
    if isinstance(node, str):
        if node not in mg.labels:
            raise ValidationError(f"unknown Morse node {node}", field="node")
        return mg.labels.index(node)
    if not 0 <= node < len(mg):
        raise ValidationError(f"Morse node index {node} out of range", field="node")
    return int(node)


def nu(mg: MorseGraph, g: Digraph, node: Union[int, str]) -> Attractor:
    """Smallest attractor containing the node: its forward-reachable cells."""
    i = _node_index(mg, node)
    if i not in mg._nu_cache:
        reach = csgraph.breadth_first_order(
            g.matrix, int(mg.nodes[i][0]), directed=True, return_predecessors=False
        )
        attractor = Attractor(reach)
        if not is_attractor(g, attractor.mask(g.n)):
            raise InvariantViolationError(f"forward orbit of {mg.labels[i]} is not invariant", check="nu_attractor")
        mg._nu_cache[i] = attractor
    return mg._nu_cache[i]


def pred(mg: MorseGraph, g: Digraph, node: Union[int, str]) -> Attractor:
    """Union of nu(M') over the Morse nodes strictly below the node."""
    i = _node_index(mg, node)
    cells = [nu(mg, g, j).cells for j in mg.below(i)]
    return Attractor(np.concatenate(cells) if cells else np.zeros(0, dtype=np.int64))


def index_pair(mg: MorseGraph, g: Digraph, node: Union[int, str]) -> IndexPairCells:
    return IndexPairCells.from_attractors(nu(mg, g, node), pred(mg, g, node))


def lattice_meet(g: Digraph, a: Attractor, b: Attractor) -> Attractor:
    """Largest attractor inside both: iterate F from the intersection until it settles."""
    current = a.mask(g.n) & b.mask(g.n)
    while True:
        nxt = g.image(current)
        if np.array_equal(nxt, current):
            return Attractor(np.flatnonzero(current))
        current = nxt


def verify_attractor_lattice(mg: MorseGraph, g: Digraph) -> int:
    """
    Check the attractors produced for this Morse graph.

    Every nu and pred is an attractor, nu is injective and order preserving,
    unions of pairs are attractors and pairwise meets are attractors.

    Returns:
        int: number of attractors checked
    """
    nus = [nu(mg, g, i) for i in range(len(mg))]
    preds = [pred(mg, g, i) for i in range(len(mg))]
    for i, a in enumerate(preds):
        if not is_attractor(g, a.mask(g.n)):
            raise InvariantViolationError(f"pred of {mg.labels[i]} is not an attractor", check="pred_attractor")
    if len(set(nus)) != len(nus):
        raise InvariantViolationError("nu is not injective", check="nu_injective")
    for i, j in mg.order.edges():
        if not nus[j].issubset(nus[i]):
            raise InvariantViolationError(
                f"nu({mg.labels[j]}) is not inside nu({mg.labels[i]})", check="nu_order"
            )
    family = list({a for a in nus + preds})
    for x in range(len(family)):
        for y in range(x + 1, len(family)):
            if not is_attractor(g, family[x].union(family[y]).mask(g.n)):
                raise InvariantViolationError("union of attractors is not an attractor", check="lattice_join")
            if not is_attractor(g, lattice_meet(g, family[x], family[y]).mask(g.n)):
                raise InvariantViolationError("meet of attractors is not an attractor", check="lattice_meet")
    return len(family)


def enumerate_attractors(g: Digraph, limit: int = MORSE_ENUMERATION_CELL_LIMIT) -> List[Attractor]:
    """Every attractor of a small digraph, by exhaustive subset enumeration."""
    n = g.n
    if n > limit:
        raise ValidationError(f"exhaustive enumeration is limited to {limit} cells (got {n})", field="digraph")
    out_masks = np.array([int(sum(1 << int(t) for t in g.successors(v))) for v in range(n)], dtype=np.int64)
    images = np.zeros(1 << n, dtype=np.int64)
    for bit in range(n):
        size = 1 << bit
        images[size:2 * size] = images[:size] | out_masks[bit]
    subsets = np.flatnonzero(images == np.arange(1 << n, dtype=np.int64))
    return [Attractor([b for b in range(n) if (int(s) >> b) & 1]) for s in subsets]


# --------------------------------------------------------------------------------
# Geometry of Morse sets
# --------------------------------------------------------------------------------
def morse_set_intervals(complex_: CellComplex1D, cells) -> List[Tuple[float, float]]:
    """Support of a cell set merged into maximal closed intervals."""
    if isinstance(cells, Attractor):
        cells = cells.cells
    c = np.unique(np.asarray(cells, dtype=np.int64))
    if c.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(c) > 1)
    starts = np.concatenate([[c[0]], c[breaks + 1]])
    stops = np.concatenate([c[breaks], [c[-1]]])
    v = complex_.vertices
    return [(float(v[a]), float(v[b + 1])) for a, b in zip(starts, stops)]


def format_intervals(intervals: Sequence[Tuple[float, float]]) -> str:
    return " U ".join(f"[{lo:.8f}, {hi:.8f}]" for lo, hi in intervals)
