"""
Conley indices over Z5.

For an index pair (A1, A0) the relative chain complex has edges of A1 not
in A0 in degree 1 and the vertices of the closure of A1 outside the closure
of A0 in degree 0. In one dimension its boundary matrix is block bidiagonal:
each maximal chain of relative edges joined through free vertices is one
block, so homology is read off chain by chain.

A chain selector turns the multivalued map into a chain map: every vertex
goes to the leftmost vertex shared by the images of its incident edges, and
every edge goes to the oriented edge path between the images of its
endpoints. The induced map on relative homology, restricted to its
invertible core, is the Conley index.
"""

import time
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from scipy.linalg import block_diag

from config.config import MORSE_DENSE_HOMOLOGY_CHECK_LIMIT
from MorseInsight.components.enclosure import FiberTable
from MorseInsight.components.grid import CellComplex1D
from MorseInsight.components.morse import (
    Attractor,
    Digraph,
    IndexPairCells,
    MorseGraph,
    index_pair,
    nu,
    pred,
)
from MorseInsight.utils import finite_field as ff
from MorseInsight.utils.exceptions import (
    AcyclicityError,
    InvariantViolationError,
    ValidationError,
)
from MorseInsight.utils.logger import get_logger

logger = get_logger("ConleyIndex")


# --------------------------------------------------------------------------------
# Relative pairs and their homology
# --------------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class RelativePair:
    """
    Relative chain complex of (closure1, closure0) on a complex with n edges.

    basis1: edges of closure1 not in closure0
    basis0: vertices of closure1 not in closure0
    """

    n_edges: int
    closure1_edges: np.ndarray
    closure1_vertices: np.ndarray
    closure0_edges: np.ndarray
    closure0_vertices: np.ndarray

    @classmethod
    def from_closures(cls, n_edges: int, edges1, vertices1, edges0=(), vertices0=()) -> "RelativePair":
        e1 = np.unique(np.asarray(edges1, dtype=np.int64))
        e0 = np.unique(np.asarray(edges0, dtype=np.int64))
        v1 = np.union1d(np.asarray(vertices1, dtype=np.int64), np.union1d(e1, e1 + 1))
        v0 = np.union1d(np.asarray(vertices0, dtype=np.int64), np.union1d(e0, e0 + 1))
        if not (np.all(np.isin(e0, e1)) and np.all(np.isin(v0, v1))):
            raise ValidationError("closure0 must lie inside closure1", field="pair")
        return cls(n_edges=int(n_edges), closure1_edges=e1, closure1_vertices=v1,
                   closure0_edges=e0, closure0_vertices=v0)

    @classmethod
    def from_index_pair(cls, pair: IndexPairCells, n_edges: int) -> "RelativePair":
        return cls(
            n_edges=int(n_edges),
            closure1_edges=pair.closure1_edges,
            closure1_vertices=pair.closure1_vertices,
            closure0_edges=pair.closure0_edges,
            closure0_vertices=pair.closure0_vertices,
        )

    @property
    def basis1(self) -> np.ndarray:
        return np.setdiff1d(self.closure1_edges, self.closure0_edges)

    @property
    def basis0(self) -> np.ndarray:
        return np.setdiff1d(self.closure1_vertices, self.closure0_vertices)

    @property
    def boundary(self) -> np.ndarray:
        """Dense boundary matrix (basis0 x basis1), head minus tail, over Z5."""
        b1, b0 = self.basis1, self.basis0
        row = {int(v): i for i, v in enumerate(b0)}
        d = np.zeros((b0.size, b1.size), dtype=np.int64)
        for j, e in enumerate(b1):
            if int(e) + 1 in row:
                d[row[int(e) + 1], j] = 1
            if int(e) in row:
                d[row[int(e)], j] = ff.P - 1
        return d


@dataclass(frozen=True, eq=False)
class RelativeHomology:
    """
    Bases and projections of H0 and H1 of a relative pair.

    h0_reps: one representative vertex per H0 generator
    h1_chains: (start, stop) per H1 generator, the cycle e_start + ... + e_{stop-1}
    vertex_class: H0 coordinate of each vertex, -1 where the class is zero
    """

    pair: RelativePair
    h0_reps: np.ndarray
    h1_chains: np.ndarray
    vertex_class: np.ndarray

    @property
    def dim0(self) -> int:
        return int(self.h0_reps.size)

    @property
    def dim1(self) -> int:
        return int(self.h1_chains.shape[0])

    def project0(self, chain: np.ndarray) -> np.ndarray:
        """H0 coordinates of a 0-chain given on all vertices."""
        chain = ff.as_field(chain)
        out = np.zeros(self.dim0, dtype=np.int64)
        live = self.vertex_class >= 0
        np.add.at(out, self.vertex_class[live], chain[live])
        return ff.as_field(out)

    def project1(self, cycle: np.ndarray) -> np.ndarray:
        """H1 coordinates of a relative 1-cycle given on all edges."""
        cycle = ff.as_field(cycle)
        if self.dim1 == 0:
            return np.zeros(0, dtype=np.int64)
        return cycle[self.h1_chains[:, 0]]


def relative_homology(pair: Union[RelativePair, IndexPairCells], n_edges: Optional[int] = None) -> RelativeHomology:
    """
    H1 = ker(boundary) and H0 = coker(boundary) of a 1D relative pair.

    Relative edges joined through a free vertex form one chain. A chain with
    no endpoint in closure0 carries an H0 class; a chain with both endpoints
    in closure0 carries an H1 class; a chain with one anchored end is
    acyclic. Free vertices with no relative edge are H0 classes of their own.
    """
    if isinstance(pair, IndexPairCells):
        if n_edges is None:
            raise ValidationError("n_edges is required for an IndexPairCells", field="n_edges")
        pair = RelativePair.from_index_pair(pair, n_edges)

    n = pair.n_edges
    edge_in = np.zeros(n, dtype=bool)
    edge_in[pair.basis1] = True
    anchored = np.zeros(n + 1, dtype=bool)
    anchored[pair.closure0_vertices] = True
    free = np.zeros(n + 1, dtype=bool)
    free[pair.basis0] = True

    vertex_class = np.full(n + 1, -1, dtype=np.int64)
    h0_reps: List[int] = []
    h1_chains: List[Tuple[int, int]] = []

    edges = pair.basis1
    if edges.size:
        # chain breaks between consecutive relative edges that are not adjacent
        # or whose shared vertex is anchored
        split = (np.diff(edges) != 1) | anchored[edges[1:]]
        starts = np.concatenate([[0], np.flatnonzero(split) + 1])
        stops = np.concatenate([np.flatnonzero(split) + 1, [edges.size]])
        for s, t in zip(starts, stops):
            a, b = int(edges[s]), int(edges[t - 1]) + 1
            ends = int(anchored[a]) + int(anchored[b])
            if ends == 0:
                vertex_class[a:b + 1] = len(h0_reps)
                h0_reps.append(a)
            elif ends == 2:
                h1_chains.append((a, b))

    touched = np.zeros(n + 1, dtype=bool)
    if edges.size:
        touched[edges] = True
        touched[edges + 1] = True
    for v in np.flatnonzero(free & ~touched):
        vertex_class[v] = len(h0_reps)
        h0_reps.append(int(v))

    homology = RelativeHomology(
        pair=pair,
        h0_reps=np.asarray(h0_reps, dtype=np.int64),
        h1_chains=np.asarray(h1_chains, dtype=np.int64).reshape(-1, 2),
        vertex_class=vertex_class,
    )

    b0, b1 = pair.basis0.size, pair.basis1.size
    if b0 - b1 != homology.dim0 - homology.dim1:
        raise InvariantViolationError("Euler characteristic mismatch", check="euler")
    if b0 + b1 <= MORSE_DENSE_HOMOLOGY_CHECK_LIMIT:
        r = ff.rank(pair.boundary)
        if (b1 - r, b0 - r) != (homology.dim1, homology.dim0):
            raise InvariantViolationError(
                f"chain reduction gives dims ({homology.dim0}, {homology.dim1}), "
                f"dense rank gives ({b0 - r}, {b1 - r})",
                check="homology_dims",
            )
    return homology


# --------------------------------------------------------------------------------
# Chain selector
# --------------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class ChainSelector:
    """
    Chain map choice for the multivalued map.

    phi0[v] is the image vertex of v. The image of edge e is the oriented
    path from phi0[e] to phi0[e + 1], stored as (start, stop, sign): the chain
    sign * (e_start + ... + e_{stop-1}).
    """

    phi0: np.ndarray
    start: np.ndarray
    stop: np.ndarray
    sign: np.ndarray

    @property
    def n_edges(self) -> int:
        return int(self.start.size)

    def phi1(self, e: int) -> Tuple[int, int, int]:
        return int(self.start[e]), int(self.stop[e]), int(self.sign[e])

    def chain(self, e: int) -> np.ndarray:
        """phi1(e) as a dense vector over all edges (entries in Z5)."""
        out = np.zeros(self.n_edges, dtype=np.int64)
        s, t, sign = self.phi1(e)
        out[s:t] = sign
        return ff.as_field(out)


def build_selector(fibers: FiberTable, complex_: CellComplex1D, rule: str = "leftmost") -> ChainSelector:
    """
    Pick phi0 inside the common image of the incident edges and the edge paths.

    Raises:
        AcyclicityError: when the incident images of a vertex are disjoint
    """
    if rule not in ("leftmost", "rightmost"):
        raise ValidationError(f"unknown selector rule {rule}", field="rule")
    n = complex_.n_edges
    first = np.asarray(fibers.first, dtype=np.int64)
    top = np.asarray(fibers.last, dtype=np.int64) + 1  # rightmost vertex of |F(e)|

    lo = np.empty(n + 1, dtype=np.int64)
    hi = np.empty(n + 1, dtype=np.int64)
    lo[0], hi[0] = first[0], top[0]
    lo[n], hi[n] = first[n - 1], top[n - 1]
    lo[1:n] = np.maximum(first[:-1], first[1:])
    hi[1:n] = np.minimum(top[:-1], top[1:])
    bad = np.flatnonzero(lo > hi)
    if bad.size:
        v = int(bad[0])
        raise AcyclicityError(f"images of the edges at vertex {v} do not intersect", vertex=v)

    phi0 = lo if rule == "leftmost" else hi
    tail, head = phi0[:-1], phi0[1:]
    start = np.minimum(tail, head)
    stop = np.maximum(tail, head)
    sign = np.sign(head - tail).astype(np.int64)
    selector = ChainSelector(phi0=phi0, start=start, stop=stop, sign=sign)
    _check_selector(selector, first, top)
    return selector


def _check_selector(selector: ChainSelector, first: np.ndarray, top: np.ndarray) -> None:
    """Commutation d(phi1(e)) = phi0(head) - phi0(tail) and support inside |F(e)|."""
    s, t, sign = selector.start, selector.stop, selector.sign
    empty = sign == 0
    boundary_head = np.where(sign > 0, t, s)
    boundary_tail = np.where(sign > 0, s, t)
    tail, head = selector.phi0[:-1], selector.phi0[1:]
    ok = np.where(empty, (tail == head) & (s == t), (boundary_head == head) & (boundary_tail == tail))
    if not np.all(ok):
        e = int(np.flatnonzero(~ok)[0])
        raise InvariantViolationError(f"selector does not commute with the boundary at edge {e}", check="commutation")
    inside = (s >= first) & (t <= top)
    if not np.all(inside):
        e = int(np.flatnonzero(~inside)[0])
        raise InvariantViolationError(f"phi1 of edge {e} leaves |F({e})|", check="selector_support")


# --------------------------------------------------------------------------------
# Index maps and invariants
# --------------------------------------------------------------------------------
def _check_invariance(pair: RelativePair, selector: ChainSelector) -> None:
    n = pair.n_edges
    for vertices, edges, name in (
        (pair.closure1_vertices, pair.closure1_edges, "closure1"),
        (pair.closure0_vertices, pair.closure0_edges, "closure0"),
    ):
        if vertices.size == 0:
            continue
        v_in = np.zeros(n + 1, dtype=bool)
        v_in[vertices] = True
        if not np.all(v_in[selector.phi0[vertices]]):
            raise InvariantViolationError(f"phi0 leaves {name}", check="invariance")
        e_in = np.zeros(n, dtype=np.int64)
        e_in[edges] = 1
        prefix = np.concatenate([[0], np.cumsum(e_in)])
        s, t = selector.start[edges], selector.stop[edges]
        if not np.all(prefix[t] - prefix[s] == t - s):
            raise InvariantViolationError(f"phi1 leaves {name}", check="invariance")


def index_map(
    pair: RelativePair,
    selector: ChainSelector,
    homology: Optional[RelativeHomology] = None,
) -> Dict[int, np.ndarray]:
    """
    Matrices of the induced map on H0 and H1 of the pair.

    Columns are images of the generators, in homology coordinates.
    """
    homology = homology or relative_homology(pair)
    _check_invariance(pair, selector)

    m0 = np.zeros((homology.dim0, homology.dim0), dtype=np.int64)
    for j, rep in enumerate(homology.h0_reps):
        cls = homology.vertex_class[selector.phi0[rep]]
        if cls >= 0:
            m0[cls, j] = 1

    m1 = np.zeros((homology.dim1, homology.dim1), dtype=np.int64)
    if homology.dim1:
        firsts = homology.h1_chains[:, 0]
        for j, (a, b) in enumerate(homology.h1_chains):
            # the image of e_a + ... + e_{b-1} telescopes to the path phi0(a) -> phi0(b)
            p, q = int(selector.phi0[a]), int(selector.phi0[b])
            forward = (firsts >= p) & (firsts < q)
            backward = (firsts >= q) & (firsts < p)
            m1[:, j] = forward.astype(np.int64) - backward.astype(np.int64)
    return {0: ff.as_field(m0), 1: ff.as_field(m1)}


class IndexKind(str, Enum):
    TRIVIAL = "trivial"
    FIXED_POINT = "fixed_point"
    PERIODIC = "periodic"
    NONTRIVIAL_OTHER = "nontrivial_other"


@dataclass(frozen=True)
class Classification:
    kind: IndexKind
    period: Optional[int] = None

    def __str__(self) -> str:
        if self.kind == IndexKind.PERIODIC:
            return f"periodic({self.period})"
        return self.kind.value


@dataclass(frozen=True, eq=False)
class ConleyIndex:
    """Per-dimension invertible cores of the index map."""

    cores: Tuple[ff.CoreResult, ff.CoreResult]
    matrices: Tuple[np.ndarray, np.ndarray]

    @property
    def p0(self) -> ff.Poly:
        return self.cores[0].characteristic

    @property
    def p1(self) -> ff.Poly:
        return self.cores[1].characteristic

    @property
    def invariant_factors(self) -> Dict[int, Tuple[ff.Poly, ...]]:
        return {k: self.cores[k].invariant_factors for k in (0, 1)}

    def text(self) -> Tuple[str, str]:
        return ff.poly_to_string(self.p0), ff.poly_to_string(self.p1)

    def __str__(self) -> str:
        p0, p1 = self.text()
        return f"({p0}, {p1})"

    def key(self) -> Tuple:
        """Shift-equivalence invariants: core dimension and invariant factors per degree."""
        return self.cores[0].key(), self.cores[1].key()

    @property
    def trivial(self) -> bool:
        return self.cores[0].trivial and self.cores[1].trivial

    @classmethod
    def from_matrices(cls, m0, m1) -> "ConleyIndex":
        a0, a1 = ff.as_field(m0), ff.as_field(m1)
        return cls(cores=(ff.invertible_core(a0), ff.invertible_core(a1)), matrices=(a0, a1))

    def direct_sum(self, other: "ConleyIndex") -> "ConleyIndex":
        return ConleyIndex.from_matrices(
            block_diag(self.matrices[0], other.matrices[0]).astype(np.int64),
            block_diag(self.matrices[1], other.matrices[1]).astype(np.int64),
        )


def _period(p: ff.Poly) -> Optional[int]:
    """T when p = x^T + 1 or x^T - 1, else None."""
    if len(p) < 2 or p[-1] != 1 or p[0] not in (1, ff.P - 1):
        return None
    if any(c != 0 for c in p[1:-1]):
        return None
    return len(p) - 1


def interpret(index: ConleyIndex) -> Classification:
    p0, p1 = index.p0, index.p1
    if not p0 and not p1:
        return Classification(IndexKind.TRIVIAL)
    if p0 and p1:
        return Classification(IndexKind.NONTRIVIAL_OTHER)
    period = _period(p0 or p1)
    if period is None:
        return Classification(IndexKind.NONTRIVIAL_OTHER)
    if period == 1:
        return Classification(IndexKind.FIXED_POINT, 1)
    return Classification(IndexKind.PERIODIC, period)


@dataclass(frozen=True, eq=False)
class ConnectionResult:
    upper: int
    lower: int
    connecting_orbit: bool
    combined: ConleyIndex
    direct_sum: ConleyIndex


class ConleyIndexer:
    """
    Conley indices for the Morse nodes of one enclosure.

    Holds the complex, fiber table, digraph, Morse graph and the chain
    selector so that index pairs of many nodes share the same chain map.
    """

    def __init__(
        self,
        complex_: CellComplex1D,
        fibers: FiberTable,
        digraph: Digraph,
        mg: MorseGraph,
        rule: str = "leftmost",
    ):
        self.complex = complex_
        self.fibers = fibers
        self.digraph = digraph
        self.morse_graph = mg
        self.selector = build_selector(fibers, complex_, rule)
        self._cache: Dict[int, ConleyIndex] = {}

    def pair_index(self, A1: Attractor, A0: Attractor) -> ConleyIndex:
        pair = RelativePair.from_index_pair(IndexPairCells.from_attractors(A1, A0), self.complex.n_edges)
        homology = relative_homology(pair)
        maps = index_map(pair, self.selector, homology)
        logger.debug(f"pair of {len(A1)}/{len(A0)} cells: dims H0={homology.dim0}, H1={homology.dim1}")
        return ConleyIndex.from_matrices(maps[0], maps[1])

    def conley_index(self, node: int) -> ConleyIndex:
        if node not in self._cache:
            start_time = time.time()
            pair = index_pair(self.morse_graph, self.digraph, node)
            self._cache[node] = self.pair_index(pair.A1, pair.A0)
            logger.info(
                f"Conley index of {self.morse_graph.labels[node]} is {self._cache[node]} "
                f"({time.time() - start_time:.3f} seconds)"
            )
        return self._cache[node]

    def connecting_orbit(self, upper: int, lower: int) -> ConnectionResult:
        """
        Compare the index of (nu(upper), pred(lower)) with the direct sum of the
        two node indices; a difference forces a connecting orbit.

        Raises:
            ValidationError: if ``upper`` does not cover ``lower``
        """
        if not self.morse_graph.covers(upper, lower):
            raise ValidationError(
                f"{self.morse_graph.labels[upper]} does not cover {self.morse_graph.labels[lower]}",
                field="connection",
            )
        combined = self.pair_index(
            nu(self.morse_graph, self.digraph, upper),
            pred(self.morse_graph, self.digraph, lower),
        )
        summed = self.conley_index(upper).direct_sum(self.conley_index(lower))
        return ConnectionResult(
            upper=upper,
            lower=lower,
            connecting_orbit=combined.key() != summed.key(),
            combined=combined,
            direct_sum=summed,
        )
