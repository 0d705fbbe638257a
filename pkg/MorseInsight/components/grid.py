"""
Uniform cell complex on the domain.

The domain [alpha, beta] is cut into 2^B closed edges e_i = [v_i, v_{i+1}]
with v_i = alpha + i * eps and the last vertex pinned to beta. Edges with odd
index carry the confidence midpoints.
"""

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from config.config import Domain
from MorseInsight.utils.exceptions import ValidationError


@dataclass(frozen=True)
class EdgeRange:
    """Inclusive range of edge indices ``first..last``; empty when first > last."""

    first: int
    last: int
    clipped: bool = False

    @property
    def empty(self) -> bool:
        return self.first > self.last

    def __len__(self) -> int:
        return max(0, self.last - self.first + 1)

    def indices(self) -> range:
        return range(self.first, self.last + 1)


@dataclass(frozen=True, eq=False)
class CellComplex1D:
    domain: Domain
    B: int
    vertices: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not isinstance(self.B, (int, np.integer)) or self.B < 2:
            raise ValidationError(f"subdivision exponent B must be an integer >= 2 (got {self.B})", field="B")
        idx = np.arange(self.n_edges + 1, dtype=np.float64)
        v = self.domain.lower + idx * self.epsilon
        v[-1] = self.domain.upper
        v.flags.writeable = False
        object.__setattr__(self, "vertices", v)

    @property
    def n_edges(self) -> int:
        return 1 << int(self.B)

    @property
    def n_vertices(self) -> int:
        return self.n_edges + 1

    @property
    def epsilon(self) -> float:
        return self.domain.width / self.n_edges

    def vertex(self, i: int) -> float:
        if not 0 <= i <= self.n_edges:
            raise ValidationError(f"vertex index {i} out of range 0..{self.n_edges}", field="index")
        return float(self.vertices[i])

    def edge_support(self, i: int) -> Tuple[float, float]:
        if not 0 <= i < self.n_edges:
            raise ValidationError(f"edge index {i} out of range 0..{self.n_edges - 1}", field="index")
        return float(self.vertices[i]), float(self.vertices[i + 1])

    def odd_edges(self) -> np.ndarray:
        return np.arange(1, self.n_edges, 2)

    def odd_midpoints(self) -> np.ndarray:
        """Midpoints m_{2i+1} = alpha + (2i + 3/2) eps of the odd edges, ascending."""
        i = np.arange(self.n_edges // 2, dtype=np.float64)
        return self.domain.lower + (2.0 * i + 1.5) * self.epsilon

    def locate_edges(self, lo: float, hi: float) -> EdgeRange:
        """Edges whose closed support meets the closed interval [lo, hi], clamped to the complex."""
        first, last, clipped = self.locate_edges_many(np.array([lo]), np.array([hi]))
        return EdgeRange(int(first[0]), int(last[0]), bool(clipped[0]))

    def locate_edges_many(self, lo: np.ndarray, hi: np.ndarray):
        """
        Vectorized ``locate_edges``.

        Returns:
            (first, last, clipped) arrays; an interval entirely outside the
            domain yields first > last with clipped set.
        """
        lo = np.asarray(lo, dtype=np.float64)
        hi = np.asarray(hi, dtype=np.float64)
        if np.any(lo > hi):
            raise ValidationError("interval lower end exceeds upper end", field="interval")
        v = self.vertices
        n = self.n_edges
        # edge i meets [lo, hi] iff v_i <= hi and v_{i+1} >= lo
        first = np.searchsorted(v, lo, side="left") - 1
        last = np.searchsorted(v, hi, side="right") - 1
        first = np.clip(first, 0, n - 1)
        last = np.minimum(last, n - 1)
        outside = (hi < self.domain.lower) | (lo > self.domain.upper)
        first = np.where(outside, 1, first)
        last = np.where(outside, 0, last)
        clipped = (lo < self.domain.lower) | (hi > self.domain.upper)
        return first.astype(np.int64), last.astype(np.int64), clipped

    def edge_of(self, xs) -> np.ndarray:
        """Index of the edge whose half-open support [v_i, v_{i+1}) holds x (last edge closed)."""
        x = np.asarray(xs, dtype=np.float64)
        idx = np.searchsorted(self.vertices, x, side="right") - 1
        return np.clip(idx, 0, self.n_edges - 1)
