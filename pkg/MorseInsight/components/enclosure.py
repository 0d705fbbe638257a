"""
Enclosure of the surrogate's graph.

Each odd edge e_{2i+1} gets a confidence band [w_lo, w_hi] at its midpoint.
Even edges take the intersection of the Lipschitz rays leaving the two
neighbouring bands; the left boundary edge e_0 extrapolates from the first
band. The multivalued map F sends an edge to every edge its image interval
meets (G), and G~ keeps the untruncated fiber Q(e) next to |F(e)|.
"""

import time
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from MorseInsight.components.confidence import RadiusAssignment
from MorseInsight.components.gp import GpModel, predict_many
from MorseInsight.components.grid import CellComplex1D, EdgeRange
from MorseInsight.utils.dataio import covering_radius
from MorseInsight.utils.exceptions import (
    EnclosureError,
    InvariantViolationError,
    ValidationError,
)
from MorseInsight.utils.logger import get_logger
from MorseInsight.utils.validators import validate_positive_number

logger = get_logger("Enclosure")


@dataclass(frozen=True, eq=False)
class MidpointBand:
    """Confidence band mean +- z * sd at every odd-edge midpoint."""

    midpoints: np.ndarray
    mean: np.ndarray
    sd: np.ndarray
    z: np.ndarray
    w_lo: np.ndarray
    w_hi: np.ndarray

    @classmethod
    def from_moments(cls, midpoints, mean, sd, z) -> "MidpointBand":
        m = np.asarray(midpoints, dtype=np.float64)
        mu = np.broadcast_to(np.asarray(mean, dtype=np.float64), m.shape).copy()
        s = np.broadcast_to(np.asarray(sd, dtype=np.float64), m.shape).copy()
        zz = np.broadcast_to(np.asarray(z, dtype=np.float64), m.shape).copy()
        half = zz * s
        return cls(midpoints=m, mean=mu, sd=s, z=zz, w_lo=mu - half, w_hi=mu + half)

    @classmethod
    def from_bounds(cls, midpoints, w_lo, w_hi) -> "MidpointBand":
        """Band given directly by its ends (unit multiplier, centered)."""
        lo = np.asarray(w_lo, dtype=np.float64)
        hi = np.asarray(w_hi, dtype=np.float64)
        return cls.from_moments(midpoints, (lo + hi) / 2.0, (hi - lo) / 2.0, 1.0)

    @property
    def diameters(self) -> np.ndarray:
        return self.w_hi - self.w_lo


@dataclass(frozen=True, eq=False)
class FiberTable:
    """
    Per-edge fibers.

    ``q_lo/q_hi`` is Q(e), the G~ fiber interval. ``image_lo/image_hi`` is the
    interval F(e) is located from: the band itself on odd edges, Q(e) on even
    edges. ``first/last`` is F(e) as an inclusive edge range and ``clipped``
    marks edges whose Q(e) leaves the domain.
    """

    q_lo: np.ndarray
    q_hi: np.ndarray
    image_lo: np.ndarray
    image_hi: np.ndarray
    first: np.ndarray
    last: np.ndarray
    clipped: np.ndarray

    def __len__(self) -> int:
        return int(self.first.size)

    def image(self, i: int) -> EdgeRange:
        return EdgeRange(int(self.first[i]), int(self.last[i]), bool(self.clipped[i]))

    def Q(self, i: int) -> Tuple[float, float]:
        return float(self.q_lo[i]), float(self.q_hi[i])

    @property
    def target_counts(self) -> np.ndarray:
        return self.last - self.first + 1

    @classmethod
    def from_ranges(cls, complex_: CellComplex1D, first, last) -> "FiberTable":
        """Fiber table whose Q(e) is exactly the support of the given image ranges."""
        first = np.asarray(first, dtype=np.int64)
        last = np.asarray(last, dtype=np.int64)
        v = complex_.vertices
        lo, hi = v[first], v[last + 1]
        return cls(
            q_lo=lo, q_hi=hi, image_lo=lo, image_hi=hi,
            first=first, last=last, clipped=np.zeros(first.size, dtype=bool),
        )


@dataclass(frozen=True, eq=False)
class Enclosure:
    complex: CellComplex1D
    band: MidpointBand
    fibers: FiberTable
    L: float
    g_tilde_contained: bool

    @property
    def g_region(self) -> Tuple[np.ndarray, np.ndarray]:
        """Per-edge target ranges of G as (first, last) arrays."""
        return self.fibers.first, self.fibers.last

    def edge_fiber_bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        """Per-edge G~ fiber hull Q(e) united with |F(e)|."""
        v = self.complex.vertices
        f = self.fibers
        return np.minimum(f.q_lo, v[f.first]), np.maximum(f.q_hi, v[f.last + 1])


@dataclass(frozen=True)
class EnclosureDiagnostics:
    max_fiber_diameter: float
    ell: float
    epsilon: float
    fiber_diameter_bound: float
    gamma: float
    variance_bound: float
    max_posterior_sd: float
    fiber_diameter_bound_holds: bool
    variance_bound_holds: bool
    required_L: float
    clipped_edges: int


def build_bands(model: GpModel, complex_: CellComplex1D, radii: RadiusAssignment) -> MidpointBand:
    """Posterior mean +- z(m) * sd(m) at the odd midpoints of the complex."""
    midpoints = complex_.odd_midpoints()
    if radii.midpoints.shape != midpoints.shape or not np.array_equal(radii.midpoints, midpoints):
        raise ValidationError("radii must be assigned on exactly the odd midpoints of the complex", field="radii")
    mean, variance = predict_many(model, midpoints)
    return MidpointBand.from_moments(midpoints, mean, np.sqrt(variance), radii.z)


def ray_gaps(band: MidpointBand) -> np.ndarray:
    """Largest jump between consecutive band ends, per interior even edge."""
    return np.maximum(np.abs(np.diff(band.w_lo)), np.abs(np.diff(band.w_hi)))


def build_fibers(band: MidpointBand, complex_: CellComplex1D, L: float) -> FiberTable:
    """
    Fibers Q(e) and images F(e) for every edge.

    Raises:
        EnclosureError: when consecutive bands jump by more than 2 eps L (the
            rays do not intersect; the error carries the minimal L), or when
            an image lies entirely outside the domain
    """
    L = validate_positive_number(L, "L")
    n = complex_.n_edges
    eps = complex_.epsilon
    if band.w_lo.size != n // 2:
        raise ValidationError(f"expected {n // 2} bands, got {band.w_lo.size}", field="band")

    gaps = ray_gaps(band)
    bad = np.flatnonzero(gaps > 2.0 * eps * L)
    if bad.size:
        required = float(gaps.max() / (2.0 * eps))
        edge = 2 * (int(bad[0]) + 1)
        raise EnclosureError(
            f"rays around even edge {edge} do not intersect for L={L}; choose L >= {required:.6g}",
            required_L=required,
            index=edge,
        )

    lo, hi = band.w_lo, band.w_hi
    q_lo = np.empty(n)
    q_hi = np.empty(n)
    img_lo = np.empty(n)
    img_hi = np.empty(n)

    # odd edges: band for F, band widened by eps L / 2 for G~
    q_lo[1::2] = lo - 0.5 * eps * L
    q_hi[1::2] = hi + 0.5 * eps * L
    img_lo[1::2] = lo
    img_hi[1::2] = hi

    # interior even edges: intersection of the rays from the two neighbours
    q_lo[2::2] = lo[:-1] - eps * L + (lo[1:] - lo[:-1]) / 2.0
    q_hi[2::2] = hi[:-1] + eps * L + (hi[1:] - hi[:-1]) / 2.0

    # left boundary edge
    q_lo[0] = lo[0] - 1.5 * eps * L
    q_hi[0] = hi[0] + 1.5 * eps * L

    img_lo[0::2] = q_lo[0::2]
    img_hi[0::2] = q_hi[0::2]

    first, last, _ = complex_.locate_edges_many(img_lo, img_hi)
    empty = np.flatnonzero(first > last)
    if empty.size:
        i = int(empty[0])
        raise EnclosureError(
            f"image of edge {i} [{img_lo[i]:.6g}, {img_hi[i]:.6g}] lies outside the domain",
            index=i,
        )
    clipped = (q_lo < complex_.domain.lower) | (q_hi > complex_.domain.upper)
    return FiberTable(
        q_lo=q_lo, q_hi=q_hi, image_lo=img_lo, image_hi=img_hi,
        first=first, last=last, clipped=clipped,
    )


def _check_fibers(complex_: CellComplex1D, fibers: FiberTable) -> None:
    first, last, _ = complex_.locate_edges_many(fibers.image_lo, fibers.image_hi)
    if not (np.array_equal(first, fibers.first) and np.array_equal(last, fibers.last)):
        raise InvariantViolationError("G ranges differ from a fresh location of the images", check="g_consistency")
    if np.any(fibers.q_lo[:-1] > fibers.q_hi[1:]) or np.any(fibers.q_lo[1:] > fibers.q_hi[:-1]):
        i = int(np.flatnonzero((fibers.q_lo[:-1] > fibers.q_hi[1:]) | (fibers.q_lo[1:] > fibers.q_hi[:-1]))[0])
        raise InvariantViolationError(f"fibers of edges {i} and {i + 1} do not overlap", check="adjacent_overlap")


def max_fiber_diameter(enclosure: Enclosure) -> float:
    """Largest diameter of a G~ fiber over edge interiors and vertices."""
    lo, hi = enclosure.edge_fiber_bounds()
    edge_diam = hi - lo
    vertex_diam = np.maximum(hi[:-1], hi[1:]) - np.minimum(lo[:-1], lo[1:])
    return float(max(edge_diam.max(), vertex_diam.max() if vertex_diam.size else 0.0))


def assemble(
    model: GpModel,
    complex_: CellComplex1D,
    radii: RadiusAssignment,
    L: float,
) -> Tuple[Enclosure, EnclosureDiagnostics]:
    """
    Build bands, fibers and the G / G~ regions, and compute the diagnostics.

    ``g_tilde_contained`` is false as soon as one Q(e) leaves the domain; the
    caller then reports the result without the confidence certificate.
    """
    logger.info(f"Assembling enclosure on {complex_.n_edges} edges (L={L})")
    start_time = time.time()

    band = build_bands(model, complex_, radii)
    fibers = build_fibers(band, complex_, L)
    _check_fibers(complex_, fibers)

    contained = not bool(np.any(fibers.clipped))
    enclosure = Enclosure(complex=complex_, band=band, fibers=fibers, L=float(L), g_tilde_contained=contained)

    eps = complex_.epsilon
    diameter = max_fiber_diameter(enclosure)
    ell = float(band.diameters.max())
    bound = 2.0 * (ell + 2.0 * L * eps + 2.0 * eps)
    gamma = covering_radius(model.data)
    variance_bound = np.sqrt(12.0) / model.theta_hat * gamma ** 2 / 4.0
    max_sd = float(band.sd.max())
    gaps = ray_gaps(band)
    diagnostics = EnclosureDiagnostics(
        max_fiber_diameter=diameter,
        ell=ell,
        epsilon=eps,
        fiber_diameter_bound=bound,
        gamma=gamma,
        variance_bound=float(variance_bound),
        max_posterior_sd=max_sd,
        fiber_diameter_bound_holds=diameter < bound,
        variance_bound_holds=max_sd <= variance_bound,
        required_L=float(gaps.max() / (2.0 * eps)) if gaps.size else 0.0,
        clipped_edges=int(np.count_nonzero(fibers.clipped)),
    )
    if not diagnostics.fiber_diameter_bound_holds:
        raise InvariantViolationError(
            f"fiber diameter {diameter:.6g} reaches the bound {bound:.6g}",
            check="fiber_diameter_bound",
        )
    if not contained:
        logger.warning(f"{diagnostics.clipped_edges} fibers leave the domain; confidence is not certified")

    logger.info(
        f"Assembled enclosure (max fiber diameter {diameter:.6g}, "
        f"{int(fibers.target_counts.sum())} G cells) in {time.time() - start_time:.3f} seconds"
    )
    return enclosure, diagnostics


def fiber_bounds(enclosure: Enclosure, xs) -> Tuple[np.ndarray, np.ndarray]:
    """
    G~ fiber hull at arbitrary points.

    A point on a shared vertex gets the union of its two incident edges.
    """
    c = enclosure.complex
    x = np.asarray(xs, dtype=np.float64).ravel()
    if np.any((x < c.domain.lower) | (x > c.domain.upper)):
        raise ValidationError("probe points must lie in the domain", field="probe")
    lo_e, hi_e = enclosure.edge_fiber_bounds()
    idx = c.edge_of(x)
    lo, hi = lo_e[idx], hi_e[idx]
    on_vertex = (x == c.vertices[idx]) & (idx > 0)
    left = np.where(on_vertex, idx - 1, idx)
    return np.minimum(lo, lo_e[left]), np.maximum(hi, hi_e[left])


def graph_inside(
    enclosure: Enclosure,
    probe: Sequence[Tuple[float, float]],
) -> Tuple[bool, Optional[Tuple[float, float]]]:
    """
    Check that every probe point (x, y) lies in G~.

    Returns:
        (True, None) on success, else (False, first violating point)
    """
    pts = np.asarray(probe, dtype=np.float64).reshape(-1, 2)
    lo, hi = fiber_bounds(enclosure, pts[:, 0])
    outside = np.flatnonzero((pts[:, 1] < lo) | (pts[:, 1] > hi))
    if outside.size:
        i = int(outside[0])
        return False, (float(pts[i, 0]), float(pts[i, 1]))
    return True, None


def paths_inside(enclosure: Enclosure, grid, paths) -> np.ndarray:
    """Per-path containment of sampled paths (rows) on a shared grid."""
    lo, hi = fiber_bounds(enclosure, grid)
    values = np.atleast_2d(paths)
    return np.all((values >= lo) & (values <= hi), axis=1)
