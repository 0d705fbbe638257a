"""
Quantiles and confidence-budget allocation.

The pointwise share of the confidence budget is spread over the odd-edge
midpoints by a union bound: midpoint v gets failure mass
delta_v = w_v / sum(w) * (1 - pointwise_share) and the band half-width
z(v) = Phi^{-1}(1 - delta_v / 2) in posterior standard deviations.
"""

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy import special

from config.config import ConfidenceBudget, WeightRegion
from MorseInsight.components.grid import CellComplex1D
from MorseInsight.utils.exceptions import ValidationError
from MorseInsight.utils.logger import get_logger
from MorseInsight.utils.validators import validate_probability, validate_weights

logger = get_logger("Confidence")

_SQRT_2PI = np.sqrt(2.0 * np.pi)


@dataclass(frozen=True, eq=False)
class RadiusAssignment:
    """Per-midpoint standard-deviation multipliers and failure masses."""

    midpoints: np.ndarray
    z: np.ndarray
    delta: np.ndarray

    def scaled(self, factor: float) -> "RadiusAssignment":
        """Same midpoints with every multiplier multiplied by ``factor``."""
        return RadiusAssignment(self.midpoints, self.z * factor, self.delta)


def normal_quantile(p: float) -> float:
    """
    Inverse standard normal CDF.

    ``ndtri`` gives the starting value; one Newton step against ``ndtr``
    polishes it to well below 1e-9 absolute.
    """
    p = validate_probability(p, "p")
    x = float(special.ndtri(p))
    density = np.exp(-0.5 * x * x) / _SQRT_2PI
    if density > 0:
        x -= (float(special.ndtr(x)) - p) / density
    return x


def chi2_quantile(d: int, p: float) -> float:
    """
    Order-p quantile of the chi-square distribution with d degrees of freedom.

    Inverts the regularized lower incomplete gamma function, then applies one
    Newton step on ``gammainc`` for a relative accuracy of about 1e-8 or better.
    """
    if int(d) != d or d < 1:
        raise ValidationError(f"degrees of freedom must be a positive integer (got {d})", field="d")
    p = validate_probability(p, "p")
    a = d / 2.0
    x = 2.0 * float(special.gammaincinv(a, p))
    if x > 0:
        # chi2 density at x
        log_pdf = (a - 1.0) * np.log(x / 2.0) - x / 2.0 - special.gammaln(a) - np.log(2.0)
        density = float(np.exp(log_pdf))
        if density > 0:
            step = (float(special.gammainc(a, x / 2.0)) - p) / density
            if abs(step) < 0.5 * x:
                x -= step
    return x


def allocate(
    budget: ConfidenceBudget,
    midpoints: Sequence[float],
    weights: Optional[Iterable[float]] = None,
) -> RadiusAssignment:
    """
    Split the pointwise failure budget over the midpoints.

    Args:
        budget: Confidence budget; only ``pointwise_share`` is consumed here
        midpoints: The odd-edge midpoints
        weights: Positive per-midpoint weights, or None for uniform

    Returns:
        RadiusAssignment with sum(delta) = 1 - pointwise_share

    Raises:
        ValidationError: empty midpoints, bad weights, or some delta_v >= 1
    """
    m = np.asarray(midpoints, dtype=np.float64).ravel()
    if m.size == 0:
        raise ValidationError("allocate needs at least one midpoint", field="midpoints")

    if weights is None:
        w = np.ones(m.size)
    else:
        w = validate_weights(list(weights), m.size)

    failure = 1.0 - budget.pointwise_share
    delta = w / w.sum() * failure
    too_big = np.flatnonzero(delta >= 1.0)
    if too_big.size:
        i = int(too_big[0])
        raise ValidationError(
            f"failure mass {delta[i]:.6g} >= 1 at midpoint {m[i]!r}; weights are too skewed",
            field="weights",
            details={"midpoint": float(m[i]), "index": i},
        )

    z = special.ndtri(1.0 - delta / 2.0)
    # same Newton polish as normal_quantile, vectorized
    target = 1.0 - delta / 2.0
    density = np.exp(-0.5 * z * z) / _SQRT_2PI
    z = z - (special.ndtr(z) - target) / density
    logger.debug(
        f"Allocated {m.size} radii: z in [{z.min():.6f}, {z.max():.6f}], "
        f"total failure {delta.sum():.6g}"
    )
    return RadiusAssignment(midpoints=m, z=z, delta=delta)


def region_weights(
    midpoints: Sequence[float],
    regions: Sequence[WeightRegion],
    default: float = 1.0,
) -> np.ndarray:
    """Weights from (interval, weight) regions; later regions override earlier ones."""
    m = np.asarray(midpoints, dtype=np.float64)
    w = np.full(m.size, float(default))
    for region in regions:
        w[(m >= region.lower) & (m <= region.upper)] = region.weight
    return w


def refinement_weights(
    complex_: CellComplex1D,
    supports: Sequence[Tuple[float, float]],
    inner_weight: float,
) -> np.ndarray:
    """
    Weights that tighten the bands over the given supports.

    Midpoints whose odd edge lies within one edge of a support get
    ``inner_weight``; all others keep weight 1. A larger failure share gives
    a smaller z, so images over the supports shrink while the rest widen.
    """
    m = complex_.odd_midpoints()
    eps = complex_.epsilon
    w = np.ones(m.size)
    for lo, hi in supports:
        w[(m >= lo - eps) & (m <= hi + eps)] = inner_weight
    return w
