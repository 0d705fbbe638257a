"""
Input validation utilities for MorseInsight.

Provides functions to validate user-supplied numbers, domains, sample sets
and confidence weights before they reach the numerical pipeline.
"""

import math
from typing import Any, Sequence, Tuple

import numpy as np

from config.config import Domain
from MorseInsight.utils.logger import get_logger
from MorseInsight.utils.exceptions import ValidationError

logger = get_logger("Validators")


# --------------------------------------------------------------------------------
# Validator 1: Validate Finite Number
# --------------------------------------------------------------------------------
def validate_finite_number(value: Any, field_name: str = "value") -> float:
    """
    Validate that a value is a finite real number.

    Args:
        value: The value to validate
        field_name: Name of the field being validated (for error messages)

    Returns:
        float: The validated value as a float

    Raises:
        ValidationError: If the value is missing, not numeric, NaN or infinite
    """
    logger.debug(f"Validating finite number for field '{field_name}': {value}")

    if value is None:
        logger.error(f"Finite number validation failed: No value provided for '{field_name}'")
        raise ValidationError(f"{field_name} is required", field=field_name)

    try:
        numeric_value = float(value)
    except (TypeError, ValueError):
        logger.error(f"Finite number validation failed: Cannot convert '{value}' to number")
        raise ValidationError(f"{field_name} must be a valid number", field=field_name)

    if not math.isfinite(numeric_value):
        logger.error(f"Finite number validation failed: {field_name}={numeric_value}")
        raise ValidationError(f"{field_name} must be finite (got {numeric_value})", field=field_name)

    return numeric_value


# --------------------------------------------------------------------------------
# Validator 2: Validate Positive Number
# --------------------------------------------------------------------------------
def validate_positive_number(value: Any, field_name: str = "value") -> float:
    """
    Validate that a value is a positive number.

    Ensures the value is numeric, finite and greater than zero.
    Raises ValidationError if validation fails.

    Args:
        value: The value to validate
        field_name: Name of the field being validated (for error messages)

    Returns:
        float: The validated value as a float

    Raises:
        ValidationError: If the value is not a positive number
    """
    numeric_value = validate_finite_number(value, field_name)

    if numeric_value <= 0:
        logger.error(f"Positive number validation failed: Value {numeric_value} is not positive")
        raise ValidationError(
            f"{field_name} must be greater than zero (got {numeric_value})",
            field=field_name
        )

    return numeric_value


# --------------------------------------------------------------------------------
# Validator 3: Validate Open-Interval Probability
# --------------------------------------------------------------------------------
def validate_probability(value: Any, field_name: str = "p") -> float:
    """
    Validate that a value lies strictly between 0 and 1.

    Args:
        value: The value to validate
        field_name: Name of the field being validated (for error messages)

    Returns:
        float: The validated probability

    Raises:
        ValidationError: If the value is outside (0, 1)
    """
    numeric_value = validate_finite_number(value, field_name)

    if not 0.0 < numeric_value < 1.0:
        logger.error(f"Probability validation failed: {field_name}={numeric_value}")
        raise ValidationError(
            f"{field_name} must lie strictly between 0 and 1 (got {numeric_value})",
            field=field_name
        )

    return numeric_value


# --------------------------------------------------------------------------------
# Validator 4: Validate Domain Bounds
# --------------------------------------------------------------------------------
def validate_domain(lower: Any, upper: Any) -> Domain:
    """
    Validate interval bounds and build a Domain.

    Args:
        lower: Left endpoint alpha
        upper: Right endpoint beta

    Returns:
        Domain: the validated interval

    Raises:
        ValidationError: If either bound is not finite or lower >= upper
    """
    lo = validate_finite_number(lower, "domain.lower")
    hi = validate_finite_number(upper, "domain.upper")

    if not lo < hi:
        logger.error(f"Domain validation failed: [{lo}, {hi}]")
        raise ValidationError(
            f"domain lower bound must be below upper bound (got [{lo}, {hi}])",
            field="domain"
        )

    return Domain(lower=lo, upper=hi)


# --------------------------------------------------------------------------------
# Validator 5: Validate Sample Points
# --------------------------------------------------------------------------------
def validate_sample_points(
    xs: Sequence[float],
    ys: Sequence[float],
    domain: Domain,
    min_count: int = 2,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Validate a noise-free training sample.

    Duplicate inputs are rejected exactly (no tolerance): with a noise-free
    kernel they make the correlation matrix singular.

    Args:
        xs: Sample inputs
        ys: Sample outputs
        domain: Interval every input must lie in
        min_count: Smallest accepted sample size

    Returns:
        Tuple[np.ndarray, np.ndarray]: float64 copies of xs and ys, order kept

    Raises:
        ValidationError: On length mismatch, too few points, non-finite
                         values, inputs outside the domain or duplicate inputs
    """
    x = np.asarray(xs, dtype=np.float64).ravel().copy()
    y = np.asarray(ys, dtype=np.float64).ravel().copy()
    logger.debug(f"Validating {x.size} sample points on [{domain.lower}, {domain.upper}]")

    if x.size != y.size:
        raise ValidationError(f"got {x.size} inputs but {y.size} outputs", field="points")
    if x.size < min_count:
        raise ValidationError(f"need at least {min_count} points (got {x.size})", field="points")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValidationError("sample values must be finite", field="points")

    outside = np.flatnonzero((x < domain.lower) | (x > domain.upper))
    if outside.size:
        bad = float(x[outside[0]])
        logger.error(f"Sample validation failed: x={bad} outside domain")
        raise ValidationError(
            f"x={bad!r} lies outside the domain [{domain.lower}, {domain.upper}]",
            field="x",
            details={"index": int(outside[0])},
        )

    ordered = np.sort(x)
    dup = np.flatnonzero(np.diff(ordered) == 0.0)
    if dup.size:
        bad = float(ordered[dup[0]])
        logger.error(f"Sample validation failed: duplicate x={bad}")
        raise ValidationError(f"duplicate sample input x={bad!r}", field="x")

    return x, y


# --------------------------------------------------------------------------------
# Validator 6: Validate Confidence Weights
# --------------------------------------------------------------------------------
def validate_weights(weights: Sequence[float], count: int) -> np.ndarray:
    """
    Validate per-midpoint failure-budget weights.

    Args:
        weights: One positive finite weight per midpoint
        count: Expected number of weights

    Returns:
        np.ndarray: the weights as float64

    Raises:
        ValidationError: On wrong length or a non-positive / non-finite weight
    """
    w = np.asarray(weights, dtype=np.float64).ravel()
    if w.size != count:
        raise ValidationError(f"expected {count} weights, got {w.size}", field="weights")
    bad = np.flatnonzero(~np.isfinite(w) | (w <= 0))
    if bad.size:
        raise ValidationError(
            f"weights must be positive and finite (index {int(bad[0])} is {w[bad[0]]})",
            field="weights",
            details={"index": int(bad[0])},
        )
    return w
