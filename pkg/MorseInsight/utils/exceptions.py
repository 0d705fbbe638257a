# exceptions.py
"""
Custom exception classes for the MorseInsight pipeline.

Provides specific exception types for the failure modes of each pipeline
stage: bad user input, malformed data files, degenerate likelihoods,
enclosures whose Lipschitz constant is too small, and internal invariant
violations.
"""

from typing import Optional, Dict, Any
from MorseInsight.utils.logger import get_logger

logger = get_logger(__name__)


class MorseInsightError(Exception):
    """
    Base exception class for all MorseInsight-specific errors.

    All custom exceptions inherit from this base class to allow
    catching all MorseInsight errors with a single except clause.
    """

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        """
        Initialize the base exception.

        Args:
            message: Human-readable error message
            details: Optional dictionary with additional error context
        """
        self.message = message
        self.details = details or {}
        super().__init__(self.message)

    def __str__(self) -> str:
        """Return string representation of the error."""
        if self.details:
            return f"{self.message} - Details: {self.details}"
        return self.message


class ValidationError(MorseInsightError):
    """
    Raised when user-supplied input fails validation.

    Covers domains, probabilities, weights and sample sets (duplicate or
    out-of-domain x values).
    """

    def __init__(
        self,
        message: str,
        field: Optional[str] = None,
        details: Optional[Dict[str, Any]] = None
    ):
        """
        Initialize validation error.

        Args:
            message: Human-readable error message
            field: Name of the field that failed validation
            details: Optional dictionary with additional error context
        """
        self.field = field
        error_details = details or {}
        if field:
            error_details["field"] = field

        super().__init__(message, error_details)
        logger.debug(f"ValidationError: {self} (field={field})")


class DataFormatError(MorseInsightError):
    """Raised when a training-data CSV file cannot be parsed."""

    def __init__(
        self,
        message: str,
        path: Optional[str] = None,
        line_number: Optional[int] = None,
        details: Optional[Dict[str, Any]] = None
    ):
        """
        Initialize data format error.

        Args:
            message: Human-readable error message
            path: File that failed to parse
            line_number: 1-based line number of the offending row
            details: Optional dictionary with additional error context
        """
        self.path = path
        self.line_number = line_number
        error_details = details or {}
        if path:
            error_details["path"] = path
        if line_number is not None:
            error_details["line"] = line_number

        super().__init__(message, error_details)
        logger.warning(f"DataFormatError: {self}")


class DegenerateDataError(MorseInsightError):
    """Raised when the profile likelihood is undefined (constant residuals)."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, details)
        logger.warning(f"DegenerateDataError: {self}")


class GPFitError(MorseInsightError):
    """
    Raised when a covariance factorization fails.

    Signals a near-singular correlation matrix. The caller should widen the
    jitter or shrink the search bounds (or coarsen the sampling grid).
    """

    def __init__(
        self,
        message: str,
        theta: Optional[float] = None,
        details: Optional[Dict[str, Any]] = None
    ):
        """
        Initialize GP fit error.

        Args:
            message: Human-readable error message
            theta: Length parameter at which the failure happened
            details: Optional dictionary with additional error context
        """
        self.theta = theta
        error_details = details or {}
        if theta is not None:
            error_details["theta"] = theta

        super().__init__(message, error_details)
        logger.warning(f"GPFitError: {self}")


class EnclosureError(MorseInsightError):
    """
    Raised when the enclosure cannot be built.

    The usual cause is a Lipschitz constant too small for the rays between
    consecutive midpoint bands to intersect; ``required_L`` then holds the
    smallest constant that would work.
    """

    def __init__(
        self,
        message: str,
        required_L: Optional[float] = None,
        index: Optional[int] = None,
        details: Optional[Dict[str, Any]] = None
    ):
        """
        Initialize enclosure error.

        Args:
            message: Human-readable error message
            required_L: Minimal Lipschitz constant satisfying ray validity
            index: Offending edge or midpoint index
            details: Optional dictionary with additional error context
        """
        self.required_L = required_L
        self.index = index
        error_details = details or {}
        if required_L is not None:
            error_details["required_L"] = required_L
        if index is not None:
            error_details["index"] = index

        super().__init__(message, error_details)
        logger.error(f"EnclosureError: {self}")


class AcyclicityError(MorseInsightError):
    """Raised when the images of the edges around a vertex share no vertex."""

    def __init__(
        self,
        message: str,
        vertex: Optional[int] = None,
        details: Optional[Dict[str, Any]] = None
    ):
        self.vertex = vertex
        error_details = details or {}
        if vertex is not None:
            error_details["vertex"] = vertex

        super().__init__(message, error_details)
        logger.error(f"AcyclicityError: {self}")


class InvariantViolationError(MorseInsightError):
    """
    Raised when an internal invariant fails at runtime.

    These are never caused by user input; they indicate a bug upstream of
    the failing check.
    """

    def __init__(
        self,
        message: str,
        check: Optional[str] = None,
        details: Optional[Dict[str, Any]] = None
    ):
        self.check = check
        error_details = details or {}
        if check:
            error_details["check"] = check

        super().__init__(message, error_details)
        logger.error(f"InvariantViolationError: {self}")


class ConfigurationError(MorseInsightError):
    """
    Raised when there's a configuration error.

    This exception is used when the experiment configuration is missing,
    unreadable or fails schema validation.
    """

    def __init__(
        self,
        message: str,
        config_key: Optional[str] = None,
        details: Optional[Dict[str, Any]] = None
    ):
        """
        Initialize configuration error.

        Args:
            message: Human-readable error message
            config_key: The configuration key that caused the error
            details: Optional dictionary with additional error context
        """
        self.config_key = config_key
        error_details = details or {}
        if config_key:
            error_details["config_key"] = config_key

        super().__init__(message, error_details)
        logger.error(f"ConfigurationError: {self} (config_key={config_key})")


class PipelineError(MorseInsightError):
    """
    Raised when a pipeline stage fails.

    Wraps the underlying MorseInsightError and records which stage
    (data, fit, allocate, enclosure, morse, conley, render) it came from.
    """

    def __init__(
        self,
        message: str,
        stage: Optional[str] = None,
        details: Optional[Dict[str, Any]] = None
    ):
        self.stage = stage
        error_details = details or {}
        if stage:
            error_details["stage"] = stage

        super().__init__(message, error_details)
        logger.error(f"PipelineError: {self} (stage={stage})")
