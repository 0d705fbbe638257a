"""
Noise-free Gaussian-process surrogate.

The prior is a constant mean beta plus a stationary process with variance
sigma^2 and squared-exponential correlation k(x, x') = exp(-(x - x')^2 / theta).
beta and sigma^2 have closed-form profile estimators for each theta; theta
minimizes N log(sigma^2(theta)) + log|K(theta)|.
"""

import time
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
from scipy import linalg, optimize
from scipy.spatial.distance import cdist

from config.config import (
    MORSE_DEFAULT_JITTER,
    MORSE_MAX_DIRECT_SAMPLING_GRID,
    KernelConfig,
)
from MorseInsight.utils.dataio import TrainingData
from MorseInsight.utils.exceptions import (
    DegenerateDataError,
    GPFitError,
    InvariantViolationError,
)
from MorseInsight.utils.logger import get_logger
from MorseInsight.utils.validators import validate_positive_number
from utils.rng import generator_for

logger = get_logger("GaussianProcess")

# Chunk size (grid rows) for covariance blocks during path extension
_EXTENSION_CHUNK = 4096
# Relative eigenvalue floor of the anchor covariance
_EIGEN_FLOOR = 1e-12
# Largest sampling jitter path_sampler tries, relative to max(1, sigma2)
_MAX_SAMPLING_JITTER = 1e-6


def correlation(xa, xb, theta: float) -> np.ndarray:
    """Squared-exponential correlation matrix between two point sets."""
    a = np.asarray(xa, dtype=np.float64).reshape(-1, 1)
    b = np.asarray(xb, dtype=np.float64).reshape(-1, 1)
    return np.exp(-cdist(a, b, "sqeuclidean") / theta)


@dataclass(frozen=True)
class Prediction:
    mean: float
    variance: float


@dataclass(frozen=True, eq=False)
class GpModel:
    """
    Fitted surrogate.

    Attributes:
        beta_hat: Constant-mean estimate
        sigma2_hat: Process-variance estimate (0 for degenerate data)
        theta_hat: Length parameter
        factored_K: Lower Cholesky factor of K(theta_hat) + jitter I
        alpha_weights: K^{-1} (y - beta_hat)
        data: Training data the model interpolates
        jitter: Diagonal jitter used in the factorization
        degenerate: True when all y are equal
    """

    beta_hat: float
    sigma2_hat: float
    theta_hat: float
    factored_K: np.ndarray
    alpha_weights: np.ndarray
    data: TrainingData
    jitter: float = MORSE_DEFAULT_JITTER
    degenerate: bool = False


@dataclass(frozen=True, eq=False)
class _Profile:
    chol: np.ndarray
    beta: float
    sigma2: float
    alpha: np.ndarray
    logdet: float


def _profile(theta: float, data: TrainingData, jitter: float) -> _Profile:
    """Closed-form profile estimators at one theta."""
    K = correlation(data.xs, data.xs, theta)
    K[np.diag_indices_from(K)] += jitter
    try:
        chol = linalg.cholesky(K, lower=True)
    except linalg.LinAlgError:
        raise GPFitError(f"correlation matrix is not positive definite at theta={theta:.6g}", theta=theta)

    ones = np.ones(len(data))
    k_inv_y = linalg.cho_solve((chol, True), data.ys)
    k_inv_1 = linalg.cho_solve((chol, True), ones)
    beta = float(ones @ k_inv_y / (ones @ k_inv_1))
    residual = data.ys - beta
    alpha = linalg.cho_solve((chol, True), residual)
    sigma2 = float(residual @ alpha) / len(data)
    logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
    return _Profile(chol=chol, beta=beta, sigma2=sigma2, alpha=alpha, logdet=logdet)


def neg_log_profile_likelihood(
    theta: float,
    data: TrainingData,
    jitter: float = MORSE_DEFAULT_JITTER,
) -> float:
    """
    N log(sigma2_hat(theta)) + log|K(theta)|.

    Raises:
        DegenerateDataError: when the residuals vanish (all y equal)
        GPFitError: when K(theta) + jitter I cannot be factored
    """
    theta = validate_positive_number(theta, "theta")
    if np.ptp(data.ys) == 0.0:
        raise DegenerateDataError("degenerate constant-residual data", details={"theta": theta})
    prof = _profile(theta, data, jitter)
    if not prof.sigma2 > 0.0:
        raise DegenerateDataError("degenerate constant-residual data", details={"theta": theta})
    return len(data) * np.log(prof.sigma2) + prof.logdet


def _golden_refine(objective, grid: np.ndarray, k: int) -> float:
    """Golden-section search on log theta inside the grid bracket around index k."""
    # Work in u = t - grid[k-1] + 1 so scipy's relative tolerance becomes an
    # absolute 1e-4 on log theta.
    shift = grid[k - 1] - 1.0
    width = grid[k + 1] - grid[k - 1]
    tol = 1e-4 / (2.0 + 2.0 * width)
    result = optimize.minimize_scalar(
        lambda u: objective(u + shift),
        bracket=(grid[k - 1] - shift, grid[k] - shift, grid[k + 1] - shift),
        method="golden",
        options={"xtol": tol},
    )
    return float(result.x + shift)


def fit(data: TrainingData, config: KernelConfig) -> GpModel:
    """
    Fit the surrogate by profile maximum likelihood.

    A log-spaced scan over the search bounds brackets the minimum, then a
    golden-section search refines log theta to 1e-4. Constant data returns a
    model flagged ``degenerate`` with sigma2_hat = 0.

    Raises:
        GPFitError: if every theta in the bounds fails to factor
    """
    logger.info(f"Fitting GP surrogate to {len(data)} points")
    start_time = time.time()
    jitter = config.jitter
    lo, hi = config.bounds_for(data.domain)

    if np.ptp(data.ys) == 0.0:
        theta = float(np.clip(config.theta, lo, hi))
        prof = _profile(theta, data, jitter)
        logger.warning(f"All {len(data)} outputs equal {data.ys[0]}; returning degenerate model")
        return GpModel(
            beta_hat=float(data.ys[0]),
            sigma2_hat=0.0,
            theta_hat=theta,
            factored_K=prof.chol,
            alpha_weights=np.zeros(len(data)),
            data=data,
            jitter=jitter,
            degenerate=True,
        )

    def objective(log_theta: float) -> float:
        try:
            return neg_log_profile_likelihood(float(np.exp(log_theta)), data, jitter)
        except (GPFitError, DegenerateDataError):
            return np.inf

    if not config.optimize:
        theta = config.theta
    else:
        grid = np.linspace(np.log(lo), np.log(hi), config.grid_points)
        values = np.array([objective(t) for t in grid])
        if not np.any(np.isfinite(values)):
            raise GPFitError(
                f"factorization failed for every theta in [{lo:.6g}, {hi:.6g}]",
                details={"bounds": [lo, hi]},
            )
        k = int(np.argmin(values))
        best_t, best_value = grid[k], values[k]
        if 0 < k < grid.size - 1 and np.isfinite(values[k - 1]) and np.isfinite(values[k + 1]) \
                and values[k] < values[k - 1] and values[k] < values[k + 1]:
            t = _golden_refine(objective, grid, k)
            value = objective(t)
            if value <= best_value:
                best_t, best_value = t, value
        theta = float(np.exp(best_t))
        logger.debug(f"theta scan minimum at index {k}; refined theta={theta:.6g}, objective={best_value:.10g}")

    prof = _profile(theta, data, jitter)
    model = GpModel(
        beta_hat=prof.beta,
        sigma2_hat=max(prof.sigma2, 0.0),
        theta_hat=theta,
        factored_K=prof.chol,
        alpha_weights=prof.alpha,
        data=data,
        jitter=jitter,
    )
    logger.info(
        f"Fitted GP (beta={model.beta_hat:.6g}, sigma2={model.sigma2_hat:.6g}, "
        f"theta={model.theta_hat:.6g}) in {time.time() - start_time:.3f} seconds"
    )
    return model


def _solve_cross(model: GpModel, xs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Cross-correlations k(x) (m x N) and V = L^{-1} k(x)^T (N x m)."""
    k = correlation(xs, model.data.xs, model.theta_hat)
    v = linalg.solve_triangular(model.factored_K, k.T, lower=True)
    return k, v


def predict_many(model: GpModel, xs) -> Tuple[np.ndarray, np.ndarray]:
    """Posterior means and variances at many points."""
    x = np.asarray(xs, dtype=np.float64).ravel()
    k, v = _solve_cross(model, x)
    mean = model.beta_hat + k @ model.alpha_weights
    variance = model.sigma2_hat * (1.0 - np.einsum("ij,ij->j", v, v))
    floor = -1e-8 * model.sigma2_hat
    if np.any(variance < floor):
        worst = int(np.argmin(variance))
        raise InvariantViolationError(
            f"posterior variance {variance[worst]:.3g} at x={x[worst]!r} is below roundoff level",
            check="variance_nonnegative",
        )
    return mean, np.maximum(variance, 0.0)


def predict(model: GpModel, x: float) -> Prediction:
    mean, variance = predict_many(model, [x])
    return Prediction(mean=float(mean[0]), variance=float(variance[0]))


def posterior_cov_matrix(model: GpModel, xs1, xs2) -> np.ndarray:
    """sigma2 (k(x1, x2) - k(x1)^T K^{-1} k(x2)) for all pairs."""
    a = np.asarray(xs1, dtype=np.float64).ravel()
    b = np.asarray(xs2, dtype=np.float64).ravel()
    _, va = _solve_cross(model, a)
    _, vb = _solve_cross(model, b)
    return model.sigma2_hat * (correlation(a, b, model.theta_hat) - va.T @ vb)


def posterior_cov(model: GpModel, x1: float, x2: float) -> float:
    return float(posterior_cov_matrix(model, [x1], [x2])[0, 0])


def _factor(cov: np.ndarray, jitter: float, theta: float) -> np.ndarray:
    """
    Lower Cholesky factor of cov + jitter I.

    Raises:
        GPFitError: when the jittered covariance is not positive definite
            (the grid is finer than the jitter supports)
    """
    cov = cov.copy()
    cov[np.diag_indices_from(cov)] += jitter
    try:
        return linalg.cholesky(cov, lower=True)
    except linalg.LinAlgError:
        raise GPFitError(
            f"{cov.shape[0]}-point grid covariance could not be factored with jitter {jitter:.3g}; "
            f"coarsen the grid or raise the jitter",
            theta=theta,
            details={"grid_points": int(cov.shape[0]), "jitter": float(jitter)},
        )


class PathSampler:
    """
    Posterior path sampler on a fixed grid.

    Grids of up to ``max_direct`` points are sampled through a factorization
    of the full grid covariance plus ``jitter`` I. Larger grids are sampled on
    an evenly spaced anchor subgrid and extended with the anchor eigenbasis
    (exact on the anchors). The factorization is done once, so repeated
    batches only pay for the draws.
    """

    def __init__(
        self,
        model: GpModel,
        grid,
        jitter: Optional[float] = None,
        max_direct: int = MORSE_MAX_DIRECT_SAMPLING_GRID,
    ):
        self.model = model
        self.grid = np.asarray(grid, dtype=np.float64).ravel()
        self.mean, _ = predict_many(model, self.grid)
        self._factor: Optional[np.ndarray] = None
        self._anchors: Optional[np.ndarray] = None
        self._basis: Optional[np.ndarray] = None
        if model.sigma2_hat == 0.0:
            return
        if jitter is None:
            jitter = model.jitter * max(1.0, model.sigma2_hat)

        g = self.grid
        if g.size <= max_direct:
            self._factor = _factor(posterior_cov_matrix(model, g, g), jitter, model.theta_hat)
            return

        anchor_idx = np.unique(np.round(np.linspace(0, g.size - 1, max_direct)).astype(np.int64))
        anchors = g[anchor_idx]
        lam, u = linalg.eigh(posterior_cov_matrix(model, anchors, anchors))
        keep = lam > _EIGEN_FLOOR * max(lam.max(), 0.0)
        if np.any(keep):
            self._anchors = anchors
            self._basis = u[:, keep] / np.sqrt(lam[keep])
            logger.debug(f"Path sampler uses {anchors.size} anchors with {int(keep.sum())} modes")

    def draw(self, count: int, rng: np.random.Generator) -> np.ndarray:
        """Draw ``count`` paths; returns shape (count, len(grid))."""
        if count < 1:
            raise GPFitError(f"path count must be positive (got {count})")
        if self._factor is not None:
            noise = rng.standard_normal((count, self._factor.shape[1]))
            return self.mean + noise @ self._factor.T
        if self._basis is None:
            return np.tile(self.mean, (count, 1))

        g = self.grid
        noise = rng.standard_normal((count, self._basis.shape[1]))
        paths = np.empty((count, g.size))
        for start in range(0, g.size, _EXTENSION_CHUNK):
            stop = min(start + _EXTENSION_CHUNK, g.size)
            modes = posterior_cov_matrix(self.model, g[start:stop], self._anchors) @ self._basis
            paths[:, start:stop] = self.mean[start:stop] + noise @ modes.T
        return paths


def path_sampler(
    model: GpModel,
    grid,
    max_direct: int = MORSE_MAX_DIRECT_SAMPLING_GRID,
) -> PathSampler:
    """
    PathSampler at the model jitter, raising the jitter tenfold while the
    grid covariance fails to factor.

    Raises:
        GPFitError: when the covariance still fails at 1e-6 max(1, sigma2)
    """
    scale = max(1.0, model.sigma2_hat)
    jitter = model.jitter * scale
    while True:
        try:
            return PathSampler(model, grid, jitter=jitter, max_direct=max_direct)
        except GPFitError:
            if jitter * 10.0 > _MAX_SAMPLING_JITTER * scale * (1.0 + 1e-9):
                raise
            jitter = max(jitter * 10.0, 1e-14 * scale)
            logger.warning(f"grid covariance not positive definite; retrying with jitter {jitter:.3g}")


def sample_posterior_paths(
    model: GpModel,
    grid,
    count: int,
    seed: Union[int, np.random.Generator],
    jitter: Optional[float] = None,
    max_direct: int = MORSE_MAX_DIRECT_SAMPLING_GRID,
) -> np.ndarray:
    """
    Draw posterior sample paths on a grid.

    Args:
        model: Fitted model
        grid: Ascending evaluation points
        count: Number of paths
        seed: Integer seed (stream "paths") or a Generator
        jitter: Diagonal jitter; by default the model jitter scaled by sigma2,
            raised while the grid covariance fails to factor
        max_direct: Largest grid factored directly

    Returns:
        np.ndarray: shape (count, len(grid))
    """
    if count < 1:
        raise GPFitError(f"path count must be positive (got {count})")
    rng = seed if isinstance(seed, np.random.Generator) else generator_for(int(seed), "paths")
    if jitter is None:
        return path_sampler(model, grid, max_direct=max_direct).draw(count, rng)
    return PathSampler(model, grid, jitter=jitter, max_direct=max_direct).draw(count, rng)
