"""
Hawkes model service layer.

Branching matrices (from a model by quadrature, or from a fit with confidence
half-widths), spectral radius and the stability criterion spr(K) < 1.
"""

import logging
import math
from typing import Optional

import numpy as np
from scipy.stats import norm

from app.config import settings
from app.core.exceptions import (
    DiagnosticsUnavailableException,
    EvaluationException,
    InvalidParameterException,
    RejectedSpecException,
)
from app.schemas.fit import HawkesFit
from app.schemas.hawkes import BranchingEstimate, BranchingMatrix, ExcitementBase, HawkesSpec

logger = logging.getLogger(__name__)

POWER_ITERATIONS = 10_000
POWER_TOL = 1e-12


def spectral_radius(matrix: np.ndarray) -> float:
    """
    Spectral radius of a non-negative square matrix.

    Closed form for 2 x 2. Otherwise power iteration on K + I, whose Perron root is
    spr(K) + 1 and which is primitive whenever K is irreducible, so periodic K still
    converge; falls back to an eigendecomposition if iteration stalls.

    Args:
        matrix: Non-negative square matrix

    Returns:
        max |eigenvalue|
    """
    K = np.asarray(matrix, dtype=float)
    d = K.shape[0]
    if not np.all(np.isfinite(K)):
        raise InvalidParameterException(message="Branching matrix has non-finite entries")
    if d == 1:
        return float(abs(K[0, 0]))
    if d == 2:
        trace = K[0, 0] + K[1, 1]
        discriminant = (K[0, 0] - K[1, 1]) ** 2 + 4.0 * K[0, 1] * K[1, 0]
        return float(abs(0.5 * (trace + math.sqrt(max(discriminant, 0.0)))))

    shifted = K + np.eye(d)
    vector = np.ones(d) / d
    estimate = 0.0
    for _ in range(POWER_ITERATIONS):
        image = shifted @ vector
        total = image.sum()
        if total == 0:
            return 0.0
        image /= total
        previous, estimate = estimate, total
        vector = image
        if abs(estimate - previous) <= POWER_TOL * max(1.0, estimate):
            return float(max(estimate - 1.0, 0.0))

    logger.warning("Power iteration did not converge; using eigendecomposition")
    return float(np.max(np.abs(np.linalg.eigvals(K))))


def integrate_excitement(h: ExcitementBase, step: Optional[float] = None) -> float:
    """
    Midpoint-rule integral of one excitement component over its declared support.

    Args:
        h: Excitement component
        step: Quadrature step; defaults to support / QUADRATURE_DIVISIONS

    Returns:
        Approximation of the integral of h

    Raises:
        InvalidParameterException: If the support is unbounded or the step invalid
        EvaluationException: If h returns non-finite values
    """
    support = h.support
    if support == 0:
        return 0.0
    if not math.isfinite(support):
        raise InvalidParameterException(
            message="Excitement has unbounded support; declare a cutoff first",
            details={"family": getattr(h, "family", type(h).__name__)},
        )
    if step is None:
        step = support / settings.QUADRATURE_DIVISIONS
    if not step > 0:
        raise InvalidParameterException(
            message="Quadrature step must be positive", details={"step": step}
        )

    cells = max(int(math.ceil(support / step - 1e-9)), 1)
    width = support / cells
    midpoints = (np.arange(cells) + 0.5) * width
    values = h.evaluate(midpoints)
    if not np.all(np.isfinite(values)):
        raise EvaluationException(
            message="Excitement returned non-finite values",
            details={"family": getattr(h, "family", type(h).__name__)},
        )
    return float(values.sum() * width)


def branching_matrix(spec: HawkesSpec, quadrature_step: Optional[float] = None) -> BranchingMatrix:
    """
    K_{ij} = integral of h_{i,j} by the midpoint rule, with its spectral radius.

    Args:
        spec: Hawkes model
        quadrature_step: Step for every component; None uses support / divisions

    Returns:
        Branching matrix
    """
    K = np.array(
        [[integrate_excitement(h, quadrature_step) for h in row] for row in spec.excitement]
    )
    radius = spectral_radius(K)
    logger.debug(f"Branching matrix {K.tolist()} with spectral radius {radius:.6f}")
    return BranchingMatrix(matrix=K, spectral_radius=radius)


def stability_check(K: BranchingMatrix, tol: Optional[float] = None) -> bool:
    """True iff spr(K) < 1 - tol."""
    tol = settings.STABILITY_TOL if tol is None else tol
    return bool(K.spectral_radius < 1.0 - tol)


def require_stable(spec: HawkesSpec, quadrature_step: Optional[float] = None) -> BranchingMatrix:
    """
    Branching matrix of a spec that must be simulable.

    Raises:
        RejectedSpecException: If a support is unbounded or spr(K) >= 1 - tol
    """
    if not math.isfinite(spec.max_support):
        raise RejectedSpecException(
            message="Excitement with unbounded support cannot be simulated; truncate first"
        )
    K = branching_matrix(spec, quadrature_step)
    if not stability_check(K):
        raise RejectedSpecException(
            message="Model is not stable: spectral radius of K must be below 1",
            details={"spectral_radius": K.spectral_radius},
        )
    return K


def stationary_intensity(spec: HawkesSpec, quadrature_step: Optional[float] = None) -> np.ndarray:
    """Mean event rate per component, (I - K)^{-1} eta."""
    K = require_stable(spec, quadrature_step)
    return np.linalg.solve(np.eye(spec.d) - K.matrix, spec.eta)


def branching_from_fit(fit: HawkesFit, level: Optional[float] = None) -> BranchingEstimate:
    """
    K_hat_{ij} = sum_k delta (H_k)_{ij} with half-widths from the covariance estimate.

    Var(K_hat_{ij}) = delta^2 sum_{k1,k2} Cov((H_k1)_{ij}, (H_k2)_{ij}), read from s2 with
    the column-major index (k-1)d^2 + (j-1)d + i (1-based).

    Args:
        fit: Hawkes fit carrying s2
        level: Confidence level of the half-widths (default CI_LEVEL)

    Returns:
        Branching estimate (point estimate, half-widths, spectral radius of the point)

    Raises:
        DiagnosticsUnavailableException: If the fit has no covariance estimate
    """
    if fit.s2 is None:
        raise DiagnosticsUnavailableException(message="Fit carries no covariance estimate")
    level = settings.CI_LEVEL if level is None else level

    d, p = fit.d, fit.p
    matrix = fit.integrated_excitement
    lags = np.arange(p)
    variance = np.zeros((d, d))
    for i in range(d):
        for j in range(d):
            index = lags * d * d + j * d + i
            variance[i, j] = fit.delta**2 * fit.s2[np.ix_(index, index)].sum()

    if np.any(variance < -settings.PSD_SLACK):
        logger.warning("Negative branching variance beyond slack; clamping to 0")
    z = float(norm.ppf(0.5 * (1.0 + level)))
    half_width = z * np.sqrt(np.clip(variance, 0.0, None))

    # fitted entries may be negative, so the Perron shortcuts do not apply
    radius = float(np.max(np.abs(np.linalg.eigvals(matrix))))

    return BranchingEstimate(
        matrix=matrix, half_width=half_width, spectral_radius=radius, level=level
    )
