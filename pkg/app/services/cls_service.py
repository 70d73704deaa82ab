"""
Conditional least-squares estimation service.

Builds the INAR(p) design from bin counts, solves the normal equations through a
Cholesky factorization of Z Z^T, rescales the coefficients by 1/delta into the Hawkes
estimator and attaches the sandwich covariance estimate used for confidence intervals.
"""

import logging
import math
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import sparse as sp
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.stats import norm

from app.config import settings
from app.core.exceptions import (
    DiagnosticsUnavailableException,
    InvalidOrderException,
    InvalidParameterException,
    SingularDesignException,
    UnderdeterminedException,
)
from app.schemas.events import BinCountSequence
from app.schemas.fit import ClsResult, DesignMatrices, HawkesFit

logger = logging.getLogger(__name__)

# columns of the residual-weighted design processed per block of the sandwich sum
_SANDWICH_BLOCK = 8_192


def max_lag(support: float, delta: float) -> int:
    """p = ceil(s / delta), robust to rounding noise in the ratio."""
    return int(math.ceil(round(support / delta, 9)))


def build_design(
    bc: BinCountSequence,
    p: int,
    sparse: bool = False,
    check_estimability: bool = True,
    margin: Optional[int] = None,
) -> DesignMatrices:
    """
    Design matrix Z and targets Y of the CLS regression at order p.

    Column k (k = p+1..n) of Z is (X_{k-1}^T, ..., X_{k-p}^T, 1)^T; Y holds X_{p+1..n}.

    Args:
        bc: Bin counts
        p: Autoregressive order
        sparse: Store Z as a CSR matrix
        check_estimability: Enforce n - p >= dp + 1 + margin
        margin: Estimability margin (default ESTIMABILITY_MARGIN)

    Returns:
        Design matrices

    Raises:
        InvalidOrderException: If p < 1 or p >= n
        UnderdeterminedException: If too few usable bins remain
    """
    n, d = bc.n, bc.d
    if p < 1 or p >= n:
        raise InvalidOrderException(
            message="Order must satisfy 1 <= p < n", details={"p": p, "n": n}
        )
    margin = settings.ESTIMABILITY_MARGIN if margin is None else margin
    if check_estimability and n - p < d * p + 1 + margin:
        raise UnderdeterminedException(
            message="Too few bins for the number of coefficients",
            details={"usable_bins": n - p, "required": d * p + 1 + margin},
        )

    X = bc.counts.astype(float)
    blocks = [X[p - lag : n - lag].T for lag in range(1, p + 1)]
    ones = np.ones((1, n - p))
    if sparse:
        Z = sp.vstack([sp.csr_matrix(block) for block in blocks] + [sp.csr_matrix(ones)]).tocsr()
    else:
        Z = np.vstack(blocks + [ones])
    Y = X[p:].T.copy()

    return DesignMatrices(Z=Z, Y=Y, d=d, p=p, n=n)


def _gram(dm: DesignMatrices) -> np.ndarray:
    gram = dm.Z @ dm.Z.T
    return gram.toarray() if sp.issparse(gram) else np.asarray(gram)


def _left_apply(matrix: np.ndarray, dm: DesignMatrices) -> np.ndarray:
    """matrix @ Z for dense or sparse Z."""
    if dm.is_sparse:
        return np.asarray((dm.Z.T @ matrix.T).T)
    return matrix @ dm.Z


def cls_fit(dm: DesignMatrices, condition_limit: Optional[float] = None) -> ClsResult:
    """
    B_hat = Y Z^T (Z Z^T)^{-1} by a Cholesky solve of the normal equations.

    Args:
        dm: Design matrices
        condition_limit: Largest accepted condition number of Z Z^T

    Returns:
        Coefficients, residuals U = Y - B_hat Z and (Z Z^T)^{-1}

    Raises:
        SingularDesignException: If Z Z^T is rank deficient or ill-conditioned
    """
    condition_limit = settings.CONDITION_LIMIT if condition_limit is None else condition_limit
    gram = _gram(dm)
    eigenvalues = np.linalg.eigvalsh(gram)
    condition = math.inf if eigenvalues[0] <= 0 else float(eigenvalues[-1] / eigenvalues[0])
    if condition > condition_limit:
        raise SingularDesignException(
            message="Design Gram matrix is singular or ill-conditioned",
            details={"condition_number": condition, "limit": condition_limit},
        )

    try:
        factor = cho_factor(gram)
    except LinAlgError:
        raise SingularDesignException(message="Design Gram matrix is not positive definite")

    rhs = dm.Z @ dm.Y.T
    coefficients = cho_solve(factor, np.asarray(rhs)).T
    residuals = dm.Y - _left_apply(coefficients, dm)
    gram_inverse = cho_solve(factor, np.eye(gram.shape[0]))
    gram_inverse = 0.5 * (gram_inverse + gram_inverse.T)

    logger.debug(
        f"CLS fit d={dm.d} p={dm.p} columns={dm.columns} condition={condition:.3e}"
    )
    return ClsResult(
        coefficients=coefficients,
        residuals=residuals,
        gram_inverse=gram_inverse,
        condition_number=condition,
        design=dm,
    )


def covariance_estimate(result: ClsResult, delta: float) -> np.ndarray:
    """
    Sandwich covariance of vec(H_hat).

    S2 = delta^{-2} (M (x) I_d) [sum_k w_k w_k^T] (M (x) I_d) with M = (Z Z^T)^{-1} and
    w_k = Z_k (x) u_k. Since (M (x) I_d) w_k = (M Z_k) (x) u_k, the product is formed
    block by block from M Z and the residuals without any Kronecker matrix.

    Args:
        result: CLS result
        delta: Bin width

    Returns:
        Symmetric (d^2 p + d) x (d^2 p + d) covariance estimate
    """
    dm = result.design
    d = dm.d
    scaled_design = _left_apply(result.gram_inverse, dm)
    size = scaled_design.shape[0] * d
    s2 = np.zeros((size, size))
    for start in range(0, dm.columns, _SANDWICH_BLOCK):
        stop = min(start + _SANDWICH_BLOCK, dm.columns)
        weighted = (
            scaled_design[:, None, start:stop] * result.residuals[None, :, start:stop]
        ).reshape(size, stop - start)
        s2 += weighted @ weighted.T
    s2 /= delta**2
    return 0.5 * (s2 + s2.T)


def hawkes_estimator(
    bc: BinCountSequence,
    support: float,
    sparse: bool = False,
    with_covariance: bool = True,
    condition_limit: Optional[float] = None,
) -> HawkesFit:
    """
    Hawkes estimator H_hat = B_hat / delta at maximal lag p = ceil(s / delta).

    Block k of the rescaled coefficient matrix is H_k (estimating h(k delta)), the last
    column is eta_hat.

    Args:
        bc: Bin counts at width delta
        support: Support parameter s with delta <= s < n delta
        sparse: Use the sparse design path
        with_covariance: Attach the covariance estimate
        condition_limit: Override of CONDITION_LIMIT

    Returns:
        Hawkes fit

    Raises:
        InvalidParameterException: If the support is outside [delta, n delta)
        SingularDesignException, UnderdeterminedException: Propagated from the fit
    """
    delta = bc.delta
    if not delta <= support < bc.n * delta:
        raise InvalidParameterException(
            message="Support must satisfy delta <= s < n * delta",
            details={"support": support, "delta": delta, "n": bc.n},
        )
    p = max_lag(support, delta)
    dm = build_design(bc, p, sparse=sparse)
    result = cls_fit(dm, condition_limit=condition_limit)

    scaled = result.coefficients / delta
    d = bc.d
    hhat = np.stack([scaled[:, k * d : (k + 1) * d] for k in range(p)])
    eta_hat = scaled[:, -1]
    s2 = covariance_estimate(result, delta) if with_covariance else None

    logger.info(
        f"Hawkes fit delta={delta} s={support} p={p} n={bc.n} d={d} "
        f"eta_hat={np.round(eta_hat, 4).tolist()}"
    )
    return HawkesFit(
        delta=delta,
        support=support,
        p=p,
        n=bc.n,
        d=d,
        hhat=hhat,
        eta_hat=eta_hat,
        s2=s2,
        condition_number=result.condition_number,
        dropped_tail=bc.dropped_tail,
    )


def vec_index(d: int, p: int, target: Sequence[int]) -> int:
    """
    1-based position of a target in vec(H_hat).

    (k, i, j) -> (k-1)d^2 + (j-1)d + i for excitement, (i,) -> p d^2 + i for baseline.

    Raises:
        InvalidParameterException: If the target is out of range
    """
    target = tuple(int(value) for value in target)
    if len(target) == 3:
        k, i, j = target
        if not (1 <= k <= p and 1 <= i <= d and 1 <= j <= d):
            raise InvalidParameterException(
                message="Excitement target out of range", details={"target": target, "d": d, "p": p}
            )
        return (k - 1) * d * d + (j - 1) * d + i
    if len(target) == 1:
        (i,) = target
        if not 1 <= i <= d:
            raise InvalidParameterException(
                message="Baseline target out of range", details={"target": target, "d": d}
            )
        return p * d * d + i
    raise InvalidParameterException(
        message="Target must be (k, i, j) or (i,)", details={"target": target}
    )


def _z_value(level: float) -> float:
    if not 0 < level < 1:
        raise InvalidParameterException(
            message="Level must lie in (0, 1)", details={"level": level}
        )
    return float(norm.ppf(0.5 * (1.0 + level)))


def confidence_interval(
    fit: HawkesFit, target: Sequence[int], level: Optional[float] = None
) -> Tuple[float, float]:
    """
    Point estimate and half-width of a marginal confidence interval.

    Args:
        fit: Hawkes fit with s2
        target: (k, i, j) for h_{i,j}(k delta) or (i,) for eta_i, 1-based
        level: Confidence level (default CI_LEVEL)

    Returns:
        (point, half_width)
    """
    level = settings.CI_LEVEL if level is None else level
    z = _z_value(level)
    index = vec_index(fit.d, fit.p, target) - 1
    if fit.s2 is None:
        raise DiagnosticsUnavailableException(message="Fit carries no covariance estimate")

    if len(target) == 3:
        k, i, j = target
        point = float(fit.hhat[k - 1, i - 1, j - 1])
    else:
        point = float(fit.eta_hat[target[0] - 1])

    variance = float(fit.s2[index, index])
    if variance < -settings.PSD_SLACK:
        logger.warning(f"Variance {variance:.3e} below PSD slack at index {index + 1}")
    return point, z * math.sqrt(max(variance, 0.0))


def fit_to_grid_rows(fit: HawkesFit, level: Optional[float] = None) -> pd.DataFrame:
    """Plot table of (t, i, j, estimate, ci_low, ci_high) rows, 1-based components."""
    level = settings.CI_LEVEL if level is None else level
    z = _z_value(level)
    d, p = fit.d, fit.p
    components = np.arange(1, d + 1)
    k, i, j = np.meshgrid(np.arange(1, p + 1), components, components, indexing="ij")
    k, i, j = k.ravel(), i.ravel(), j.ravel()
    estimate = fit.hhat[k - 1, i - 1, j - 1]
    if fit.s2 is None:
        half = np.full(estimate.shape, np.nan)
    else:
        index = (k - 1) * d * d + (j - 1) * d + (i - 1)
        half = z * np.sqrt(np.clip(np.diag(fit.s2)[index], 0.0, None))
    return pd.DataFrame(
        {
            "t": k * fit.delta,
            "i": i,
            "j": j,
            "estimate": estimate,
            "ci_low": estimate - half,
            "ci_high": estimate + half,
        }
    )
