"""
Selection of the estimator's tuning parameters.

The support s is chosen by AIC over the lag order at a preliminary bin size; the bin
size is chosen by scanning a decreasing sequence of widths until the baseline estimate
stops moving by more than its confidence half-widths.
"""

import logging
import math
from typing import List, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed
from scipy.linalg import LinAlgError, cholesky

from app.config import settings
from app.core.exceptions import (
    DegenerateResidualCovarianceException,
    HawkesException,
    InvalidParameterException,
    SelectionFailedException,
)
from app.schemas.events import BinCountSequence, EventStream
from app.schemas.selection import AicScan, BinSizeCandidate, BinSizeScan, Trend
from app.services.cls_service import (
    build_design,
    cls_fit,
    confidence_interval,
    hawkes_estimator,
    max_lag,
)
from app.services.event_service import bin_counts

logger = logging.getLogger(__name__)

# residual variance at or below this share of the mean square of the targets is an exact fit
_RESIDUAL_FLOOR = 1e-12


def aic_from_covariance(sigma: np.ndarray, p: int, d: int, n0: int) -> float:
    """
    AIC(p) = log det sigma + 2 p d^2 / (n0 - p).

    Raises:
        DegenerateResidualCovarianceException: If sigma is not positive definite
    """
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    try:
        factor = cholesky(sigma, lower=True)
    except LinAlgError:
        raise DegenerateResidualCovarianceException(
            message="Residual covariance is not positive definite", details={"p": p}
        )
    diagonal = np.diag(factor)
    if np.any(diagonal <= 0):
        raise DegenerateResidualCovarianceException(
            message="Residual covariance is singular", details={"p": p}
        )
    return float(2.0 * np.sum(np.log(diagonal)) + 2.0 * p * d * d / (n0 - p))


def aic_value(bc: BinCountSequence, p: int) -> float:
    """
    AIC of the INAR fit of order p on count-scale residuals.

    Raises:
        DegenerateResidualCovarianceException: If the residual covariance is degenerate
        InvalidOrderException, UnderdeterminedException, SingularDesignException:
            If the fit at order p is infeasible
    """
    dm = build_design(bc, p)
    residuals = cls_fit(dm).residuals
    sigma = residuals @ residuals.T / residuals.shape[1]
    floor = _RESIDUAL_FLOOR * np.mean(dm.Y**2, axis=1)
    if np.any(np.diag(sigma) <= floor):
        raise DegenerateResidualCovarianceException(
            message="Residual variance vanishes; the lagged counts fit exactly",
            details={"p": p, "residual_variance": np.diag(sigma).tolist()},
        )
    return aic_from_covariance(sigma, p, bc.d, bc.n)


def _aic_or_inf(bc: BinCountSequence, p: int) -> float:
    try:
        value = aic_value(bc, p)
    except HawkesException as exc:
        logger.warning(f"AIC candidate p={p} excluded: {exc.message}")
        return math.inf
    logger.debug(f"AIC(p={p}) = {value:.6f}")
    return value


def select_support(
    bc: BinCountSequence,
    delta0: float,
    s_max: float,
    workers: Optional[int] = None,
) -> AicScan:
    """
    AIC support selection over p = 1..ceil(s_max / delta0).

    Args:
        bc: Bin counts at the preliminary width delta0
        delta0: Preliminary bin size
        s_max: Largest support considered, below n * delta0
        workers: Parallel candidate fits (default WORKERS)

    Returns:
        Full AIC curve with the argmin; ties resolve to the smaller p

    Raises:
        InvalidParameterException: If bc was binned at another width or s_max is too large
        SelectionFailedException: If every candidate is degenerate
    """
    if not math.isclose(bc.delta, delta0, rel_tol=1e-12):
        raise InvalidParameterException(
            message="Bin counts were not built at delta0",
            details={"bin_width": bc.delta, "delta0": delta0},
        )
    if not 0 < s_max < bc.n * delta0:
        raise InvalidParameterException(
            message="s_max must satisfy 0 < s_max < n * delta0",
            details={"s_max": s_max, "n": bc.n, "delta0": delta0},
        )
    workers = settings.WORKERS if workers is None else workers
    candidates = list(range(1, max_lag(s_max, delta0) + 1))

    values = Parallel(n_jobs=workers, prefer="threads")(
        delayed(_aic_or_inf)(bc, p) for p in candidates
    )
    aic = np.array(values, dtype=float)
    if not np.any(np.isfinite(aic)):
        raise SelectionFailedException(
            message="Every AIC candidate is degenerate",
            details={"delta0": delta0, "candidates": candidates, "aic": aic.tolist()},
        )

    # np.argmin returns the first minimum, i.e. the smaller lag on ties
    p_hat = candidates[int(np.argmin(aic))]
    scan = AicScan(delta0=delta0, candidates=candidates, aic=aic, p_hat=p_hat)
    logger.info(f"AIC support selection: p_hat={p_hat}, s_hat={scan.s_hat} at delta0={delta0}")
    return scan


def _fit_baseline(
    stream: EventStream, delta: float, support: float, level: float
) -> BinSizeCandidate:
    bc = bin_counts(stream, delta)
    fit = hawkes_estimator(bc, support)
    half_width = [confidence_interval(fit, (i,), level)[1] for i in range(1, fit.d + 1)]
    logger.debug(f"Bin size {delta}: eta_hat={fit.eta_hat.tolist()} +- {half_width}")
    return BinSizeCandidate(
        delta=delta,
        p=fit.p,
        eta_hat=fit.eta_hat,
        half_width=half_width,
        dropped_tail=bc.dropped_tail,
    )


def _recommended_delta(candidates: List[BinSizeCandidate]) -> Optional[float]:
    """Largest delta from which every later successive pair moves less than both CIs."""
    stable = [
        bool(
            np.all(
                np.abs(a.eta_hat - b.eta_hat) < np.minimum(a.half_width, b.half_width)
            )
        )
        for a, b in zip(candidates, candidates[1:])
    ]
    recommended = None
    for index in range(len(stable) - 1, -1, -1):
        if not stable[index]:
            break
        recommended = candidates[index].delta
    return recommended


def _trend(candidates: List[BinSizeCandidate]) -> List[Trend]:
    etas = np.array([candidate.eta_hat for candidate in candidates])
    steps = np.diff(etas, axis=0)
    trends: List[Trend] = []
    for column in steps.T:
        if np.all(column == 0):
            trends.append("flat")
        elif np.all(column >= 0):
            trends.append("increasing")
        elif np.all(column <= 0):
            trends.append("decreasing")
        else:
            trends.append("mixed")
    return trends


def select_bin_size(
    stream: EventStream,
    support: float,
    deltas: Sequence[float],
    workers: Optional[int] = None,
    level: Optional[float] = None,
) -> BinSizeScan:
    """
    Baseline stabilization scan over a decreasing sequence of bin sizes.

    Every candidate rebins the raw stream. The recommendation is the largest delta
    from which all successive pairs of baseline estimates differ by less than the
    smaller of their two CI half-widths; None when no such delta exists.

    Args:
        stream: Raw event stream
        support: Fixed support s
        deltas: Strictly decreasing candidate widths
        workers: Parallel candidate fits (default WORKERS)
        level: Confidence level of the half-widths (default CI_LEVEL)

    Returns:
        Bin-size scan
    """
    deltas = [float(delta) for delta in deltas]
    if not deltas:
        raise InvalidParameterException(message="At least one bin size is required")
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise InvalidParameterException(
            message="Bin sizes must be strictly decreasing", details={"deltas": deltas}
        )
    workers = settings.WORKERS if workers is None else workers
    level = settings.CI_LEVEL if level is None else level

    candidates = Parallel(n_jobs=workers, prefer="threads")(
        delayed(_fit_baseline)(stream, delta, support, level) for delta in deltas
    )
    recommended = _recommended_delta(candidates)
    trend = _trend(candidates) if len(candidates) > 1 else ["flat"] * stream.d
    if recommended is None:
        logger.warning("No bin size satisfies the stabilization rule")
    else:
        logger.info(f"Bin size scan recommends delta={recommended}")
    return BinSizeScan(
        support=support,
        level=level,
        candidates=candidates,
        recommended_delta=recommended,
        trend=tuple(trend),
    )
