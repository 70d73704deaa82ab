"""
Smoothing service layer.

Turns the pointwise grid estimates of a fit into evaluable functions: the box
moving-average, or any caller-supplied smoother mapping grid values to a function.
"""

import logging
from typing import Callable, Optional, Sequence

import numpy as np
import pandas as pd

from app.core.exceptions import InvalidParameterException
from app.schemas.fit import HawkesFit
from app.schemas.smoothing import BoxSmoothedFunction, CallableExcitement, SmoothedExcitement

logger = logging.getLogger(__name__)

Smoother = Callable[[np.ndarray, np.ndarray], Callable[[np.ndarray], np.ndarray]]


def box_smooth(fit: HawkesFit, tau: float) -> SmoothedExcitement:
    """
    Box moving-average of every h_hat_{i,j} with window tau.

    Args:
        fit: Hawkes fit
        tau: Window width; tau >= delta keeps every window over [delta/2, s] non-empty

    Returns:
        Smoothed excitement on [0, s]

    Raises:
        InvalidParameterException: If tau <= 0
    """
    if not tau > 0:
        raise InvalidParameterException(message="tau must be positive", details={"tau": tau})
    if tau < fit.delta:
        logger.warning(f"tau={tau} below delta={fit.delta}; some windows are empty and read 0")

    components = [
        [
            BoxSmoothedFunction(
                delta=fit.delta, tau=tau, values=fit.hhat[:, i, j], end=fit.support
            )
            for j in range(fit.d)
        ]
        for i in range(fit.d)
    ]
    return SmoothedExcitement(
        method="box", tau=tau, delta=fit.delta, support=fit.support, components=components
    )


def smooth(fit: HawkesFit, smoother: Smoother, method: str = "custom") -> SmoothedExcitement:
    """
    Apply a custom smoother to every component.

    The smoother receives the grid k*delta and the values h_hat_{i,j}(k delta) and
    returns a vectorized function of the lag.
    """
    grid = fit.grid
    components = [
        [
            CallableExcitement(function=smoother(grid, fit.hhat[:, i, j]), end=fit.support)
            for j in range(fit.d)
        ]
        for i in range(fit.d)
    ]
    return SmoothedExcitement(
        method=method, delta=fit.delta, support=fit.support, components=components
    )


def integrate_pointwise(fit: HawkesFit, i: int, j: int) -> float:
    """sum_k delta * (H_k)_{ij}, 1-based indices."""
    if not (1 <= i <= fit.d and 1 <= j <= fit.d):
        raise InvalidParameterException(
            message="Component index out of range", details={"i": i, "j": j, "d": fit.d}
        )
    return float(fit.integrated_excitement[i - 1, j - 1])


def smoothed_rows(
    smoothed: SmoothedExcitement, grid: Optional[Sequence[float]] = None
) -> pd.DataFrame:
    """
    Plot table of (t, i, j, value, empty_window) rows on an evaluation grid.

    Default grid: 0 to s in steps of delta / 2.
    """
    if grid is None:
        grid = np.arange(0.0, smoothed.support + 0.25 * smoothed.delta, 0.5 * smoothed.delta)
    grid = np.asarray(grid, dtype=float)
    frames = []
    for i in range(smoothed.d):
        for j in range(smoothed.d):
            h = smoothed.component(i, j)
            empty = h.empty_mask(grid) if isinstance(h, BoxSmoothedFunction) else False
            frames.append(
                pd.DataFrame(
                    {
                        "t": grid,
                        "i": i + 1,
                        "j": j + 1,
                        "value": h.evaluate(grid),
                        "empty_window": empty,
                    }
                )
            )
    return pd.concat(frames, ignore_index=True)
