"""
Smoothed excitement schemas.

A smoothed estimate is a d x d matrix of evaluable functions on [0, s]. The box
moving-average of grid values is piecewise constant, so it integrates exactly; custom
smoothers are plain callables and integrate numerically.
"""

from typing import Callable, List, Literal, Optional

import numpy as np
from pydantic import Field
from scipy import integrate

from app.schemas.base import FloatArray, HawkesBaseModel
from app.schemas.hawkes import ExcitementBase


class BoxSmoothedFunction(ExcitementBase):
    """
    Box moving-average of grid values v_k at k*delta with window tau.

    h(t) is the mean of the v_k with k*delta in [t - tau/2, t + tau/2] for t in [0, end],
    0 when that window holds no grid point, and 0 outside [0, end].
    """

    family: Literal["box"] = "box"
    delta: float = Field(..., gt=0)
    tau: float = Field(..., gt=0)
    values: FloatArray = Field(..., description="Grid values at k*delta, k = 1..p")
    end: float = Field(..., gt=0, description="Right end of the fitted support")

    @property
    def support(self) -> float:
        return self.end

    @property
    def piecewise_constant(self) -> bool:
        return True

    @property
    def nonnegative(self) -> bool:
        return bool(np.all(self.values >= 0))

    def _window(self, t: np.ndarray):
        p = self.values.size
        lower = np.ceil(np.round((t - 0.5 * self.tau) / self.delta, 9)).astype(int)
        upper = np.floor(np.round((t + 0.5 * self.tau) / self.delta, 9)).astype(int)
        return np.maximum(lower, 1), np.minimum(upper, p)

    def _inside(self, t: np.ndarray) -> np.ndarray:
        return (t >= 0) & (t <= self.end)

    def evaluate(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        flat = np.atleast_1d(t)
        lower, upper = self._window(flat)
        count = upper - lower + 1
        sums = np.concatenate([[0.0], np.cumsum(self.values)])
        filled = self._inside(flat) & (count > 0)
        out = np.zeros_like(flat)
        out[filled] = (sums[upper[filled]] - sums[lower[filled] - 1]) / count[filled]
        return out.reshape(t.shape)

    def empty_mask(self, t) -> np.ndarray:
        """True where t lies in [0, end] but its window holds no grid point."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        lower, upper = self._window(t)
        return self._inside(t) & (upper < lower)

    def breakpoints(self) -> np.ndarray:
        k = np.arange(1, self.values.size + 1) * self.delta
        knots = np.concatenate([[0.0, self.end], k - 0.5 * self.tau, k + 0.5 * self.tau])
        return np.unique(knots[(knots >= 0) & (knots <= self.end)])

    def _segments(self):
        knots = self.breakpoints()
        return knots, self.evaluate(0.5 * (knots[:-1] + knots[1:]))

    def cumulative(self, x) -> np.ndarray:
        knots, levels = self._segments()
        areas = np.concatenate([[0.0], np.cumsum(levels * np.diff(knots))])
        return np.interp(np.clip(np.asarray(x, dtype=float), 0.0, self.end), knots, areas)

    def max_value(self, points: int) -> float:
        _, levels = self._segments()
        return float(np.max(levels, initial=0.0))


class CallableExcitement(ExcitementBase):
    """Excitement given by an arbitrary vectorized callable on [0, end]."""

    family: Literal["custom"] = "custom"
    function: Callable[[np.ndarray], np.ndarray]
    end: float = Field(..., gt=0)

    @property
    def support(self) -> float:
        return self.end

    @property
    def nonnegative(self) -> bool:
        return False

    @property
    def closed_form(self) -> bool:
        return False

    def evaluate(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        flat = np.atleast_1d(t)
        inside = (flat >= 0) & (flat <= self.end)
        out = np.zeros_like(flat)
        if np.any(inside):
            out[inside] = np.asarray(self.function(flat[inside]), dtype=float)
        return out.reshape(t.shape)

    def cumulative(self, x) -> np.ndarray:
        x = np.clip(np.asarray(x, dtype=float), 0.0, self.end)
        integrals = [
            integrate.quad(self._scalar, 0.0, bound, limit=200)[0] if bound > 0 else 0.0
            for bound in np.atleast_1d(x)
        ]
        return np.array(integrals).reshape(x.shape)

    def _scalar(self, u: float) -> float:
        return float(self.evaluate(u))


class SmoothedExcitement(HawkesBaseModel):
    """d x d smoothed excitement estimate; components[i][j] is h_hat_{i,j}."""

    method: str = Field(..., description="Smoother identifier")
    tau: Optional[float] = Field(None, gt=0, description="Window of the box smoother")
    delta: float = Field(..., gt=0)
    support: float = Field(..., gt=0)
    components: List[List[ExcitementBase]]

    @property
    def d(self) -> int:
        return len(self.components)

    def component(self, i: int, j: int) -> ExcitementBase:
        """h_hat_{i,j}, 0-based."""
        return self.components[i][j]

    @property
    def max_support(self) -> float:
        return max((h.support for row in self.components for h in row), default=0.0)
