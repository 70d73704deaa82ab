"""
Tuning-parameter selection schemas.
"""

from typing import List, Literal, Optional, Tuple

import numpy as np
from pydantic import Field, model_validator

from app.schemas.base import FloatArray, HawkesBaseModel, IntArray

Trend = Literal["increasing", "decreasing", "flat", "mixed"]


class AicScan(HawkesBaseModel):
    """AIC curve over the lags 1..p_max at the preliminary bin size delta0."""

    delta0: float = Field(..., gt=0)
    candidates: IntArray = Field(..., description="Ascending lags p")
    aic: FloatArray = Field(..., description="AIC per candidate; inf marks a degenerate fit")
    p_hat: int = Field(..., ge=1)

    @model_validator(mode="after")
    def check_curve(self) -> "AicScan":
        if self.candidates.shape != self.aic.shape:
            raise ValueError("aic must have one value per candidate")
        if self.candidates.size > 1 and np.any(np.diff(self.candidates) <= 0):
            raise ValueError("candidates must be strictly ascending")
        if self.p_hat not in self.candidates:
            raise ValueError("p_hat must be one of the candidates")
        return self

    @property
    def s_hat(self) -> float:
        return self.p_hat * self.delta0

    @property
    def degenerate(self) -> List[int]:
        """Candidates whose residual covariance was degenerate or infeasible."""
        return [int(p) for p, value in zip(self.candidates, self.aic) if not np.isfinite(value)]


class BinSizeCandidate(HawkesBaseModel):
    """Baseline estimate with CI half-widths at one bin size."""

    delta: float = Field(..., gt=0)
    p: int = Field(..., ge=1)
    eta_hat: FloatArray
    half_width: FloatArray
    dropped_tail: Tuple[int, ...] = ()


class BinSizeScan(HawkesBaseModel):
    """Baseline estimates over a decreasing sequence of bin sizes."""

    support: float = Field(..., gt=0)
    level: float = Field(0.95, gt=0, lt=1)
    candidates: List[BinSizeCandidate]
    recommended_delta: Optional[float] = Field(
        None, description="Largest delta from which successive changes stay inside both CIs"
    )
    trend: Tuple[Trend, ...] = Field(
        default=(), description="Direction of eta_hat as delta shrinks"
    )

    @model_validator(mode="after")
    def check_order(self) -> "BinSizeScan":
        deltas = [candidate.delta for candidate in self.candidates]
        if any(b >= a for a, b in zip(deltas, deltas[1:])):
            raise ValueError("bin sizes must be strictly decreasing")
        return self

    @property
    def deltas(self) -> List[float]:
        return [candidate.delta for candidate in self.candidates]
