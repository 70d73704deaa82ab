"""
Goodness-of-fit report schemas.
"""

from typing import List, Literal, Optional

from pydantic import Field

from app.schemas.base import FloatArray, HawkesBaseModel

IntegrationMethod = Literal["compensator", "piecewise", "quadrature"]


class ChunkedKs(HawkesBaseModel):
    """KS p-values of consecutive residual chunks."""

    chunk: int = Field(..., ge=1)
    p_values: FloatArray
    median_p_value: float
    rejected_fraction: float = Field(..., ge=0, le=1, description="Share of p-values below 0.05")


class ComponentDiagnostics(HawkesBaseModel):
    """Time-change residual tests of one component."""

    component: int = Field(..., ge=1, description="1-based component index")
    events_used: int = Field(..., ge=0, description="Events after burn-in")
    residuals: FloatArray = Field(..., description="Transformed interarrival times")
    ks_statistic: float
    ks_p_value: float
    ljung_box_statistic: Optional[float] = None
    ljung_box_p_value: Optional[float] = None
    qq: FloatArray = Field(..., description="(theoretical, empirical) Exp(1) quantile pairs")
    chunked: Optional[ChunkedKs] = None


class DiagnosticsReport(HawkesBaseModel):
    """Per-component time-change diagnostics of one fitted or true model."""

    method: IntegrationMethod
    burn_in: float = Field(..., ge=0)
    lags: int = Field(..., ge=1)
    components: List[ComponentDiagnostics]
