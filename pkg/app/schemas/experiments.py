"""
Monte-Carlo study result schemas.
"""

from typing import List, Optional, Tuple

from pydantic import Field

from app.schemas.base import FloatArray, HawkesBaseModel


class TargetSummary(HawkesBaseModel):
    """Replication summary of one estimated quantity."""

    name: str
    truth: float
    mean_estimate: float
    empirical_variance: float
    mean_estimated_variance: float
    variance_ratio: float = Field(..., description="mean estimated / empirical variance")
    coverage: float = Field(..., ge=0, le=1)


class CoverageStudy(HawkesBaseModel):
    replications: int
    horizon: float
    delta: float
    support: float
    level: float
    mean_events: Tuple[float, ...] = Field(..., description="Mean events per component")
    targets: List[TargetSummary]


class ScalingPoint(HawkesBaseModel):
    """Estimated variances at one value of the swept parameter."""

    value: float
    excitement_variance: float
    baseline_variance: float


class ScalingSweep(HawkesBaseModel):
    parameter: str = Field(..., description="delta, horizon or support")
    points: List[ScalingPoint]
    excitement_slope: Optional[float] = Field(None, description="log-log slope")
    baseline_slope: Optional[float] = None


class VarianceScalingStudy(HawkesBaseModel):
    horizon: float
    events: int
    lag: float = Field(..., description="Lag t of the excitement entry h(t)")
    sweeps: List[ScalingSweep]


class BiasPoint(HawkesBaseModel):
    delta: float
    truth: float
    mean_estimate: float
    bias: float
    standard_error: float = Field(..., description="Standard deviation of the estimate")
    mean_error: float = Field(..., description="Monte-Carlo error of mean_estimate")

    @property
    def bias_in_standard_errors(self) -> float:
        return abs(self.bias) / self.standard_error if self.standard_error > 0 else float("inf")


class BiasStudy(HawkesBaseModel):
    replications: int
    horizon: float
    support: float
    points: List[BiasPoint]


class SupportPoint(HawkesBaseModel):
    """Selected support of one model at one preliminary bin size."""

    label: str
    delta0: float
    s_hat: float
    true_support: Optional[float] = None
    ignored_mass: Optional[float] = Field(None, description="Excitement mass beyond s_hat")
    replicated_s_hat: Tuple[float, ...] = Field(
        (), description="Per replication; s_hat is their median"
    )


class SupportStudy(HawkesBaseModel):
    horizon: float
    tail_horizon: float
    replications: int
    s_max: float
    points: List[SupportPoint]


class TruncationStudy(HawkesBaseModel):
    """
    AIC support under the full and the truncated bivariate model.

    The means run over replications; the AIC curves belong to the first one.
    """

    horizon: float
    delta0: float
    s_max: float
    replications: int
    s_hat_full: Tuple[float, ...]
    s_hat_truncated: Tuple[float, ...]
    aic_full: FloatArray
    aic_truncated: FloatArray

    @property
    def mean_s_hat_full(self) -> float:
        return sum(self.s_hat_full) / len(self.s_hat_full)

    @property
    def mean_s_hat_truncated(self) -> float:
        return sum(self.s_hat_truncated) / len(self.s_hat_truncated)


class DiagnosticsStudy(HawkesBaseModel):
    replications: int
    horizon: float
    true_model_rejection: Tuple[float, ...] = Field(..., description="Per component, KS at 5%")
    wrong_model_rejection: Tuple[float, ...]
    mean_residuals: Tuple[int, ...]


class InarIdentityStudy(HawkesBaseModel):
    n: int
    expected_mean: float
    sample_mean: float
    mean_standard_error: float
    expected_residual_variance: float
    residual_variance: float
    variance_standard_error: float
    residual_autocorrelation: FloatArray = Field(..., description="Lags 1..5")
    autocorrelation_bound: float
