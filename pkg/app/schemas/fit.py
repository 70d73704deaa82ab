"""
Estimation schemas: design matrices, the raw CLS solution and the Hawkes fit.
"""

from dataclasses import dataclass
from typing import Any, List, Optional, Tuple, Union

import numpy as np
from pydantic import Field, field_serializer, model_validator
from scipy import sparse

from app.schemas.base import FloatArray, HawkesBaseModel


@dataclass(frozen=True)
class DesignMatrices:
    """
    Z is (dp+1) x (n-p) with columns (X_{k-1}, ..., X_{k-p}, 1); Y is d x (n-p).

    Z is a dense ndarray by default and a CSR matrix on the sparse path.
    """

    Z: Union[np.ndarray, sparse.csr_matrix]
    Y: np.ndarray
    d: int
    p: int
    n: int

    @property
    def is_sparse(self) -> bool:
        return sparse.issparse(self.Z)

    @property
    def columns(self) -> int:
        return self.n - self.p


@dataclass(frozen=True)
class ClsResult:
    """B_hat (d x (dp+1)), residuals U = Y - B_hat Z and the Gram inverse."""

    coefficients: np.ndarray
    residuals: np.ndarray
    gram_inverse: np.ndarray
    condition_number: float
    design: DesignMatrices


class HawkesFit(HawkesBaseModel):
    """
    Pointwise Hawkes estimate on the grid k*delta, k = 1..p.

    hhat[k-1][i, j] estimates h_{i,j}(k delta); eta_hat[i] estimates eta_i. s2 is the
    covariance estimate of vec([H_1, ..., H_p, eta]) with the column-major layout of
    the coefficient matrix.
    """

    delta: float = Field(..., gt=0, description="Bin width")
    support: float = Field(..., gt=0, description="Support parameter s")
    p: int = Field(..., ge=1, description="Maximal lag ceil(s / delta)")
    n: int = Field(..., ge=1, description="Number of bins")
    d: int = Field(..., ge=1, description="Number of components")
    hhat: FloatArray = Field(..., description="Excitement estimates, shape (p, d, d)")
    eta_hat: FloatArray = Field(..., description="Baseline estimates, shape (d,)")
    s2: Optional[FloatArray] = Field(None, description="Covariance estimate of vec(H)")
    condition_number: Optional[float] = Field(None, description="Condition of Z Z^T")
    dropped_tail: Tuple[int, ...] = Field(default=(), description="Tail events not binned")

    @model_validator(mode="before")
    @classmethod
    def unflatten_covariance(cls, data: Any) -> Any:
        """Accept s2 as the flattened row-major list the JSON form carries."""
        if isinstance(data, dict) and data.get("s2") is not None:
            s2 = np.asarray(data["s2"], dtype=float)
            if s2.ndim == 1:
                size = int(round(np.sqrt(s2.size)))
                if size * size != s2.size:
                    raise ValueError("flattened s2 is not square")
                data = {**data, "s2": s2.reshape(size, size)}
        return data

    @model_validator(mode="after")
    def check_shapes(self) -> "HawkesFit":
        """Dimensions must agree with d and p; s2 symmetric."""
        if self.hhat.shape != (self.p, self.d, self.d):
            raise ValueError(f"hhat must have shape ({self.p}, {self.d}, {self.d})")
        if self.eta_hat.shape != (self.d,):
            raise ValueError(f"eta_hat must have shape ({self.d},)")
        if self.s2 is not None:
            size = self.d * self.d * self.p + self.d
            if self.s2.shape != (size, size):
                raise ValueError(f"s2 must have shape ({size}, {size})")
            if not np.allclose(self.s2, self.s2.T, rtol=1e-10, atol=1e-12):
                raise ValueError("s2 must be symmetric")
        return self

    @field_serializer("s2")
    def flatten_covariance(self, s2: Optional[np.ndarray]) -> Optional[List[float]]:
        return None if s2 is None else s2.ravel().tolist()

    @property
    def grid(self) -> np.ndarray:
        """Lags k*delta, k = 1..p."""
        return np.arange(1, self.p + 1) * self.delta

    @property
    def integrated_excitement(self) -> np.ndarray:
        """sum_k delta * H_k, the pointwise estimate of the branching matrix."""
        return self.delta * self.hhat.sum(axis=0)

    @property
    def coefficient_matrix(self) -> np.ndarray:
        """[H_1, ..., H_p, eta] as a d x (dp+1) matrix."""
        return np.hstack([*self.hhat, self.eta_hat[:, None]])
