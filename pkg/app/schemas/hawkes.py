"""
Hawkes and INAR model schemas.

Excitement functions are parametric families selected by the ``family`` field, or a
grid of values on an equidistant lattice. Every family can evaluate itself, integrate
itself from 0 in closed form and report its support and breakpoints, which is all the
simulator, the quadrature and the diagnostics need.
"""

import math
from typing import Annotated, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import Field, field_validator, model_validator

from app.schemas.base import FloatArray, HawkesBaseModel

_NONNEGATIVE_CHECK_POINTS = 1_000


class ExcitementBase(HawkesBaseModel):
    """Common interface of every excitement component h_{i,j}."""

    @property
    def support(self) -> float:
        """Declared support bound; math.inf when untruncated."""
        raise NotImplementedError

    @property
    def piecewise_constant(self) -> bool:
        return False

    @property
    def nonnegative(self) -> bool:
        return True

    @property
    def closed_form(self) -> bool:
        """Whether cumulative() is exact rather than numerical."""
        return True

    def breakpoints(self) -> np.ndarray:
        """Lags where the function may jump (always includes 0 and a finite support)."""
        if math.isfinite(self.support):
            return np.array([0.0, self.support])
        return np.array([0.0])

    def _evaluate_inside(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _cumulative_inside(self, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def evaluate(self, t) -> np.ndarray:
        """h(t) on (0, support], 0 elsewhere."""
        t = np.asarray(t, dtype=float)
        flat = np.atleast_1d(t)
        inside = (flat > 0) & (flat <= self.support)
        out = np.zeros_like(flat)
        if np.any(inside):
            out[inside] = self._evaluate_inside(flat[inside])
        return out.reshape(t.shape)

    def cumulative(self, x) -> np.ndarray:
        """Integral of h over (0, x]; constant beyond the support."""
        x = np.asarray(x, dtype=float)
        y = np.clip(x, 0.0, self.support)
        return self._cumulative_inside(y)

    def max_value(self, points: int) -> float:
        """Maximum of h on its support, taken on a grid of the given size."""
        grid = np.linspace(0.0, self.support, points + 1)[1:]
        return float(np.max(self.evaluate(grid), initial=0.0))


class ZeroExcitement(ExcitementBase):
    """h = 0."""

    family: Literal["zero"] = "zero"

    @property
    def support(self) -> float:
        return 0.0

    @property
    def piecewise_constant(self) -> bool:
        return True

    def breakpoints(self) -> np.ndarray:
        return np.array([0.0])

    def evaluate(self, t) -> np.ndarray:
        return np.zeros_like(np.asarray(t, dtype=float))

    def cumulative(self, x) -> np.ndarray:
        return np.zeros_like(np.asarray(x, dtype=float))

    def max_value(self, points: int) -> float:
        return 0.0


class ExpDecayExcitement(ExcitementBase):
    """h(t) = scale * exp(-rate * t), optionally truncated at ``cutoff``."""

    family: Literal["exp_decay"] = "exp_decay"
    scale: float = Field(..., ge=0)
    rate: float = Field(..., gt=0)
    cutoff: Optional[float] = Field(None, gt=0, description="Support bound; None = infinite")

    @property
    def support(self) -> float:
        return math.inf if self.cutoff is None else self.cutoff

    def _evaluate_inside(self, t: np.ndarray) -> np.ndarray:
        return self.scale * np.exp(-self.rate * t)

    def _cumulative_inside(self, y: np.ndarray) -> np.ndarray:
        return self.scale / self.rate * (1.0 - np.exp(-self.rate * y))

    def max_value(self, points: int) -> float:
        return self.scale


class PowerLawExcitement(ExcitementBase):
    """h(t) = scale * (offset + t) ** (-exponent), optionally truncated."""

    family: Literal["power_law"] = "power_law"
    scale: float = Field(..., ge=0)
    offset: float = Field(1.0, gt=0)
    exponent: float = Field(..., gt=0)
    cutoff: Optional[float] = Field(None, gt=0)

    @property
    def support(self) -> float:
        return math.inf if self.cutoff is None else self.cutoff

    def _evaluate_inside(self, t: np.ndarray) -> np.ndarray:
        return self.scale * (self.offset + t) ** (-self.exponent)

    def _cumulative_inside(self, y: np.ndarray) -> np.ndarray:
        if self.exponent == 1.0:
            return self.scale * np.log((self.offset + y) / self.offset)
        power = 1.0 - self.exponent
        return self.scale / power * ((self.offset + y) ** power - self.offset**power)

    def max_value(self, points: int) -> float:
        return self.scale * self.offset ** (-self.exponent)


class ConstantIntervalExcitement(ExcitementBase):
    """h(t) = value on (start, end], 0 elsewhere."""

    family: Literal["constant_interval"] = "constant_interval"
    value: float = Field(..., ge=0)
    start: float = Field(0.0, ge=0)
    end: float = Field(..., gt=0)

    @model_validator(mode="after")
    def check_interval(self) -> "ConstantIntervalExcitement":
        if not self.start < self.end:
            raise ValueError("start must be smaller than end")
        return self

    @property
    def support(self) -> float:
        return self.end

    @property
    def piecewise_constant(self) -> bool:
        return True

    def breakpoints(self) -> np.ndarray:
        return np.unique(np.array([0.0, self.start, self.end]))

    def _evaluate_inside(self, t: np.ndarray) -> np.ndarray:
        return np.where(t > self.start, self.value, 0.0)

    def _cumulative_inside(self, y: np.ndarray) -> np.ndarray:
        return self.value * np.clip(y - self.start, 0.0, self.end - self.start)

    def max_value(self, points: int) -> float:
        return self.value


class SineIntervalExcitement(ExcitementBase):
    """h(t) = scale * sin(frequency * t) on (start, end], 0 elsewhere."""

    family: Literal["sine_interval"] = "sine_interval"
    scale: float = Field(..., ge=0)
    frequency: float = Field(1.0, gt=0)
    start: float = Field(0.0, ge=0)
    end: float = Field(..., gt=0)

    @model_validator(mode="after")
    def check_interval(self) -> "SineIntervalExcitement":
        if not self.start < self.end:
            raise ValueError("start must be smaller than end")
        return self

    @property
    def support(self) -> float:
        return self.end

    def breakpoints(self) -> np.ndarray:
        return np.unique(np.array([0.0, self.start, self.end]))

    def _evaluate_inside(self, t: np.ndarray) -> np.ndarray:
        return np.where(t > self.start, self.scale * np.sin(self.frequency * t), 0.0)

    def _cumulative_inside(self, y: np.ndarray) -> np.ndarray:
        lower = np.clip(y, self.start, self.end)
        return self.scale / self.frequency * (
            np.cos(self.frequency * self.start) - np.cos(self.frequency * lower)
        )


class GridExcitement(ExcitementBase):
    """
    Values on the lattice k*step, k = 1..p, read left-constant.

    The value given at k*step holds on ((k-1)*step, k*step], which is how the pointwise
    estimator output is meant to be read.
    """

    family: Literal["grid"] = "grid"
    points: List[Tuple[float, float]] = Field(..., min_length=1, description="(t, value) pairs")

    @field_validator("points")
    @classmethod
    def check_lattice(cls, v: List[Tuple[float, float]]) -> List[Tuple[float, float]]:
        """Points must sit on k*step for k = 1, 2, ..."""
        step = v[0][0]
        if step <= 0:
            raise ValueError("grid must start at a positive lag")
        for k, (t, _) in enumerate(v, start=1):
            if not math.isclose(t, k * step, rel_tol=1e-9, abs_tol=1e-12):
                raise ValueError(f"grid point {t} is not at {k} * {step}")
        return v

    @property
    def step(self) -> float:
        return self.points[0][0]

    @property
    def values(self) -> np.ndarray:
        return np.array([value for _, value in self.points], dtype=float)

    @property
    def support(self) -> float:
        return len(self.points) * self.step

    @property
    def piecewise_constant(self) -> bool:
        return True

    @property
    def nonnegative(self) -> bool:
        return bool(np.all(self.values >= 0))

    def breakpoints(self) -> np.ndarray:
        return np.arange(len(self.points) + 1) * self.step

    def _evaluate_inside(self, t: np.ndarray) -> np.ndarray:
        index = np.clip(np.ceil(np.round(t / self.step, 9)).astype(int), 1, len(self.points))
        return self.values[index - 1]

    def _cumulative_inside(self, y: np.ndarray) -> np.ndarray:
        knots = self.breakpoints()
        areas = np.concatenate([[0.0], np.cumsum(self.values * self.step)])
        return np.interp(y, knots, areas)

    def max_value(self, points: int) -> float:
        return float(max(self.values.max(), 0.0))


Excitement = Annotated[
    Union[
        ZeroExcitement,
        ExpDecayExcitement,
        PowerLawExcitement,
        ConstantIntervalExcitement,
        SineIntervalExcitement,
        GridExcitement,
    ],
    Field(discriminator="family"),
]


class HawkesSpec(HawkesBaseModel):
    """Baseline vector eta and d x d excitement matrix H; excitement[i][j] is h_{i,j}."""

    eta: FloatArray = Field(..., description="Baseline intensities (events per second)")
    excitement: List[List[Excitement]] = Field(..., description="h_{i,j}: effect of j on i")

    @model_validator(mode="after")
    def check_model(self) -> "HawkesSpec":
        """Shape, baseline and non-negativity invariants."""
        d = self.eta.shape[0] if self.eta.ndim == 1 else -1
        if d < 1:
            raise ValueError("eta must be a non-empty vector")
        if np.any(self.eta < 0) or not np.any(self.eta > 0):
            raise ValueError("eta must be non-negative and not all zero")
        if len(self.excitement) != d or any(len(row) != d for row in self.excitement):
            raise ValueError(f"excitement must be a {d} x {d} matrix")
        for i, row in enumerate(self.excitement, start=1):
            for j, h in enumerate(row, start=1):
                support = h.support
                upper = support if math.isfinite(support) else 100.0
                grid = np.linspace(0.0, upper, _NONNEGATIVE_CHECK_POINTS + 1)[1:]
                if np.any(h.evaluate(grid) < -1e-12):
                    raise ValueError(f"h_{i},{j} is negative on its support")
        return self

    @property
    def d(self) -> int:
        return int(self.eta.shape[0])

    def component(self, i: int, j: int) -> ExcitementBase:
        """h_{i,j} with 0-based indices."""
        return self.excitement[i][j]

    @property
    def max_support(self) -> float:
        return max(h.support for row in self.excitement for h in row)


class BranchingMatrix(HawkesBaseModel):
    """K_{ij} = integral of h_{i,j} and its spectral radius."""

    matrix: FloatArray = Field(..., description="d x d branching matrix")
    spectral_radius: float = Field(..., ge=0)


class BranchingEstimate(HawkesBaseModel):
    """Branching-matrix estimate from a fit, with 95% half-widths per entry."""

    matrix: FloatArray
    half_width: FloatArray
    spectral_radius: float
    level: float = 0.95

    def formatted(self, digits: int = 2) -> List[List[str]]:
        """Entries rendered as 'value (±half_width)'."""
        return [
            [f"{value:.{digits}f} (±{width:.{digits}f})" for value, width in zip(row, widths)]
            for row, widths in zip(self.matrix, self.half_width)
        ]


class InarSpec(HawkesBaseModel):
    """Multivariate INAR(p): innovation vector a0 and p thinning matrices."""

    a0: FloatArray = Field(..., description="Innovation parameters")
    coefficients: List[FloatArray] = Field(..., min_length=1, description="A_1..A_p")

    @model_validator(mode="after")
    def check_parameters(self) -> "InarSpec":
        d = self.a0.shape[0]
        if np.any(self.a0 < 0) or not np.any(self.a0 > 0):
            raise ValueError("a0 must be non-negative and not all zero")
        for k, matrix in enumerate(self.coefficients, start=1):
            if matrix.shape != (d, d):
                raise ValueError(f"A_{k} must have shape ({d}, {d})")
            if np.any(matrix < 0):
                raise ValueError(f"A_{k} has negative entries")
        return self

    @property
    def d(self) -> int:
        return int(self.a0.shape[0])

    @property
    def p(self) -> int:
        return len(self.coefficients)

    @property
    def coefficient_sum(self) -> np.ndarray:
        return np.sum(np.stack(self.coefficients), axis=0)

    def stationary_mean(self) -> np.ndarray:
        """E X = (I - sum A_k)^{-1} a0."""
        return np.linalg.solve(np.eye(self.d) - self.coefficient_sum, self.a0)
