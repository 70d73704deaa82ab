"""
Event-stream schemas.

EventStream holds per-component timestamps on a half-open window (t_start, t_end];
BinCountSequence holds the per-bin count vectors consumed by the estimator.
"""

from typing import Tuple

import numpy as np
from pydantic import Field, model_validator

from app.schemas.base import FloatArray, HawkesBaseModel, IntArray


class EventStream(HawkesBaseModel):
    """Sorted event timestamps per component on an observation window."""

    times: Tuple[FloatArray, ...] = Field(..., description="Per-component timestamps (seconds)")
    t_start: float = Field(0.0, description="Left (open) end of the window")
    t_end: float = Field(..., description="Right (closed) end of the window")

    @model_validator(mode="after")
    def check_window(self) -> "EventStream":
        """Validate window, ordering and window membership of all timestamps."""
        if len(self.times) < 1:
            raise ValueError("an event stream needs at least one component")
        if not self.t_start < self.t_end:
            raise ValueError(f"window ({self.t_start}, {self.t_end}] is empty")
        for index, component in enumerate(self.times, start=1):
            if component.ndim != 1:
                raise ValueError(f"component {index} must be one-dimensional")
            if component.size == 0:
                continue
            if np.any(np.diff(component) < 0):
                raise ValueError(f"component {index} timestamps are not sorted")
            if component[0] <= self.t_start or component[-1] > self.t_end:
                raise ValueError(
                    f"component {index} has timestamps outside ({self.t_start}, {self.t_end}]"
                )
        return self

    @property
    def d(self) -> int:
        """Number of components."""
        return len(self.times)

    @property
    def length(self) -> float:
        """Window length T."""
        return self.t_end - self.t_start

    @property
    def counts(self) -> Tuple[int, ...]:
        """Number of events per component."""
        return tuple(int(component.size) for component in self.times)

    def restrict(self, t_start: float) -> "EventStream":
        """Sub-stream on (t_start, t_end]; used to cut a burn-in prefix."""
        if not self.t_start <= t_start < self.t_end:
            raise ValueError(f"cut point {t_start} outside the window")
        kept = tuple(component[component > t_start] for component in self.times)
        return EventStream(times=kept, t_start=t_start, t_end=self.t_end)

    def prefix(self, t_end: float) -> "EventStream":
        """Sub-stream on (t_start, t_end]."""
        if not self.t_start < t_end <= self.t_end:
            raise ValueError(f"end point {t_end} outside the window")
        kept = tuple(component[component <= t_end] for component in self.times)
        return EventStream(times=kept, t_start=self.t_start, t_end=t_end)


class DedupeResult(HawkesBaseModel):
    """Deduplicated stream plus the number of removed timestamps per component."""

    stream: EventStream
    removed: Tuple[int, ...]


class BinCountSequence(HawkesBaseModel):
    """Count vectors per bin of width delta; counts has shape (n, d)."""

    delta: float = Field(..., gt=0, description="Bin width (seconds)")
    counts: IntArray = Field(..., description="Count vectors, shape (n, d)")
    t_start: float = Field(0.0, description="Left end the bins are anchored at")
    dropped_tail: Tuple[int, ...] = Field(
        default=(), description="Events per component in the leftover tail (n*delta, T]"
    )

    @model_validator(mode="after")
    def check_counts(self) -> "BinCountSequence":
        """Counts must be a non-negative (n, d) integer matrix."""
        if self.counts.ndim != 2:
            raise ValueError("counts must have shape (n, d)")
        if self.counts.size and self.counts.min() < 0:
            raise ValueError("counts must be non-negative")
        return self

    @property
    def n(self) -> int:
        """Number of bins."""
        return int(self.counts.shape[0])

    @property
    def d(self) -> int:
        """Number of components."""
        return int(self.counts.shape[1])

    @property
    def totals(self) -> np.ndarray:
        """Events per component over all bins."""
        return self.counts.sum(axis=0)
