"""
Resolved configuration of one command-line run.
"""

from typing import Dict, List, Optional

from pydantic import Field, model_validator

from app.schemas.base import HawkesBaseModel


class RunConfig(HawkesBaseModel):
    """
    Everything a run depends on, echoed into the output manifest.

    Flags that only make sense together are checked here, before any computation.
    """

    command: str
    inputs: Dict[str, str] = Field(default_factory=dict, description="Role -> input path")
    output_dir: str
    delta: Optional[float] = Field(None, gt=0)
    support: Optional[float] = Field(None, gt=0)
    horizon: Optional[float] = Field(None, gt=0)
    burn_in: Optional[float] = Field(None, ge=0)
    seed: Optional[int] = Field(None, ge=0)
    algorithm: Optional[str] = None
    deltas: Optional[List[float]] = None
    delta0: Optional[float] = Field(None, gt=0)
    s_max: Optional[float] = Field(None, gt=0)
    tau: Optional[float] = Field(None, gt=0)
    level: Optional[float] = Field(None, gt=0, lt=1)
    lags: Optional[int] = Field(None, ge=1)
    chunk: Optional[int] = Field(None, ge=1)
    dimension: Optional[int] = Field(None, ge=1)
    sparse: bool = False
    emit_smoothed: bool = False
    dedupe: bool = False
    study: Optional[str] = None
    replications: Optional[int] = Field(None, ge=1)
    workers: int = Field(1, ge=1)

    @model_validator(mode="after")
    def check_flags(self) -> "RunConfig":
        if self.emit_smoothed and self.tau is None:
            raise ValueError("--emit-smoothed requires --tau")
        if self.deltas is not None:
            if not self.deltas:
                raise ValueError("candidate bin sizes must not be empty")
            if any(b >= a for a, b in zip(self.deltas, self.deltas[1:])):
                raise ValueError("candidate bin sizes must be strictly decreasing")
            if any(delta <= 0 for delta in self.deltas):
                raise ValueError("candidate bin sizes must be positive")
        return self
