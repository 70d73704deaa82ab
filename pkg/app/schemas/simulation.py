"""
Simulation result schemas.
"""

from pydantic import Field

from app.schemas.base import FloatArray, HawkesBaseModel, IntArray


class Genealogy(HawkesBaseModel):
    """Aggregated branching record of one cluster simulation."""

    offspring_totals: IntArray = Field(
        ..., description="[i, j]: direct offspring in i of all generated j-events"
    )
    parent_totals: IntArray = Field(..., description="Generated events per component")
    immigrant_totals: IntArray = Field(..., description="Immigrants per component")
    generations: int = Field(..., ge=0)

    @property
    def offspring_means(self) -> FloatArray:
        """Empirical mean number of direct offspring in i per event in j."""
        parents = self.parent_totals.astype(float)
        with_parents = parents > 0
        means = self.offspring_totals.astype(float)
        means[:, with_parents] /= parents[with_parents]
        means[:, ~with_parents] = 0.0
        return means
