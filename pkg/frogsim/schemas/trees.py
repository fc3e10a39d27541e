from pydantic import BaseModel, Field, NonNegativeInt

from frogsim.distributions import FrogInit, OffspringDistribution
from frogsim.enums import VertexLabel


class TreeSampleRequest(BaseModel):
    offspring: OffspringDistribution
    frog_init: FrogInit = Field(default_factory=lambda: FrogInit.point(1))
    seed: NonNegativeInt = 0
    depth: int = Field(3, ge=1, le=20)


class TreeEdge(BaseModel):
    # Parent id is None for the root.
    parent: str | None
    child: str
    label: VertexLabel
    frog_count: int


class TreeSampleResponse(BaseModel):
    seed: int
    depth: int
    vertices: int
    edges: list[TreeEdge]
