from pydantic import BaseModel, Field, PositiveInt

from frogsim.distributions import OffspringDistribution


class NFeasibleResponse(BaseModel):
    d_min: int
    n: int
    feasible: bool
    mu_ceiling: float


class StretchCertifyRequest(BaseModel):
    p1: float = Field(gt=0.0, lt=1.0)
    d_min: int = Field(ge=2)
    n_cap: PositiveInt | None = None
    epsilon: float | None = Field(None, gt=0.0, lt=1.0)
    k_max: PositiveInt | None = None


class BushCertifyRequest(BaseModel):
    offspring: OffspringDistribution
    n_cap: PositiveInt | None = None
    epsilon: float | None = Field(None, gt=0.0, lt=1.0)
    k_max: PositiveInt | None = None


class SearchRecordResponse(BaseModel):
    p1: float
    p0: float
    c_d: int | None
    N: int | None = None
    eta_bar: float | None = None
    mu_bar: float | None = None
    c1: bool = False
    c2: bool = False
    c3: bool = False
    c4: bool = False
    c5: bool = False
    feasible: bool
    bush_factor: float = 1.0
    p_stretch: float | None = None
    type2_multiple_ok: bool | None = None
    reduced_mixed_ok: bool | None = None

    model_config = {"from_attributes": True}
