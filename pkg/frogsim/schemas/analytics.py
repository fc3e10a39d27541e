from pydantic import BaseModel


class RhoResponse(BaseModel):
    rho: float


class FirstVisitResponse(BaseModel):
    n: int
    z: float
    x: int
    y: int
    value: float
    # Which evaluation produced `value`: the sine formula or the linear solve.
    method: str


class SpectralEstimateResponse(BaseModel):
    value: float
    subset: str
    iterations: int
    residual: float
    size: int
