from dataclasses import asdict

from fastapi import APIRouter, Query

from frogsim.rw_analytics import (
    RuinChainSpec,
    first_visit_gf_closed,
    first_visit_gf_exact,
    rho_homogeneous,
    rho_subdivision,
    ruin_interior_kernel,
    spectral_radius_finite,
)
from frogsim.schemas.analytics import FirstVisitResponse, RhoResponse, SpectralEstimateResponse

router = APIRouter(prefix="/analytics", tags=["analytics"])


@router.get("/rho-homogeneous", response_model=RhoResponse)
def get_rho_homogeneous(d: int = Query(..., description="Children per vertex; the tree is T_{d+1}")):
    return RhoResponse(rho=rho_homogeneous(d))


@router.get("/rho-subdivision", response_model=RhoResponse)
def get_rho_subdivision(
    rho: float = Query(..., description="Spectral radius of the original tree"),
    n: int = Query(..., description="Edges per subdivided edge"),
):
    return RhoResponse(rho=rho_subdivision(rho, n))


@router.get("/first-visit", response_model=FirstVisitResponse)
def get_first_visit(
    n: int = Query(..., ge=2),
    z: float = Query(..., ge=0.0),
    x: int = Query(...),
    y: int = Query(...),
):
    """F_N(x, y | z). The sine formula covers starts next to an end; other starts and z < 1
    go through the linear solve."""
    if z >= 1.0 and x in (1, n - 1) and y in (0, n):
        value = first_visit_gf_closed(RuinChainSpec(n=n, z=z), x, y)
        method = "closed"
    else:
        value = first_visit_gf_exact(n, x, y, z)
        method = "exact"
    return FirstVisitResponse(n=n, z=z, x=x, y=y, value=value, method=method)


@router.get("/ruin-spectral", response_model=SpectralEstimateResponse)
def get_ruin_spectral(n: int = Query(..., ge=2, le=2000)):
    """Power-iteration spectral radius of the ruin chain's interior, cos(pi/N) in theory."""
    estimate = spectral_radius_finite(ruin_interior_kernel(n), subset=f"ruin interior N={n}")
    return SpectralEstimateResponse(**asdict(estimate))
