"""Certification endpoints.

Handlers are plain functions: a certificate search is CPU-bound, and FastAPI runs sync
handlers in its threadpool instead of on the event loop.
"""

import logging

from fastapi import APIRouter, Query

from frogsim.schemas.certification import (
    BushCertifyRequest,
    NFeasibleResponse,
    SearchRecordResponse,
    StretchCertifyRequest,
)
from frogsim.transience_search import (
    SearchRecord,
    certify_bush_case,
    certify_stretch_case,
    check_N_feasible,
    mu_ceiling,
)

logger = logging.getLogger(__name__)

router = APIRouter(prefix="/certification", tags=["certification"])


@router.get("/n-feasible", response_model=NFeasibleResponse)
def get_n_feasible(d_min: int = Query(..., ge=2), n: int = Query(..., ge=1)):
    return NFeasibleResponse(
        d_min=d_min, n=n, feasible=check_N_feasible(d_min, n), mu_ceiling=mu_ceiling(d_min, n),
    )


@router.post("/stretch", response_model=SearchRecordResponse)
def certify_stretch(body: StretchCertifyRequest):
    record = certify_stretch_case(
        body.p1, body.d_min, n_cap=body.n_cap, epsilon=body.epsilon, k_max=body.k_max,
    )
    if record is None:
        logger.info("No certificate for p1=%.4f d_min=%d", body.p1, body.d_min)
        record = SearchRecord(p1=body.p1, p0=0.0, c_d=None)
    return SearchRecordResponse.model_validate(record)


@router.post("/bush", response_model=SearchRecordResponse)
def certify_bush(body: BushCertifyRequest):
    dist = body.offspring
    record = certify_bush_case(dist, n_cap=body.n_cap, epsilon=body.epsilon, k_max=body.k_max)
    if record is None:
        record = SearchRecord(p1=dist.p(1), p0=dist.p(0), c_d=None)
    return SearchRecordResponse.model_validate(record)
