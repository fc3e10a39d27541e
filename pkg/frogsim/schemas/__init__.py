from frogsim.schemas.analytics import FirstVisitResponse, RhoResponse, SpectralEstimateResponse
from frogsim.schemas.certification import (
    BushCertifyRequest,
    NFeasibleResponse,
    SearchRecordResponse,
    StretchCertifyRequest,
)
from frogsim.schemas.config import ExperimentConfig
from frogsim.schemas.trees import TreeEdge, TreeSampleRequest, TreeSampleResponse

__all__ = [
    "FirstVisitResponse",
    "RhoResponse",
    "SpectralEstimateResponse",
    "BushCertifyRequest",
    "NFeasibleResponse",
    "SearchRecordResponse",
    "StretchCertifyRequest",
    "ExperimentConfig",
    "TreeEdge",
    "TreeSampleRequest",
    "TreeSampleResponse",
]
