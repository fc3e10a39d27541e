import logging

from fastapi import FastAPI, Request, status
from fastapi.responses import JSONResponse

from frogsim import __version__
from frogsim.errors import DomainError, FrogsimError
from frogsim.routes import analytics, certification, trees

logger = logging.getLogger(__name__)

app = FastAPI(title="frogsim", version=__version__)


# --- Error mapping -----------------------------------------------------------
async def _domain_error_handler(request: Request, exc: DomainError):
    return JSONResponse(status_code=422, content={"detail": str(exc)})


async def _frogsim_error_handler(request: Request, exc: FrogsimError):
    logger.error("%s %s failed: %s", request.method, request.url.path, exc)
    return JSONResponse(status_code=status.HTTP_500_INTERNAL_SERVER_ERROR, content={"detail": str(exc)})


# Starlette picks the handler of the closest class in the MRO, so DomainError wins over its base.
app.add_exception_handler(DomainError, _domain_error_handler)
app.add_exception_handler(FrogsimError, _frogsim_error_handler)


# --- Health check ------------------------------------------------------------
@app.get("/health")
async def health_check():
    return {"status": "ok", "version": __version__}


app.include_router(analytics.router)
app.include_router(certification.router)
app.include_router(trees.router)
