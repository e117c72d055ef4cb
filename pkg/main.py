"""
FastAPI application exposing training runs and the verification suite over HTTP.
"""

import logging
from contextlib import asynccontextmanager

from fastapi import FastAPI, Request
from fastapi.encoders import jsonable_encoder
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from core.config import settings
from core.exceptions import SubsplitException
from core.logger import configure_logging
from core.responses import error_response, success_response
from cli.routes import router as runs_router

logger = logging.getLogger(__name__)

# =============================================================================
# LIFESPAN EVENTS
# =============================================================================

@asynccontextmanager
async def lifespan(app: FastAPI):
    """Application lifespan events"""
    configure_logging()
    logger.info("Starting %s %s (%s)", settings.APP_NAME, settings.APP_VERSION, settings.ENVIRONMENT)
    yield
    logger.info("Shutting down %s", settings.APP_NAME)

# =============================================================================
# FASTAPI APP INSTANCE
# =============================================================================

app = FastAPI(
    title=settings.APP_NAME,
    version=settings.APP_VERSION,
    description="Model-parallel training of split networks with gsADMM and gsAM",
    lifespan=lifespan
)

# =============================================================================
# CORS MIDDLEWARE
# =============================================================================

app.add_middleware(
    CORSMiddleware,
    allow_origins=settings.CORS_ORIGINS,
    allow_credentials=settings.CORS_ALLOW_CREDENTIALS,
    allow_methods=settings.CORS_ALLOW_METHODS,
    allow_headers=settings.CORS_ALLOW_HEADERS,
)

# =============================================================================
# EXCEPTION HANDLERS
# =============================================================================

@app.exception_handler(SubsplitException)
async def subsplit_exception_handler(request: Request, exc: SubsplitException):
    """Handle library exceptions"""
    return JSONResponse(
        status_code=exc.status_code,
        content=jsonable_encoder(error_response(
            message=exc.message,
            errors=[exc.details] if exc.details else [],
            error_code=exc.error_code
        ))
    )

# =============================================================================
# INCLUDE ROUTERS
# =============================================================================

# Training runs and verification
app.include_router(runs_router)

# =============================================================================
# HEALTH CHECK
# =============================================================================

@app.get("/health", response_model=dict)
async def health_check():
    """Liveness probe"""
    return success_response(
        data={"status": "healthy", "version": settings.APP_VERSION},
        message=f"{settings.APP_NAME} is running"
    ).model_dump(mode="json")
