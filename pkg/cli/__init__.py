# CLI Package
# Training, verification and benchmark entry points, metrics files and the runs API

from .schemas import (
    Method,
    DatasetName,
    RunStatus,
    BlobsParams,
    RunConfig,
    MetricsRow,
    TrainResult,
    BenchConfig,
    BenchRow,
    RunRecord,
    RunSummary,
    VerifyRequest,
)

from .metrics import MetricsLogger, read_metrics, numeric_digest
from .services import TrainingService, VerifyService, BenchService, RunRegistry
from .routes import router as runs_router

__all__ = [
    # Schemas
    "Method",
    "DatasetName",
    "RunStatus",
    "BlobsParams",
    "RunConfig",
    "MetricsRow",
    "TrainResult",
    "BenchConfig",
    "BenchRow",
    "RunRecord",
    "RunSummary",
    "VerifyRequest",

    # Metrics
    "MetricsLogger",
    "read_metrics",
    "numeric_digest",

    # Services
    "TrainingService",
    "VerifyService",
    "BenchService",
    "RunRegistry",

    # Routes
    "runs_router",
]
