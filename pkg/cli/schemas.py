from datetime import datetime, timezone
from enum import Enum
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator

from network.schemas import LossKind, NetworkSpec
from optimizers.schemas import AuxState, Hyperparams

DEFAULT_HIDDEN_WIDTHS = [512] * 9

# =============================================================================
# ENUMERATIONS
# =============================================================================

class Method(str, Enum):
    SGD = "sgd"
    ADAM = "adam"
    GSADMM = "gsadmm"
    GSAM = "gsam"

    @property
    def is_split(self) -> bool:
        return self in (Method.GSADMM, Method.GSAM)

class DatasetName(str, Enum):
    MNIST = "mnist"
    FASHION = "fashion"
    KMNIST = "kmnist"
    BLOBS = "blobs"

class RunStatus(str, Enum):
    PENDING = "pending"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"

# =============================================================================
# RUN CONFIGURATION
# =============================================================================

class BlobsParams(BaseModel):
    """Synthetic Gaussian-cluster dataset"""
    classes: int = Field(4, ge=2)
    dim: int = Field(20, ge=1)
    per_class: int = Field(500, ge=1)
    separation: float = Field(4.0, gt=0)

class RunConfig(BaseModel):
    """One training run: method, architecture, data and hyperparameters"""
    method: Method = Field(Method.GSADMM, description="Training algorithm")
    splits: int = Field(1, ge=1, description="Number of subnetworks n")
    split_at: Optional[List[int]] = Field(None, description="Explicit layer boundaries; balanced by parameter count when omitted")
    widths: List[int] = Field(default_factory=lambda: list(DEFAULT_HIDDEN_WIDTHS), min_length=1, description="Hidden-layer widths")
    dataset: DatasetName = Field(DatasetName.BLOBS, description="Dataset name")
    blobs: BlobsParams = Field(default_factory=BlobsParams)
    data_root: Optional[str] = Field(None, description="IDX dataset root (SUBSPLIT_DATA wins when set)")
    epochs: int = Field(100, ge=1)
    seed: int = Field(0, ge=0)
    hyperparams: Hyperparams = Field(default_factory=Hyperparams)
    loss: LossKind = Field(LossKind.SOFTMAX_CROSS_ENTROPY)
    workers: Optional[int] = Field(None, ge=1, description="Phase worker count; defaults to min(n, cores)")
    test_fraction: float = Field(0.2, gt=0, lt=1, description="Held-out share when no test files exist")
    out: Optional[str] = Field(None, description="Metrics CSV path")

    @model_validator(mode="after")
    def _check_splits(self):
        if not self.method.is_split and self.splits != 1:
            raise ValueError(f"method {self.method.value} trains the unsplit network; splits must be 1")
        if self.split_at is not None and len(self.split_at) != self.splits - 1:
            raise ValueError(f"{self.splits} subnetworks need {self.splits - 1} split points, got {self.split_at}")
        if min(self.widths) < 1:
            raise ValueError("layer widths must be >= 1")
        return self

# =============================================================================
# METRICS
# =============================================================================

class MetricsRow(BaseModel):
    """One epoch of a training run"""
    epoch: int = Field(..., ge=1)
    wall_s: float = Field(..., ge=0)
    train_loss: float
    train_acc: float = Field(..., ge=0, le=1)
    test_acc: float = Field(..., ge=0, le=1)
    residual: float = Field(..., ge=0)
    objective: float
    phase_w_s: float = Field(0.0, ge=0)
    phase_p_s: float = Field(0.0, ge=0)
    phase_q_s: float = Field(0.0, ge=0)
    phase_u_s: float = Field(0.0, ge=0)

class TrainResult(BaseModel):
    """Final weights and auxiliary state plus the per-epoch metrics"""
    config: RunConfig
    rows: List[MetricsRow]
    net: NetworkSpec
    aux: Optional[AuxState] = None
    summary: Dict[str, float] = Field(default_factory=dict)

    class Config:
        arbitrary_types_allowed = True

    @property
    def weights(self) -> List[List[np.ndarray]]:
        return [[layer.weight for layer in sub.layers] for sub in self.net.subnetworks]

# =============================================================================
# BENCHMARK
# =============================================================================

class BenchConfig(BaseModel):
    """Configs zipped from comma lists over a shared base run; length-1 lists broadcast"""
    base: RunConfig = Field(default_factory=RunConfig)
    methods: List[Method] = Field(..., min_length=1)
    splits: List[int] = Field(..., min_length=1)
    workers: List[int] = Field(..., min_length=1)
    epochs: int = Field(20, ge=20, description="Timed epochs per config")
    warmup: int = Field(3, ge=0, description="Untimed epochs before measuring")
    out: Optional[str] = None

class BenchRow(BaseModel):
    label: str
    method: Method
    splits: int
    workers: int
    epochs: int
    mean_epoch_s: float
    std_epoch_s: float
    time_ratio: float = Field(..., description="mean epoch time over the first config's")
    digest: str = Field(..., description="Hash of the numeric metric columns")

# =============================================================================
# HTTP SURFACE
# =============================================================================

class RunRecord(BaseModel):
    run_id: str
    status: RunStatus = RunStatus.PENDING
    config: RunConfig
    rows: List[MetricsRow] = Field(default_factory=list)
    summary: Dict[str, float] = Field(default_factory=dict)
    error: Optional[str] = None
    error_code: Optional[str] = None
    created_at: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
    finished_at: Optional[datetime] = None

class RunSummary(BaseModel):
    run_id: str
    status: RunStatus
    method: Method
    splits: int
    epochs_done: int
    created_at: datetime

class VerifyRequest(BaseModel):
    checks: Optional[List[str]] = Field(None, description="Checks to run; all when omitted, none when empty")
    seed: int = Field(0, ge=0)
