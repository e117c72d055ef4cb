from enum import Enum
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator

from network.schemas import LayerGrad, LossKind
from tensor.schemas import RngState

# =============================================================================
# ENUMERATIONS
# =============================================================================

class InnerOptimizer(str, Enum):
    SGD = "sgd"
    ADAM = "adam"

class Sampling(str, Enum):
    SINGLE = "single"    # one batch per epoch
    SHUFFLE = "shuffle"  # every sample once per epoch, one iteration per batch

class AuxMode(str, Enum):
    GSADMM = "gsadmm"
    GSAM = "gsam"

# =============================================================================
# HYPERPARAMETERS
# =============================================================================

class Hyperparams(BaseModel):
    """TSSM hyperparameters; defaults follow the feed-forward experiments"""
    alpha: float = Field(1.0, gt=0, description="Penalty weight α")
    rho: float = Field(1.0, gt=0, description="Augmented-Lagrangian weight ρ")
    tau1: float = Field(100.0, gt=0, description="Inverse learning rate of the W step")
    tau2: float = Field(100.0, gt=0, description="Inverse learning rate of the p step")
    batch_size: int = Field(120, ge=1, description="Sample-set size b")
    inner_opt: InnerOptimizer = Field(InnerOptimizer.SGD, description="Optimizer for the W step")
    adam_beta1: float = Field(0.9, ge=0, lt=1)
    adam_beta2: float = Field(0.999, ge=0, lt=1)
    adam_eps: float = Field(1e-8, gt=0)
    sampling: Sampling = Field(Sampling.SINGLE, description="Batches drawn per epoch")

    class Config:
        frozen = True

    @property
    def w_lr(self) -> float:
        return 1.0 / self.tau1

    @property
    def p_lr(self) -> float:
        return 1.0 / self.tau2

# =============================================================================
# OPTIMIZER STATE
# =============================================================================

class AdamMoments(BaseModel):
    """First/second moment estimates for one subnetwork"""
    step: int = 0
    first: List[LayerGrad]
    second: List[LayerGrad]

    class Config:
        frozen = True

class AuxState(BaseModel):
    """Per-sample auxiliary variables over the full training set.

    ``p[0]`` is the training input and never changes. ``q`` and ``u`` hold one
    entry per subnetwork boundary in gsADMM mode and are empty in gsAM mode.
    """
    mode: AuxMode
    p: List[np.ndarray]
    q: List[np.ndarray] = Field(default_factory=list)
    u: List[np.ndarray] = Field(default_factory=list)

    class Config:
        arbitrary_types_allowed = True

    @model_validator(mode="after")
    def _check_lists(self):
        boundaries = len(self.p) - 1
        if self.mode is AuxMode.GSADMM:
            if len(self.q) != boundaries or len(self.u) != boundaries:
                raise ValueError(f"gsADMM state needs {boundaries} q and u blocks")
        elif self.q or self.u:
            raise ValueError("gsAM state carries no q or u")
        rows = {block.shape[0] for block in self.p + self.q + self.u}
        if len(rows) > 1:
            raise ValueError(f"auxiliary blocks disagree on the sample count: {sorted(rows)}")
        return self

    @property
    def samples(self) -> int:
        return int(self.p[0].shape[0])

    @property
    def n(self) -> int:
        return len(self.p)

class TrainState(BaseModel):
    """Epoch counter k, Adam moments per subnetwork and the batch-sampling stream"""
    k: int = Field(0, ge=0)
    rng: RngState
    moments: List[Optional[AdamMoments]] = Field(default_factory=list)

    class Config:
        arbitrary_types_allowed = True

    @classmethod
    def start(cls, seed: int, subnetworks: int) -> "TrainState":
        return cls(k=0, rng=RngState(seed), moments=[None] * subnetworks)

# =============================================================================
# UPDATE ROLES
# =============================================================================

class HiddenRole(BaseModel):
    """W step on Ω(W_l, P_s, T_s) with penalty weight α over b rows"""
    alpha: float
    batch_rows: int

class LastRole(BaseModel):
    """W step on R(W_n, P_s; y_s)"""
    loss: LossKind
