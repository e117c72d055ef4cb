from enum import Enum
from typing import List

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

# =============================================================================
# ENUMERATIONS
# =============================================================================

class Activation(str, Enum):
    RELU = "relu"
    IDENTITY = "identity"

class LossKind(str, Enum):
    SOFTMAX_CROSS_ENTROPY = "cross_entropy"
    LEAST_SQUARES = "least_squares"

# =============================================================================
# MODEL SCHEMAS
# =============================================================================

class DenseLayer(BaseModel):
    """Affine map followed by an elementwise activation: act(x·Wᵀ + bias)"""
    weight: np.ndarray = Field(..., description="Weights, shape d_out×d_in")
    bias: np.ndarray = Field(..., description="Bias, shape d_out")
    activation: Activation = Field(Activation.RELU, description="Elementwise activation")

    class Config:
        arbitrary_types_allowed = True
        frozen = True

    @field_validator("weight", "bias", mode="before")
    @classmethod
    def _to_float64(cls, value):
        return np.array(value, dtype=np.float64)

    @model_validator(mode="after")
    def _check_shapes(self):
        if self.weight.ndim != 2 or min(self.weight.shape) < 1:
            raise ValueError(f"weight must be a non-empty matrix, got shape {self.weight.shape}")
        if self.bias.shape != (self.weight.shape[0],):
            raise ValueError(f"bias shape {self.bias.shape} does not match d_out={self.weight.shape[0]}")
        if not (np.all(np.isfinite(self.weight)) and np.all(np.isfinite(self.bias))):
            raise ValueError("layer parameters must be finite")
        return self

    @property
    def d_in(self) -> int:
        return int(self.weight.shape[1])

    @property
    def d_out(self) -> int:
        return int(self.weight.shape[0])

    @property
    def parameter_count(self) -> int:
        return int(self.weight.size + self.bias.size)

class LayerGrad(BaseModel):
    """Gradient with respect to one DenseLayer's parameters"""
    weight: np.ndarray
    bias: np.ndarray

    class Config:
        arbitrary_types_allowed = True
        frozen = True

class Subnetwork(BaseModel):
    """Contiguous group of dense layers f_l with weights W_l"""
    layers: List[DenseLayer] = Field(..., min_length=1, description="Layers in application order")

    class Config:
        frozen = True

    @model_validator(mode="after")
    def _check_chain(self):
        for i in range(len(self.layers) - 1):
            if self.layers[i].d_out != self.layers[i + 1].d_in:
                raise ValueError(
                    f"layer {i} outputs {self.layers[i].d_out} but layer {i + 1} expects {self.layers[i + 1].d_in}"
                )
        return self

    @property
    def d_in(self) -> int:
        return self.layers[0].d_in

    @property
    def d_out(self) -> int:
        return self.layers[-1].d_out

    @property
    def parameter_count(self) -> int:
        return sum(layer.parameter_count for layer in self.layers)

class NetworkSpec(BaseModel):
    """Feed-forward network split into n subnetworks with a loss on the last"""
    subnetworks: List[Subnetwork] = Field(..., min_length=1)
    loss: LossKind = LossKind.SOFTMAX_CROSS_ENTROPY

    class Config:
        frozen = True

    @model_validator(mode="after")
    def _check_boundaries(self):
        for i in range(len(self.subnetworks) - 1):
            if self.subnetworks[i].d_out != self.subnetworks[i + 1].d_in:
                raise ValueError(
                    f"subnetwork {i} outputs {self.subnetworks[i].d_out} but subnetwork {i + 1} expects {self.subnetworks[i + 1].d_in}"
                )
        return self

    @property
    def n(self) -> int:
        return len(self.subnetworks)

    @property
    def d_in(self) -> int:
        return self.subnetworks[0].d_in

    @property
    def d_out(self) -> int:
        return self.subnetworks[-1].d_out

    def with_subnetwork(self, index: int, sub: Subnetwork) -> "NetworkSpec":
        subnetworks = list(self.subnetworks)
        subnetworks[index] = sub
        return NetworkSpec(subnetworks=subnetworks, loss=self.loss)

    def with_subnetworks(self, subnetworks: List[Subnetwork]) -> "NetworkSpec":
        return NetworkSpec(subnetworks=list(subnetworks), loss=self.loss)
