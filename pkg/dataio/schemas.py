from typing import List

import numpy as np
from pydantic import BaseModel, Field, model_validator


class Dataset(BaseModel):
    """Inputs in [0, 1] with one-hot labels; rows are samples"""
    name: str = Field(..., description="Dataset name")
    inputs: np.ndarray = Field(..., description="Inputs, shape M×d")
    labels_onehot: np.ndarray = Field(..., description="One-hot labels, shape M×c")
    labels_raw: List[int] = Field(..., description="Class index per sample")

    class Config:
        arbitrary_types_allowed = True
        frozen = True

    @model_validator(mode="after")
    def _check_consistency(self):
        M = self.inputs.shape[0]
        if self.inputs.ndim != 2 or self.labels_onehot.ndim != 2:
            raise ValueError("inputs and labels must be matrices")
        if self.labels_onehot.shape[0] != M or len(self.labels_raw) != M:
            raise ValueError(f"sample counts differ: {M}, {self.labels_onehot.shape[0]}, {len(self.labels_raw)}")
        if M and (self.inputs.min() < 0.0 or self.inputs.max() > 1.0):
            raise ValueError("inputs must lie in [0, 1]")
        onehot = self.labels_onehot
        if not (np.all((onehot == 0.0) | (onehot == 1.0)) and np.all(onehot.sum(axis=1) == 1.0)):
            raise ValueError("label rows must be one-hot")
        if M and not np.array_equal(onehot.argmax(axis=1), np.asarray(self.labels_raw)):
            raise ValueError("one-hot rows disagree with raw labels")
        return self

    @property
    def samples(self) -> int:
        return int(self.inputs.shape[0])

    @property
    def features(self) -> int:
        return int(self.inputs.shape[1])

    @property
    def classes(self) -> int:
        return int(self.labels_onehot.shape[1])
