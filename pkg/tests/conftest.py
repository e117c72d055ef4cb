import numpy as np
import pytest

from cli.schemas import BlobsParams, RunConfig
from dataio.schemas import Dataset
from dataio.services import one_hot, synthetic_blobs
from network.schemas import Activation, DenseLayer, LossKind, NetworkSpec, Subnetwork
from network.services import build_network
from optimizers.schemas import Hyperparams
from tensor.schemas import RngState


def linear_sub(*weights: float) -> Subnetwork:
    """Chain of 1×1 identity-activation layers"""
    return Subnetwork(layers=[
        DenseLayer(weight=[[w]], bias=[0.0], activation=Activation.IDENTITY) for w in weights
    ])


@pytest.fixture
def blobs() -> Dataset:
    return synthetic_blobs(3, 5, 20, 4.0, RngState(7))


@pytest.fixture
def small_net() -> NetworkSpec:
    return build_network([5, 6, 6, 6, 3], RngState(3), splits=2)


@pytest.fixture
def scalar_chain() -> NetworkSpec:
    """Three 1-D linear subnetworks with least-squares loss"""
    return NetworkSpec(
        subnetworks=[linear_sub(2.0), linear_sub(0.5), linear_sub(3.0)],
        loss=LossKind.LEAST_SQUARES
    )


@pytest.fixture
def tiny_dataset() -> Dataset:
    inputs = np.array([[0.0, 1.0, 0.5, 0.25], [1.0, 0.0, 0.75, 0.5]])
    return Dataset(name="tiny", inputs=inputs, labels_onehot=one_hot([1, 0], 10), labels_raw=[1, 0])


@pytest.fixture
def fast_hp() -> Hyperparams:
    return Hyperparams(batch_size=16)


@pytest.fixture
def small_run(tmp_path) -> RunConfig:
    return RunConfig(
        method="gsadmm",
        splits=2,
        widths=[8, 8, 8],
        dataset="blobs",
        blobs=BlobsParams(classes=3, dim=4, per_class=20),
        epochs=2,
        seed=11,
        hyperparams=Hyperparams(batch_size=16),
        workers=1,
        out=str(tmp_path / "metrics.csv")
    )
