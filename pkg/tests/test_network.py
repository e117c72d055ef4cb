import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from pydantic import ValidationError

from core.exceptions import ConfigException, DimensionException, ValidationException
from network.schemas import Activation, DenseLayer, LossKind, NetworkSpec, Subnetwork
from network.services import (
    balanced_split_points,
    build_network,
    compose,
    forward,
    init_layers,
    lipschitz_upper_bound,
    loss_and_grad,
    min_preactivation_margin,
    spectral_norm,
    split_layers,
    vjp_input,
    vjp_weights,
)
from tensor.schemas import RngState
from verify.services import gradient_vector, grad_check, subnetwork_from_vector, subnetwork_vector

from tests.conftest import linear_sub


def relu_sub(rng: RngState, widths) -> Subnetwork:
    layers = [
        DenseLayer(weight=rng.normal((widths[i + 1], widths[i])), bias=rng.normal((widths[i + 1],), scale=0.5))
        for i in range(len(widths) - 1)
    ]
    return Subnetwork(layers=layers)


class TestForward:

    def test_identity_on_nonnegative_input(self):
        sub = Subnetwork(layers=[DenseLayer(weight=np.eye(2), bias=np.zeros(2))])
        assert forward(sub, np.array([[1.0, 2.0]])).tolist() == [[1.0, 2.0]]

    def test_relu_with_bias(self):
        sub = Subnetwork(layers=[DenseLayer(weight=[[1.0, -1.0]], bias=[0.5])])
        assert forward(sub, np.array([[2.0, 1.0]])).tolist() == [[1.5]]

    def test_matches_layer_by_layer(self):
        rng = RngState(8)
        sub = relu_sub(rng, [4, 5, 3, 2])
        X = rng.normal((6, 4))
        expected = X
        for layer in sub.layers:
            expected = np.maximum(expected @ layer.weight.T + layer.bias, 0.0)
        assert np.max(np.abs(forward(sub, X) - expected)) < 1e-12

    def test_input_width_checked(self):
        with pytest.raises(DimensionException):
            forward(linear_sub(1.0), np.zeros((2, 3)))

    @given(seed=st.integers(0, 10_000))
    @settings(max_examples=25, deadline=None)
    def test_row_permutation_equivariance(self, seed):
        rng = RngState(seed)
        sub = relu_sub(rng, [3, 4, 2])
        X, G = rng.normal((5, 3)), rng.normal((5, 2))
        order = rng.permutation(5)
        assert np.allclose(forward(sub, X[order]), forward(sub, X)[order], rtol=0, atol=1e-12)
        assert np.allclose(vjp_input(sub, X[order], G[order]), vjp_input(sub, X, G)[order], rtol=0, atol=1e-12)


class TestVJP:

    def test_linear_transpose(self):
        sub = Subnetwork(layers=[DenseLayer(weight=[[2.0, 0.0], [0.0, 3.0]], bias=[0.0, 0.0], activation=Activation.IDENTITY)])
        assert vjp_input(sub, np.zeros((1, 2)), np.array([[1.0, 1.0]])).tolist() == [[2.0, 3.0]]

    def test_dead_relu(self):
        sub = Subnetwork(layers=[DenseLayer(weight=[[1.0]], bias=[-5.0])])
        assert vjp_input(sub, np.array([[1.0]]), np.array([[1.0]])).tolist() == [[0.0]]

    def test_outer_product(self):
        sub = Subnetwork(layers=[DenseLayer(weight=[[0.3, 0.7]], bias=[0.0], activation=Activation.IDENTITY)])
        (grad,) = vjp_weights(sub, np.array([[1.0, 0.0]]), np.array([[1.0]]))
        assert grad.weight.tolist() == [[1.0, 0.0]] and grad.bias.tolist() == [1.0]

    def test_zero_cotangent(self):
        rng = RngState(3)
        sub = relu_sub(rng, [3, 4, 2])
        for grad in vjp_weights(sub, rng.normal((4, 3)), np.zeros((4, 2))):
            assert not grad.weight.any() and not grad.bias.any()

    def test_finite_differences(self):
        rng = RngState(12)
        while True:
            sub = relu_sub(rng, [3, 5, 4, 2])
            X, G = rng.uniform(0.0, 1.0, (4, 3)), rng.normal((4, 2))
            if min_preactivation_margin(NetworkSpec(subnetworks=[sub]), X) > 1e-3:
                break

        input_error = grad_check(lambda P: float(np.sum(G * forward(sub, P))), X, vjp_input(sub, X, G))
        weight_error = grad_check(
            lambda v: float(np.sum(G * forward(subnetwork_from_vector(sub, v), X))),
            subnetwork_vector(sub),
            gradient_vector(vjp_weights(sub, X, G))
        )
        assert input_error < 1e-6
        assert weight_error < 1e-6


class TestLosses:

    def test_least_squares_at_target(self):
        Y = np.array([[1.0, 2.0]])
        loss, grad = loss_and_grad(LossKind.LEAST_SQUARES, Y.copy(), Y)
        assert loss == 0.0 and not grad.any()

    def test_uniform_softmax(self):
        loss, grad = loss_and_grad(LossKind.SOFTMAX_CROSS_ENTROPY, np.zeros((1, 2)), np.array([[1.0, 0.0]]))
        assert loss == pytest.approx(np.log(2.0), abs=1e-12)
        assert np.allclose(grad, [[-0.5, 0.5]], atol=1e-12)

    @pytest.mark.parametrize("kind", list(LossKind))
    def test_gradient_matches_finite_differences(self, kind):
        rng = RngState(21)
        Z = rng.normal((4, 3))
        Y = np.eye(3)[[0, 2, 1, 1]]
        _, grad = loss_and_grad(kind, Z, Y)
        assert grad_check(lambda z: loss_and_grad(kind, z, Y)[0], Z, grad) < 1e-6

    def test_cross_entropy_needs_one_hot(self):
        with pytest.raises(ValidationException):
            loss_and_grad(LossKind.SOFTMAX_CROSS_ENTROPY, np.zeros((1, 2)), np.array([[0.5, 0.5]]))


class TestLipschitz:

    def test_scalar(self):
        H = lipschitz_upper_bound(linear_sub(3.0))
        assert 3.0 <= H <= 3.01

    def test_diagonal_product(self):
        sub = Subnetwork(layers=[
            DenseLayer(weight=np.diag([2.0, 1.0]), bias=np.zeros(2)),
            DenseLayer(weight=np.diag([5.0, 1.0]), bias=np.zeros(2)),
        ])
        assert lipschitz_upper_bound(sub) >= 10.0

    def test_spectral_norm_matches_svd(self):
        W = RngState(6).normal((7, 4))
        assert spectral_norm(W) == pytest.approx(np.linalg.norm(W, 2), rel=1e-8)

    def test_dominates_random_pairs(self):
        rng = RngState(30)
        sub = relu_sub(rng, [4, 6, 6, 3])
        H = lipschitz_upper_bound(sub)
        A, B = rng.normal((1000, 4)), rng.normal((1000, 4))
        ratios = np.linalg.norm(forward(sub, A) - forward(sub, B), axis=1) / np.linalg.norm(A - B, axis=1)
        assert ratios.max() <= H


class TestConstruction:

    def test_schema_rejects_broken_chain(self):
        with pytest.raises(ValidationError):
            Subnetwork(layers=[
                DenseLayer(weight=np.ones((3, 2)), bias=np.zeros(3)),
                DenseLayer(weight=np.ones((2, 4)), bias=np.zeros(2)),
            ])

    def test_initialisation_range(self):
        layers = init_layers([10, 6, 3], RngState(0))
        limit = np.sqrt(6.0 / 16.0)
        assert np.abs(layers[0].weight).max() <= limit
        assert not layers[0].bias.any()
        assert layers[-1].activation is Activation.IDENTITY

    def test_balanced_split_of_equal_layers(self):
        layers = init_layers([8, 8, 8, 8, 8], RngState(0))
        assert balanced_split_points(layers, 2) == [2]
        assert balanced_split_points(layers, 4) == [1, 2, 3]

    def test_too_many_splits(self):
        with pytest.raises(ConfigException):
            balanced_split_points(init_layers([4, 4, 2], RngState(0)), 3)

    def test_invalid_split_point_lists_boundaries(self):
        layers = init_layers([4, 4, 4, 2], RngState(0))
        with pytest.raises(ConfigException) as info:
            split_layers(layers, [3])
        assert info.value.details["valid_boundaries"] == [1, 2]

    def test_splitting_preserves_the_function(self):
        widths = [5, 7, 7, 7, 7, 3]
        whole = build_network(widths, RngState(4), splits=1)
        split = build_network(widths, RngState(4), splits=3)
        X = RngState(5).uniform(0.0, 1.0, (9, 5))
        assert split.n == 3
        assert np.array_equal(compose(whole, X), compose(split, X))
