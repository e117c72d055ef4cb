"""
Subnetwork maths: forward maps, vector-Jacobian products, losses, Lipschitz bounds
and construction of split networks.
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from core.exceptions import ConfigException, DimensionException, ValidationException
from network.schemas import Activation, DenseLayer, LayerGrad, LossKind, NetworkSpec, Subnetwork
from tensor.schemas import RngState
from tensor.services import ensure_finite, matmul

logger = logging.getLogger(__name__)

LIPSCHITZ_INFLATION = 1.001
POWER_MIN_ITERATIONS = 30
POWER_MAX_ITERATIONS = 1000
POWER_TOLERANCE = 1e-10


def _check_input(sub: Subnetwork, P: np.ndarray) -> None:
    if P.ndim != 2 or P.shape[1] != sub.d_in:
        raise DimensionException(
            f"Subnetwork expects input of shape (b, {sub.d_in}), got {tuple(P.shape)}"
        )


def _check_cotangent(sub: Subnetwork, P: np.ndarray, G: np.ndarray) -> None:
    if G.ndim != 2 or G.shape != (P.shape[0], sub.d_out):
        raise DimensionException(
            f"Cotangent shape {tuple(G.shape)} does not match output shape ({P.shape[0]}, {sub.d_out})"
        )

# =============================================================================
# FORWARD AND BACKWARD
# =============================================================================

def _layer_forward(layer: DenseLayer, X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    pre = matmul(X, layer.weight.T) + layer.bias
    if layer.activation is Activation.RELU:
        return pre, np.maximum(pre, 0.0)
    return pre, pre


def forward_trace(sub: Subnetwork, P: np.ndarray) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    """Layer inputs and pre-activations of a forward pass (for backprop and kink checks)"""
    _check_input(sub, P)
    inputs, pres = [], []
    X = P
    for layer in sub.layers:
        inputs.append(X)
        pre, X = _layer_forward(layer, X)
        pres.append(pre)
    inputs.append(X)
    return inputs, pres


def forward(sub: Subnetwork, P: np.ndarray) -> np.ndarray:
    """f_l(W_l, P), row by row"""
    inputs, _ = forward_trace(sub, P)
    return inputs[-1]


def compose(net: NetworkSpec, P: np.ndarray, upto: Optional[int] = None) -> np.ndarray:
    """f_upto ∘ … ∘ f_1 applied to P (all subnetworks by default)"""
    X = P
    for sub in net.subnetworks[: net.n if upto is None else upto]:
        X = forward(sub, X)
    return X


def backprop(sub: Subnetwork, P: np.ndarray, G: np.ndarray) -> Tuple[np.ndarray, List[LayerGrad]]:
    """Jᵀ·G with respect to the input and to every layer's parameters"""
    _check_input(sub, P)
    _check_cotangent(sub, P, G)
    inputs, pres = forward_trace(sub, P)
    grads: List[LayerGrad] = []
    delta = np.asarray(G, dtype=np.float64)
    for layer, X, pre in zip(reversed(sub.layers), reversed(inputs[:-1]), reversed(pres)):
        if layer.activation is Activation.RELU:
            # subgradient 0 at the kink
            delta = delta * (pre > 0.0)
        grads.append(LayerGrad(weight=matmul(delta.T, X), bias=delta.sum(axis=0)))
        delta = matmul(delta, layer.weight)
    grads.reverse()
    return delta, grads


def vjp_input(sub: Subnetwork, P: np.ndarray, G: np.ndarray) -> np.ndarray:
    dP, _ = backprop(sub, P, G)
    return dP


def vjp_weights(sub: Subnetwork, P: np.ndarray, G: np.ndarray) -> List[LayerGrad]:
    _, grads = backprop(sub, P, G)
    return grads

# =============================================================================
# LOSSES
# =============================================================================

def _log_softmax(Z: np.ndarray) -> np.ndarray:
    shifted = Z - Z.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def is_one_hot(Y: np.ndarray) -> bool:
    return bool(
        Y.ndim == 2
        and np.all((Y == 0.0) | (Y == 1.0))
        and np.all(Y.sum(axis=1) == 1.0)
    )


def loss_and_grad(kind: LossKind, Z: np.ndarray, Y: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean-over-batch loss R and its gradient with respect to Z"""
    if Z.shape != Y.shape or Z.ndim != 2:
        raise DimensionException(f"Outputs {tuple(Z.shape)} and labels {tuple(Y.shape)} differ in shape")
    b = Z.shape[0]
    if kind is LossKind.SOFTMAX_CROSS_ENTROPY:
        if not is_one_hot(Y):
            raise ValidationException("Cross-entropy labels must be one-hot rows")
        log_probs = _log_softmax(Z)
        loss = -float(np.sum(log_probs * Y)) / b
        grad = (np.exp(log_probs) - Y) / b
    else:
        residual = Z - Y
        loss = 0.5 * float(np.sum(residual * residual)) / b
        grad = residual / b
    ensure_finite(np.asarray(loss), "loss")
    return loss, ensure_finite(grad, "loss gradient")


def loss_value(kind: LossKind, Z: np.ndarray, Y: np.ndarray) -> float:
    loss, _ = loss_and_grad(kind, Z, Y)
    return loss

# =============================================================================
# LIPSCHITZ BOUNDS
# =============================================================================

def spectral_norm(W: np.ndarray, rng: Optional[RngState] = None) -> float:
    """Largest singular value of W by power iteration on WᵀW"""
    rng = rng or RngState(0)
    v = rng.normal((W.shape[1],))
    norm = np.linalg.norm(v)
    if norm == 0.0:
        return 0.0
    v /= norm
    sigma = 0.0
    for iteration in range(1, POWER_MAX_ITERATIONS + 1):
        w = W @ v
        new_sigma = float(np.linalg.norm(w))
        if new_sigma == 0.0:
            return 0.0
        v = W.T @ w
        v /= np.linalg.norm(v)
        converged = abs(new_sigma - sigma) <= POWER_TOLERANCE * new_sigma
        sigma = new_sigma
        if iteration >= POWER_MIN_ITERATIONS and converged:
            break
    return sigma


def lipschitz_upper_bound(sub: Subnetwork) -> float:
    """Product of inflated layer spectral norms; ReLU and identity are 1-Lipschitz"""
    bound = 1.0
    for layer in sub.layers:
        bound *= spectral_norm(layer.weight) * LIPSCHITZ_INFLATION
    return bound

# =============================================================================
# CONSTRUCTION
# =============================================================================

def init_layer(d_in: int, d_out: int, activation: Activation, rng: RngState) -> DenseLayer:
    """Uniform ±√(6/(d_in+d_out)) weights, zero bias"""
    limit = np.sqrt(6.0 / (d_in + d_out))
    return DenseLayer(
        weight=rng.uniform(-limit, limit, (d_out, d_in)),
        bias=np.zeros(d_out),
        activation=activation
    )


def init_layers(widths: Sequence[int], rng: RngState) -> List[DenseLayer]:
    """ReLU layers between consecutive widths, identity on the output layer"""
    if len(widths) < 2 or min(widths) < 1:
        raise ConfigException(f"Need at least input and output widths >= 1, got {list(widths)}")
    layers = []
    for i in range(len(widths) - 1):
        activation = Activation.IDENTITY if i == len(widths) - 2 else Activation.RELU
        layers.append(init_layer(widths[i], widths[i + 1], activation, rng))
    return layers


def balanced_split_points(layers: Sequence[DenseLayer], n: int) -> List[int]:
    """Boundaries cutting ``layers`` into n contiguous groups of near-equal parameter count"""
    total_layers = len(layers)
    if n < 1 or n > total_layers:
        raise ConfigException(
            f"Cannot split {total_layers} layers into {n} subnetworks",
            details={"layers": total_layers, "splits": n}
        )
    cumulative = np.cumsum([layer.parameter_count for layer in layers])
    total = cumulative[-1]
    points: List[int] = []
    previous = 0
    for j in range(1, n):
        target = total * j / n
        # boundary k means a cut after layer k-1; leave room for the remaining groups
        lowest = previous + 1
        highest = total_layers - (n - j)
        candidates = range(lowest, highest + 1)
        best = min(candidates, key=lambda k: (abs(cumulative[k - 1] - target), k))
        points.append(best)
        previous = best
    return points


def valid_boundaries(layer_count: int) -> List[int]:
    return list(range(1, layer_count))


def split_layers(layers: Sequence[DenseLayer], split_points: Sequence[int]) -> List[Subnetwork]:
    points = list(split_points)
    boundaries = valid_boundaries(len(layers))
    if sorted(set(points)) != points or any(p not in boundaries for p in points):
        raise ConfigException(
            f"Split points {points} must be strictly increasing layer boundaries from {boundaries}",
            details={"valid_boundaries": boundaries}
        )
    edges = [0] + points + [len(layers)]
    return [Subnetwork(layers=list(layers[a:b])) for a, b in zip(edges[:-1], edges[1:])]


def build_network(
    widths: Sequence[int],
    rng: RngState,
    splits: int = 1,
    split_points: Optional[Sequence[int]] = None,
    loss: LossKind = LossKind.SOFTMAX_CROSS_ENTROPY
) -> NetworkSpec:
    """Initialise an MLP over ``widths`` (input … classes) and cut it into subnetworks"""
    layers = init_layers(widths, rng)
    if split_points is None:
        split_points = balanced_split_points(layers, splits)
    elif len(split_points) != splits - 1:
        raise ConfigException(
            f"{splits} subnetworks need {splits - 1} split points, got {list(split_points)}",
            details={"valid_boundaries": valid_boundaries(len(layers))}
        )
    net = NetworkSpec(subnetworks=split_layers(layers, split_points), loss=loss)
    logger.debug("Built network %s split at %s", list(widths), list(split_points))
    return net


def min_preactivation_margin(net: NetworkSpec, P: np.ndarray) -> float:
    """Smallest |pre-activation| at ReLU units along the composed pass"""
    margin = np.inf
    X = P
    for sub in net.subnetworks:
        inputs, pres = forward_trace(sub, X)
        for layer, pre in zip(sub.layers, pres):
            if layer.activation is Activation.RELU and pre.size:
                margin = min(margin, float(np.abs(pre).min()))
        X = inputs[-1]
    return margin
