# Network Package
# Dense ReLU subnetworks f_l: forward maps, VJPs, losses and Lipschitz bounds

from .schemas import (
    Activation,
    LossKind,
    DenseLayer,
    LayerGrad,
    Subnetwork,
    NetworkSpec,
)

from .services import (
    forward,
    forward_trace,
    compose,
    backprop,
    vjp_input,
    vjp_weights,
    loss_and_grad,
    loss_value,
    lipschitz_upper_bound,
    spectral_norm,
    build_network,
    balanced_split_points,
    split_layers,
)

__all__ = [
    # Schemas
    "Activation",
    "LossKind",
    "DenseLayer",
    "LayerGrad",
    "Subnetwork",
    "NetworkSpec",

    # Services
    "forward",
    "forward_trace",
    "compose",
    "backprop",
    "vjp_input",
    "vjp_weights",
    "loss_and_grad",
    "loss_value",
    "lipschitz_upper_bound",
    "spectral_norm",
    "build_network",
    "balanced_split_points",
    "split_layers",
]
