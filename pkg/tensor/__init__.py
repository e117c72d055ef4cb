# Tensor Package
# Dense float64 tensor helpers and the deterministic RNG shared by every other package

from .schemas import RngState
from .services import (
    as_tensor,
    ensure_finite,
    matmul,
    gather_rows,
    scatter_rows,
    frobenius_sq,
)

__all__ = [
    # Schemas
    "RngState",

    # Services
    "as_tensor",
    "ensure_finite",
    "matmul",
    "gather_rows",
    "scatter_rows",
    "frobenius_sq",
]
