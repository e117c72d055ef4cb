"""
Batch objectives of the relaxed problems.

Ω and R are normalised by the batch row count m; the dual and quadratic
coupling terms of L_ρ are summed over the batch rows, so the closed-form q
update (with m = b) is the exact minimiser.
"""

from typing import Sequence

import numpy as np

from core.exceptions import DimensionException, ModeException
from network.schemas import NetworkSpec, Subnetwork
from network.services import forward, loss_value
from optimizers.schemas import AuxMode, AuxState, Hyperparams
from tensor.services import frobenius_sq, gather_rows


def penalty_omega(sub: Subnetwork, P: np.ndarray, Q: np.ndarray, alpha: float, m_scale: float) -> float:
    """(α / 2m) · ‖Q − f(P)‖²"""
    out = forward(sub, P)
    if Q.shape != out.shape:
        raise DimensionException(f"Target shape {tuple(Q.shape)} does not match output {tuple(out.shape)}")
    return alpha / (2.0 * m_scale) * frobenius_sq(Q - out)


def coupling_terms(U: np.ndarray, P_next: np.ndarray, Q: np.ndarray, rho: float) -> float:
    """⟨u, p_{l+1} − q_l⟩ + (ρ/2)‖p_{l+1} − q_l‖²"""
    gap = P_next - Q
    return float(np.sum(U * gap)) + 0.5 * rho * frobenius_sq(gap)


def augmented_lagrangian(
    net: NetworkSpec,
    aux: AuxState,
    hp: Hyperparams,
    idx: Sequence[int],
    Y: np.ndarray
) -> float:
    """L_ρ on rows ``idx``; ``Y`` holds the labels of those rows"""
    if aux.mode is not AuxMode.GSADMM:
        raise ModeException("augmented_lagrangian needs q and u (gsADMM state)")
    b = len(idx)
    p = [gather_rows(block, idx) for block in aux.p]
    q = [gather_rows(block, idx) for block in aux.q]
    u = [gather_rows(block, idx) for block in aux.u]
    value = loss_value(net.loss, forward(net.subnetworks[-1], p[-1]), Y)
    for l in range(net.n - 1):
        value += penalty_omega(net.subnetworks[l], p[l], q[l], hp.alpha, b)
        value += coupling_terms(u[l], p[l + 1], q[l], hp.rho)
    return value


def objective_F(
    net: NetworkSpec,
    aux: AuxState,
    hp: Hyperparams,
    idx: Sequence[int],
    Y: np.ndarray
) -> float:
    """F(W, p) = R + Σ Ω(W_l, p_l, p_{l+1}) on rows ``idx``"""
    b = len(idx)
    p = [gather_rows(block, idx) for block in aux.p]
    value = loss_value(net.loss, forward(net.subnetworks[-1], p[-1]), Y)
    for l in range(net.n - 1):
        value += penalty_omega(net.subnetworks[l], p[l], p[l + 1], hp.alpha, b)
    return value
