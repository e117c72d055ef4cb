"""
gsADMM and gsAM epochs, their update equations, and the backpropagation baselines.

Every epoch reads the sample-set rows of the auxiliary variables, runs the
update phases on those rows and writes them back. Phases run through a
PhaseRuntime; each task returns its new slice and the epoch commits the slices
after the barrier, so results never depend on worker scheduling.
"""

import logging
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from core.exceptions import ContractViolationException, DimensionException, ModeException, ParameterException
from dataio.schemas import Dataset
from network.schemas import LayerGrad, NetworkSpec, Subnetwork
from network.services import backprop, compose, forward, loss_and_grad, vjp_input, vjp_weights
from optimizers.objectives import augmented_lagrangian, objective_F
from optimizers.schemas import (
    AdamMoments,
    AuxMode,
    AuxState,
    HiddenRole,
    Hyperparams,
    InnerOptimizer,
    LastRole,
    Sampling,
    TrainState,
)
from runtime.services import PhaseRuntime
from tensor.schemas import RngState
from tensor.services import ensure_finite, frobenius_sq, gather_rows, scatter_rows

logger = logging.getLogger(__name__)

SGD_BASELINE_LR = 1e-2
ADAM_BASELINE_LR = 1e-3

Role = Union[HiddenRole, LastRole]

# =============================================================================
# SAMPLING
# =============================================================================

def sample_batch(rng: RngState, M: int, b: int) -> np.ndarray:
    """b distinct indices drawn uniformly from [0, M)"""
    if b < 1 or b > M:
        raise ParameterException(f"Batch size {b} must lie in [1, {M}]")
    return rng.choice(M, b)


def epoch_batches(rng: RngState, M: int, hp: Hyperparams) -> List[np.ndarray]:
    """Sample sets for one epoch: one draw, or a shuffled sweep in chunks of b"""
    b = hp.batch_size
    if b > M:
        raise ParameterException(f"Batch size {b} exceeds the {M} training samples")
    if hp.sampling is Sampling.SINGLE:
        return [sample_batch(rng, M, b)]
    order = rng.permutation(M)
    return [order[start:start + b] for start in range(0, M, b)]

# =============================================================================
# INNER OPTIMIZERS
# =============================================================================

def sgd_step(sub: Subnetwork, grads: Sequence[LayerGrad], lr: float) -> Subnetwork:
    layers = [
        layer.model_copy(update={
            "weight": ensure_finite(layer.weight - lr * grad.weight, "weights"),
            "bias": ensure_finite(layer.bias - lr * grad.bias, "bias"),
        })
        for layer, grad in zip(sub.layers, grads)
    ]
    return Subnetwork(layers=layers)


def _zero_moments(sub: Subnetwork) -> AdamMoments:
    zeros = [LayerGrad(weight=np.zeros_like(layer.weight), bias=np.zeros_like(layer.bias)) for layer in sub.layers]
    return AdamMoments(step=0, first=zeros, second=list(zeros))


def adam_step(
    sub: Subnetwork,
    grads: Sequence[LayerGrad],
    moments: Optional[AdamMoments],
    lr: float,
    hp: Hyperparams
) -> Tuple[Subnetwork, AdamMoments]:
    moments = moments or _zero_moments(sub)
    step = moments.step + 1
    b1, b2, eps = hp.adam_beta1, hp.adam_beta2, hp.adam_eps
    first, second, layers = [], [], []
    for layer, grad, m, v in zip(sub.layers, grads, moments.first, moments.second):
        m_w = b1 * m.weight + (1.0 - b1) * grad.weight
        m_b = b1 * m.bias + (1.0 - b1) * grad.bias
        v_w = b2 * v.weight + (1.0 - b2) * grad.weight ** 2
        v_b = b2 * v.bias + (1.0 - b2) * grad.bias ** 2
        first.append(LayerGrad(weight=m_w, bias=m_b))
        second.append(LayerGrad(weight=v_w, bias=v_b))
        c1, c2 = 1.0 - b1 ** step, 1.0 - b2 ** step
        layers.append(layer.model_copy(update={
            "weight": ensure_finite(layer.weight - lr * (m_w / c1) / (np.sqrt(v_w / c2) + eps), "weights"),
            "bias": ensure_finite(layer.bias - lr * (m_b / c1) / (np.sqrt(v_b / c2) + eps), "bias"),
        }))
    return Subnetwork(layers=layers), AdamMoments(step=step, first=first, second=second)


def apply_step(
    sub: Subnetwork,
    grads: Sequence[LayerGrad],
    moments: Optional[AdamMoments],
    opt: InnerOptimizer,
    lr: float,
    hp: Hyperparams
) -> Tuple[Subnetwork, Optional[AdamMoments]]:
    if opt is InnerOptimizer.ADAM:
        return adam_step(sub, grads, moments, lr, hp)
    return sgd_step(sub, grads, lr), moments

# =============================================================================
# W UPDATE
# =============================================================================

def weight_gradients(sub: Subnetwork, P_s: np.ndarray, T_s: np.ndarray, role: Role) -> List[LayerGrad]:
    """∇_W of Ω(W, P_s, T_s) for hidden subnetworks, of R(W, P_s; T_s) for the last"""
    out = forward(sub, P_s)
    if out.shape != T_s.shape:
        raise DimensionException(f"Targets {tuple(T_s.shape)} do not match outputs {tuple(out.shape)}")
    if isinstance(role, HiddenRole):
        G = -(role.alpha / role.batch_rows) * (T_s - out)
    else:
        _, G = loss_and_grad(role.loss, out, T_s)
    return vjp_weights(sub, P_s, G)


def update_weights(
    sub: Subnetwork,
    P_s: np.ndarray,
    T_s: np.ndarray,
    role: Role,
    hp: Hyperparams,
    moments: Optional[AdamMoments] = None
) -> Tuple[Subnetwork, Optional[AdamMoments]]:
    """One SGD (W − ∇/τ1) or Adam (lr 1/τ1) step"""
    grads = weight_gradients(sub, P_s, T_s, role)
    return apply_step(sub, grads, moments, hp.inner_opt, hp.w_lr, hp)

# =============================================================================
# p, q, u UPDATES
# =============================================================================

def _check_targets(n: int, layers: Optional[Sequence[int]]) -> List[int]:
    targets = list(range(1, n)) if layers is None else list(layers)
    if 0 in targets:
        raise ContractViolationException("p_1 is the training input and cannot be updated")
    if any(l < 0 or l >= n for l in targets):
        raise ContractViolationException(f"p indices must lie in [1, {n - 1}], got {targets}")
    return targets


def _output_gradient(net: NetworkSpec, l: int, P: np.ndarray, T: np.ndarray, alpha: float, b: int) -> np.ndarray:
    """∇_{p_l} of the term whose input is p_l: Ω(W_l, p_l, T) or R(W_n, p_n; T)"""
    sub = net.subnetworks[l]
    if l < net.n - 1:
        return -(alpha / b) * vjp_input(sub, P, T - forward(sub, P))
    _, G = loss_and_grad(net.loss, forward(sub, P), T)
    return vjp_input(sub, P, G)


def p_gradient_gsadmm(
    net: NetworkSpec,
    l: int,
    p_s: Sequence[np.ndarray],
    q_s: Sequence[np.ndarray],
    u_s: Sequence[np.ndarray],
    Y_s: np.ndarray,
    hp: Hyperparams
) -> np.ndarray:
    """∇_{p_l} L_ρ on batch rows (0-based l ≥ 1)"""
    b = p_s[0].shape[0]
    target = q_s[l] if l < net.n - 1 else Y_s
    grad = _output_gradient(net, l, p_s[l], target, hp.alpha, b)
    return grad + u_s[l - 1] + hp.rho * (p_s[l] - q_s[l - 1])


def update_p_gsadmm(
    net: NetworkSpec,
    aux: AuxState,
    hp: Hyperparams,
    idx: Sequence[int],
    Y: np.ndarray,
    layers: Optional[Sequence[int]] = None
) -> Dict[int, np.ndarray]:
    """New rows ``idx`` of p_l (0-based l ≥ 1), all computed from the same snapshot"""
    if aux.mode is not AuxMode.GSADMM:
        raise ModeException("update_p_gsadmm needs gsADMM state")
    targets = _check_targets(net.n, layers)
    p_s = [gather_rows(block, idx) for block in aux.p]
    q_s = [gather_rows(block, idx) for block in aux.q]
    u_s = [gather_rows(block, idx) for block in aux.u]
    return {
        l: p_s[l] - hp.p_lr * p_gradient_gsadmm(net, l, p_s, q_s, u_s, Y, hp)
        for l in targets
    }


def update_q_closed_form(
    sub: Subnetwork,
    P_rows: np.ndarray,
    P_next_rows: np.ndarray,
    U_rows: np.ndarray,
    hp: Hyperparams,
    m_scale: float
) -> np.ndarray:
    """q ← (α f(p_l) + ρ m p_{l+1} + m u_l) / (ρ m + α)"""
    out = forward(sub, P_rows)
    if not out.shape == P_next_rows.shape == U_rows.shape:
        raise DimensionException(
            f"q update shapes differ: f {tuple(out.shape)}, p {tuple(P_next_rows.shape)}, u {tuple(U_rows.shape)}"
        )
    m = float(m_scale)
    return ensure_finite((hp.alpha * out + hp.rho * m * P_next_rows + m * U_rows) / (hp.rho * m + hp.alpha), "q")


def update_duals(U_rows: np.ndarray, P_next_rows: np.ndarray, Q_rows: np.ndarray, rho: float) -> np.ndarray:
    """u ← u + ρ(p_{l+1} − q_l)"""
    if not U_rows.shape == P_next_rows.shape == Q_rows.shape:
        raise DimensionException(
            f"dual update shapes differ: u {tuple(U_rows.shape)}, p {tuple(P_next_rows.shape)}, q {tuple(Q_rows.shape)}"
        )
    return ensure_finite(U_rows + rho * (P_next_rows - Q_rows), "u")

# =============================================================================
# gsAM p UPDATE
# =============================================================================

def p_gradient_gsam(
    net: NetworkSpec,
    l: int,
    p_s: Sequence[np.ndarray],
    Y_s: np.ndarray,
    hp: Hyperparams
) -> np.ndarray:
    """∇_{p_l} F on batch rows: Ω with the previous subnetwork plus the term p_l feeds"""
    b = p_s[0].shape[0]
    incoming = (hp.alpha / b) * (p_s[l] - forward(net.subnetworks[l - 1], p_s[l - 1]))
    target = p_s[l + 1] if l < net.n - 1 else Y_s
    return incoming + _output_gradient(net, l, p_s[l], target, hp.alpha, b)


def _gsam_sweep(net: NetworkSpec, p_s: List[np.ndarray], Y_s: np.ndarray, hp: Hyperparams, targets: Sequence[int]) -> List[np.ndarray]:
    p_s = list(p_s)
    for l in targets:
        # p_{l-1} already carries this sweep's value
        p_s[l] = p_s[l] - hp.p_lr * p_gradient_gsam(net, l, p_s, Y_s, hp)
    return p_s


def update_p_gsam(
    net: NetworkSpec,
    aux: AuxState,
    hp: Hyperparams,
    idx: Sequence[int],
    Y: np.ndarray,
    layers: Optional[Sequence[int]] = None
) -> Dict[int, np.ndarray]:
    """New rows ``idx`` of p_l, swept l = 2..n in order"""
    targets = _check_targets(net.n, layers)
    p_s = [gather_rows(block, idx) for block in aux.p]
    swept = _gsam_sweep(net, p_s, Y, hp, sorted(targets))
    return {l: swept[l] for l in targets}

# =============================================================================
# AUXILIARY STATE
# =============================================================================

def init_aux(net: NetworkSpec, inputs: np.ndarray, mode: AuxMode = AuxMode.GSADMM) -> AuxState:
    """Warm start by forward chaining: every constraint holds and every penalty is zero"""
    if inputs.ndim != 2 or inputs.shape[1] != net.d_in:
        raise DimensionException(f"Inputs {tuple(inputs.shape)} do not match network input width {net.d_in}")
    p = [np.array(inputs, dtype=np.float64)]
    q: List[np.ndarray] = []
    for sub in net.subnetworks[:-1]:
        out = forward(sub, p[-1])
        q.append(out)
        p.append(out.copy())
    if mode is AuxMode.GSAM:
        return AuxState(mode=mode, p=p)
    return AuxState(mode=mode, p=p, q=q, u=[np.zeros_like(block) for block in q])

# =============================================================================
# EPOCHS
# =============================================================================

def _weight_phase(
    runtime: PhaseRuntime,
    net: NetworkSpec,
    state: TrainState,
    hp: Hyperparams,
    p_s: Sequence[np.ndarray],
    targets: Sequence[np.ndarray],
    Y_s: np.ndarray
) -> Tuple[NetworkSpec, List[Optional[AdamMoments]]]:
    b = Y_s.shape[0]
    tasks = []
    for l, sub in enumerate(net.subnetworks):
        role: Role = HiddenRole(alpha=hp.alpha, batch_rows=b) if l < net.n - 1 else LastRole(loss=net.loss)
        target = targets[l] if l < net.n - 1 else Y_s
        tasks.append((l, lambda sub=sub, l=l, role=role, target=target: update_weights(
            sub, p_s[l], target, role, hp, state.moments[l]
        )))
    results = runtime.run("w", tasks)
    subs = [results[l][0] for l in range(net.n)]
    return net.with_subnetworks(subs), [results[l][1] for l in range(net.n)]


def gsadmm_iteration(
    net: NetworkSpec,
    aux: AuxState,
    hp: Hyperparams,
    state: TrainState,
    Y: np.ndarray,
    idx: np.ndarray,
    runtime: PhaseRuntime
) -> Tuple[NetworkSpec, AuxState, TrainState]:
    """One pass of the loop body: W, then p, then q, then u on rows ``idx``"""
    if aux.mode is not AuxMode.GSADMM:
        raise ModeException("gsADMM epochs need gsADMM state")
    n, b = net.n, len(idx)
    p_s = [gather_rows(block, idx) for block in aux.p]
    q_s = [gather_rows(block, idx) for block in aux.q]
    u_s = [gather_rows(block, idx) for block in aux.u]
    Y_s = gather_rows(Y, idx)

    net, moments = _weight_phase(runtime, net, state, hp, p_s, q_s, Y_s)
    state = state.model_copy(update={"moments": moments})
    if n == 1:
        return net, aux, state

    snapshot = list(p_s)
    updated = runtime.run("p", [
        (l, lambda l=l: snapshot[l] - hp.p_lr * p_gradient_gsadmm(net, l, snapshot, q_s, u_s, Y_s, hp))
        for l in range(1, n)
    ])
    p_s = [snapshot[0]] + [updated[l] for l in range(1, n)]

    updated = runtime.run("q", [
        (l, lambda l=l: update_q_closed_form(net.subnetworks[l], p_s[l], p_s[l + 1], u_s[l], hp, b))
        for l in range(n - 1)
    ])
    q_s = [updated[l] for l in range(n - 1)]

    updated = runtime.run("u", [
        (l, lambda l=l: update_duals(u_s[l], p_s[l + 1], q_s[l], hp.rho))
        for l in range(n - 1)
    ])
    u_s = [updated[l] for l in range(n - 1)]

    aux = AuxState(
        mode=aux.mode,
        p=[aux.p[0]] + [scatter_rows(aux.p[l], idx, p_s[l]) for l in range(1, n)],
        q=[scatter_rows(aux.q[l], idx, q_s[l]) for l in range(n - 1)],
        u=[scatter_rows(aux.u[l], idx, u_s[l]) for l in range(n - 1)]
    )
    return net, aux, state


def gsam_iteration(
    net: NetworkSpec,
    aux: AuxState,
    hp: Hyperparams,
    state: TrainState,
    Y: np.ndarray,
    idx: np.ndarray,
    runtime: PhaseRuntime
) -> Tuple[NetworkSpec, AuxState, TrainState]:
    """W in parallel, then p_l for l = 2..n in order, on rows ``idx``"""
    n = net.n
    p_s = [gather_rows(block, idx) for block in aux.p]
    Y_s = gather_rows(Y, idx)

    net, moments = _weight_phase(runtime, net, state, hp, p_s, p_s[1:], Y_s)
    state = state.model_copy(update={"moments": moments})
    if n == 1:
        return net, aux, state

    swept = runtime.run("p", [(0, lambda: _gsam_sweep(net, p_s, Y_s, hp, range(1, n)))])[0]
    aux = AuxState(
        mode=aux.mode,
        p=[aux.p[0]] + [scatter_rows(aux.p[l], idx, swept[l]) for l in range(1, n)]
    )
    return net, aux, state


def _check_dataset(aux: AuxState, dataset: Dataset) -> None:
    if aux.samples != dataset.samples:
        raise DimensionException(f"Auxiliary state covers {aux.samples} samples, dataset has {dataset.samples}")


def gsadmm_epoch(
    net: NetworkSpec,
    aux: AuxState,
    hp: Hyperparams,
    state: TrainState,
    dataset: Dataset,
    runtime: Optional[PhaseRuntime] = None
) -> Tuple[NetworkSpec, AuxState, TrainState]:
    _check_dataset(aux, dataset)
    runtime = runtime or PhaseRuntime(1)
    for idx in epoch_batches(state.rng, dataset.samples, hp):
        net, aux, state = gsadmm_iteration(net, aux, hp, state, dataset.labels_onehot, idx, runtime)
    return net, aux, state.model_copy(update={"k": state.k + 1})


def gsam_epoch(
    net: NetworkSpec,
    aux: AuxState,
    hp: Hyperparams,
    state: TrainState,
    dataset: Dataset,
    runtime: Optional[PhaseRuntime] = None
) -> Tuple[NetworkSpec, AuxState, TrainState]:
    if aux.mode is not AuxMode.GSAM:
        raise ModeException("gsAM epochs need gsAM state", error_code="WRONG_MODE")
    _check_dataset(aux, dataset)
    runtime = runtime or PhaseRuntime(1)
    for idx in epoch_batches(state.rng, dataset.samples, hp):
        net, aux, state = gsam_iteration(net, aux, hp, state, dataset.labels_onehot, idx, runtime)
    return net, aux, state.model_copy(update={"k": state.k + 1})

# =============================================================================
# BASELINES
# =============================================================================

def network_gradients(net: NetworkSpec, X: np.ndarray, Y: np.ndarray) -> Tuple[float, List[List[LayerGrad]]]:
    """Loss and per-subnetwork weight gradients by backprop through the composed network"""
    inputs = [X]
    for sub in net.subnetworks:
        inputs.append(forward(sub, inputs[-1]))
    loss, G = loss_and_grad(net.loss, inputs[-1], Y)
    grads: List[List[LayerGrad]] = [[] for _ in net.subnetworks]
    for l in reversed(range(net.n)):
        G, grads[l] = backprop(net.subnetworks[l], inputs[l], G)
    return loss, grads


def baseline_epoch(
    net: NetworkSpec,
    hp: Hyperparams,
    state: TrainState,
    dataset: Dataset,
    opt: InnerOptimizer = InnerOptimizer.SGD,
    lr: Optional[float] = None,
    runtime: Optional[PhaseRuntime] = None
) -> Tuple[NetworkSpec, TrainState]:
    """Mini-batch backpropagation on the unsplit objective"""
    if lr is None:
        lr = SGD_BASELINE_LR if opt is InnerOptimizer.SGD else ADAM_BASELINE_LR
    runtime = runtime or PhaseRuntime(1)
    moments = list(state.moments) or [None] * net.n

    def _step(net: NetworkSpec, idx: np.ndarray) -> Tuple[NetworkSpec, List[Optional[AdamMoments]]]:
        X_s = gather_rows(dataset.inputs, idx)
        Y_s = gather_rows(dataset.labels_onehot, idx)
        _, grads = network_gradients(net, X_s, Y_s)
        subs, new_moments = [], []
        for l, sub in enumerate(net.subnetworks):
            new_sub, m = apply_step(sub, grads[l], moments[l], opt, lr, hp)
            subs.append(new_sub)
            new_moments.append(m)
        return net.with_subnetworks(subs), new_moments

    for idx in epoch_batches(state.rng, dataset.samples, hp):
        net, moments = runtime.run("w", [(0, lambda idx=idx, net=net: _step(net, idx))])[0]
    return net, state.model_copy(update={"k": state.k + 1, "moments": moments})

# =============================================================================
# EVALUATION
# =============================================================================

def evaluate(net: NetworkSpec, inputs: np.ndarray, labels: np.ndarray) -> Tuple[float, float]:
    """Loss and accuracy of the composed network; argmax ties go to the lowest class"""
    Z = compose(net, inputs)
    loss, _ = loss_and_grad(net.loss, Z, labels)
    accuracy = float(np.mean(Z.argmax(axis=1) == labels.argmax(axis=1))) if Z.shape[0] else 0.0
    return loss, accuracy


def constraint_residual(net: NetworkSpec, aux: AuxState) -> float:
    """max_l ‖p_{l+1} − q_l‖ / √(M·d); gsAM uses f_l(p_l) in place of q_l"""
    worst = 0.0
    for l in range(aux.n - 1):
        reference = aux.q[l] if aux.mode is AuxMode.GSADMM else forward(net.subnetworks[l], aux.p[l])
        gap = aux.p[l + 1] - reference
        worst = max(worst, float(np.sqrt(frobenius_sq(gap) / max(gap.size, 1))))
    return worst


def full_objective(net: NetworkSpec, aux: AuxState, hp: Hyperparams, labels: np.ndarray) -> float:
    """L_ρ (gsADMM) or F (gsAM) over every training row"""
    idx = np.arange(aux.samples)
    if aux.mode is AuxMode.GSADMM:
        return augmented_lagrangian(net, aux, hp, idx, labels)
    return objective_F(net, aux, hp, idx, labels)
