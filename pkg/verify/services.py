"""
Independent oracles for the closed-form updates, the stochastic gradients,
the approximation-error bound and the n = 1 reduction.
"""

import logging
from time import perf_counter
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from core.exceptions import EvaluationException, ParameterException, SubsplitException
from dataio.schemas import Dataset
from dataio.services import synthetic_blobs
from network.schemas import Activation, DenseLayer, LossKind, NetworkSpec, Subnetwork
from network.services import (
    build_network,
    compose,
    forward,
    lipschitz_upper_bound,
    loss_value,
    min_preactivation_margin,
)
from optimizers.objectives import augmented_lagrangian, objective_F, penalty_omega
from optimizers.schemas import AuxMode, AuxState, HiddenRole, Hyperparams, InnerOptimizer, LastRole, TrainState
from optimizers.services import (
    baseline_epoch,
    evaluate,
    gsadmm_epoch,
    gsam_epoch,
    init_aux,
    p_gradient_gsadmm,
    p_gradient_gsam,
    update_duals,
    update_q_closed_form,
    weight_gradients,
)
from tensor.schemas import RngState
from tensor.services import frobenius_sq
from verify.schemas import BoundReport, CheckResult, VerifyReport

logger = logging.getLogger(__name__)

FD_STEP = 1e-5
KINK_MARGIN = 1e-3
GRADIENT_TOLERANCE = 1e-6
Q_TOLERANCE = 1e-8
REDUCTION_TOLERANCE = 1e-12
LEAST_SQUARES_INFLATION = 1.1
SUITE_CHECKS = ("q_argmin", "gradients", "theorem1", "sgd_reduction", "dual_residual")

# =============================================================================
# GRADIENT CHECKING
# =============================================================================

def grad_check(
    objective: Callable[[np.ndarray], float],
    point: np.ndarray,
    analytic: np.ndarray,
    step: float = FD_STEP,
    max_coordinates: int = 4096,
    probes: int = 16,
    rng: Optional[RngState] = None
) -> float:
    """Max over coordinates of |analytic − central difference| / max(1, |central difference|).

    Points with more than ``max_coordinates`` entries are probed along random
    unit directions instead of coordinate by coordinate.
    """
    x0 = np.array(point, dtype=np.float64)
    g = np.asarray(analytic, dtype=np.float64).reshape(-1)
    shape = x0.shape
    flat = x0.reshape(-1)

    def _value(x: np.ndarray) -> float:
        value = float(objective(x.reshape(shape)))
        if not np.isfinite(value):
            raise EvaluationException(f"Objective is not finite near the checked point: {value}")
        return value

    _value(flat)
    worst = 0.0
    if flat.size <= max_coordinates:
        for i in range(flat.size):
            plus, minus = flat.copy(), flat.copy()
            plus[i] += step
            minus[i] -= step
            numeric = (_value(plus) - _value(minus)) / (2.0 * step)
            worst = max(worst, abs(g[i] - numeric) / max(1.0, abs(numeric)))
        return worst
    rng = rng or RngState(0)
    for _ in range(probes):
        direction = rng.normal(flat.shape)
        direction /= np.linalg.norm(direction)
        numeric = (_value(flat + step * direction) - _value(flat - step * direction)) / (2.0 * step)
        worst = max(worst, abs(float(g @ direction) - numeric) / max(1.0, abs(numeric)))
    return worst


def subnetwork_vector(sub: Subnetwork) -> np.ndarray:
    return np.concatenate([np.concatenate([layer.weight.ravel(), layer.bias]) for layer in sub.layers])


def subnetwork_from_vector(sub: Subnetwork, vector: np.ndarray) -> Subnetwork:
    layers, offset = [], 0
    for layer in sub.layers:
        w_size, b_size = layer.weight.size, layer.bias.size
        weight = vector[offset:offset + w_size].reshape(layer.weight.shape)
        bias = vector[offset + w_size:offset + w_size + b_size]
        layers.append(DenseLayer(weight=weight, bias=bias, activation=layer.activation))
        offset += w_size + b_size
    return Subnetwork(layers=layers)


def gradient_vector(grads) -> np.ndarray:
    return np.concatenate([np.concatenate([grad.weight.ravel(), grad.bias]) for grad in grads])

# =============================================================================
# RANDOM INSTANCES
# =============================================================================

class Instance(BaseModel):
    """Small network with auxiliary state and labels on every row"""
    net: NetworkSpec
    aux: AuxState
    labels: np.ndarray
    hp: Hyperparams

    class Config:
        arbitrary_types_allowed = True


def _auxiliary_margin(net: NetworkSpec, points: Sequence[np.ndarray]) -> float:
    """Smallest ReLU margin of each subnetwork evaluated at its own auxiliary input"""
    return min(
        min_preactivation_margin(NetworkSpec(subnetworks=[sub], loss=net.loss), P)
        for sub, P in zip(net.subnetworks, points)
    )


def _jitter_biases(net: NetworkSpec, rng: RngState) -> NetworkSpec:
    subs = []
    for sub in net.subnetworks:
        layers = [
            layer.model_copy(update={"bias": rng.normal((layer.d_out,), scale=0.3)})
            for layer in sub.layers
        ]
        subs.append(Subnetwork(layers=layers))
    return net.with_subnetworks(subs)


def random_instance(
    rng: RngState,
    n: int,
    mode: AuxMode,
    loss: LossKind = LossKind.SOFTMAX_CROSS_ENTROPY,
    max_width: int = 8,
    rows: int = 4,
    noise: float = 0.3,
    margin: float = KINK_MARGIN
) -> Instance:
    """Random net with n subnetworks and perturbed auxiliary state, away from ReLU kinks"""
    for _ in range(500):
        classes = int(rng.integers(2, 5, ()))
        hidden = n + int(rng.integers(0, 2, ()))
        widths = [int(rng.integers(2, max_width + 1, ()))]
        widths += [int(w) for w in rng.integers(2, max_width + 1, (hidden,))]
        widths.append(classes)
        net = _jitter_biases(build_network(widths, rng, splits=n, loss=loss), rng)
        X = rng.uniform(0.0, 1.0, (rows, widths[0]))
        aux = init_aux(net, X, mode)
        p = [aux.p[0]] + [block + noise * rng.normal(block.shape) for block in aux.p[1:]]
        if mode is AuxMode.GSADMM:
            q = [block + noise * rng.normal(block.shape) for block in aux.q]
            u = [noise * rng.normal(block.shape) for block in aux.u]
            aux = AuxState(mode=mode, p=p, q=q, u=u)
        else:
            aux = AuxState(mode=mode, p=p)
        if min(_auxiliary_margin(net, aux.p), min_preactivation_margin(net, X)) <= margin:
            continue
        if loss is LossKind.SOFTMAX_CROSS_ENTROPY:
            labels = np.eye(classes)[rng.integers(0, classes, (rows,))]
        else:
            labels = rng.normal((rows, classes))
        hp = Hyperparams(
            alpha=float(rng.uniform(0.5, 2.0, ())),
            rho=float(rng.uniform(0.5, 2.0, ())),
            batch_size=rows
        )
        return Instance(net=net, aux=aux, labels=labels, hp=hp)
    raise EvaluationException("Could not draw an instance away from ReLU kinks")


def _with_p(aux: AuxState, l: int, block: np.ndarray) -> AuxState:
    p = list(aux.p)
    p[l] = block
    return AuxState(mode=aux.mode, p=p, q=list(aux.q), u=list(aux.u))


def instance_gradient_errors(inst: Instance) -> Dict[str, float]:
    """Max relative finite-difference error of every W and p gradient of one instance"""
    net, aux, Y, hp = inst.net, inst.aux, inst.labels, inst.hp
    idx = np.arange(aux.samples)
    b = aux.samples
    errors = {"w": 0.0, "p": 0.0}

    for l, sub in enumerate(net.subnetworks):
        P = aux.p[l]
        if l < net.n - 1:
            target = aux.q[l] if aux.mode is AuxMode.GSADMM else aux.p[l + 1]
            role = HiddenRole(alpha=hp.alpha, batch_rows=b)
            objective = lambda v, sub=sub, P=P, target=target: penalty_omega(
                subnetwork_from_vector(sub, v), P, target, hp.alpha, b
            )
        else:
            target = Y
            role = LastRole(loss=net.loss)
            objective = lambda v, sub=sub, P=P: loss_value(net.loss, forward(subnetwork_from_vector(sub, v), P), Y)
        analytic = gradient_vector(weight_gradients(sub, P, target, role))
        errors["w"] = max(errors["w"], grad_check(objective, subnetwork_vector(sub), analytic))

    for l in range(1, net.n):
        if aux.mode is AuxMode.GSADMM:
            analytic = p_gradient_gsadmm(net, l, aux.p, aux.q, aux.u, Y, hp)
            objective = lambda block, l=l: augmented_lagrangian(net, _with_p(aux, l, block), hp, idx, Y)
        else:
            analytic = p_gradient_gsam(net, l, aux.p, Y, hp)
            objective = lambda block, l=l: objective_F(net, _with_p(aux, l, block), hp, idx, Y)
        errors["p"] = max(errors["p"], grad_check(objective, aux.p[l], analytic))
    return errors

# =============================================================================
# q CLOSED FORM
# =============================================================================

def q_argmin_oracle(f: float, p_next: float, u: float, alpha: float, rho: float, m: float, tolerance: float = 1e-13) -> float:
    """Minimiser of φ(q) = (α/2m)(q−f)² + u(p_next−q) + (ρ/2)(p_next−q)² by ternary search"""
    def _difference(a: float, b: float) -> float:
        # φ(a) − φ(b) in factored form
        return (a - b) * ((alpha / (2.0 * m)) * (a + b - 2.0 * f) - u - 0.5 * rho * (2.0 * p_next - a - b))

    reach = abs(u) * (1.0 / rho + m / alpha) + 1.0
    lo, hi = min(f, p_next) - reach, max(f, p_next) + reach
    for _ in range(500):
        if hi - lo <= tolerance * max(1.0, abs(lo), abs(hi)):
            break
        third = (hi - lo) / 3.0
        left, right = lo + third, hi - third
        if _difference(left, right) > 0.0:
            lo = left
        else:
            hi = right
    return 0.5 * (lo + hi)


def q_closed_form_scalar(f: float, p_next: float, u: float, alpha: float, rho: float, m: float) -> float:
    sub = Subnetwork(layers=[DenseLayer(weight=[[0.0]], bias=[f], activation=Activation.IDENTITY)])
    hp = Hyperparams(alpha=alpha, rho=rho)
    return float(update_q_closed_form(sub, np.zeros((1, 1)), np.array([[p_next]]), np.array([[u]]), hp, m)[0, 0])


def q_argmin_sweep(count: int, rng: RngState) -> float:
    worst = 0.0
    for _ in range(count):
        f, p_next, u = (float(v) for v in rng.normal((3,), scale=2.0))
        alpha, rho = (float(v) for v in rng.uniform(0.1, 10.0, (2,)))
        m = float(rng.integers(1, 200, ()))
        worst = max(worst, abs(q_argmin_oracle(f, p_next, u, alpha, rho, m) - q_closed_form_scalar(f, p_next, u, alpha, rho, m)))
    return worst

# =============================================================================
# APPROXIMATION-ERROR BOUND
# =============================================================================

def theorem1_rhs(h_n: float, residual_norms: Sequence[float], hidden_factors: Sequence[float]) -> float:
    """H_n Σ_l ‖r_l‖ Π_{j>l} H_j over the hidden subnetworks"""
    total = 0.0
    for l, norm in enumerate(residual_norms):
        total += norm * float(np.prod(hidden_factors[l + 1:]))
    return h_n * total


def loss_lipschitz_bound(net: NetworkSpec, composed: np.ndarray, p_n: np.ndarray, Y: np.ndarray) -> float:
    """Lipschitz constant of p ↦ R(W_n, p; y) on the segment between the two inputs"""
    sub = net.subnetworks[-1]
    h_sub = lipschitz_upper_bound(sub)
    b = composed.shape[0]
    if net.loss is LossKind.SOFTMAX_CROSS_ENTROPY:
        # ‖softmax − onehot‖ ≤ √2 per row under the mean reduction
        return np.sqrt(2.0) * h_sub / np.sqrt(b)
    # gradient (f(p) − y)/b grows along the segment by at most H·length
    reach = max(
        np.sqrt(frobenius_sq(forward(sub, composed) - Y)),
        np.sqrt(frobenius_sq(forward(sub, p_n) - Y))
    ) + 0.5 * h_sub * np.sqrt(frobenius_sq(composed - p_n))
    return LEAST_SQUARES_INFLATION * h_sub * reach / b


def check_theorem1(net: NetworkSpec, aux: AuxState, Y: np.ndarray, h_n_bound: Optional[float] = None) -> BoundReport:
    """Compare the exact loss gap with the bound; r_l = p_{l+1} − f_l(W_l, p_l)"""
    if net.n == 1:
        return BoundReport(lhs=0.0, rhs=0.0, holds=True)
    last = net.subnetworks[-1]
    composed = compose(net, aux.p[0], upto=net.n - 1)
    lhs = abs(loss_value(net.loss, forward(last, composed), Y) - loss_value(net.loss, forward(last, aux.p[-1]), Y))
    norms = [
        float(np.sqrt(frobenius_sq(aux.p[l + 1] - forward(net.subnetworks[l], aux.p[l]))))
        for l in range(net.n - 1)
    ]
    hidden = [lipschitz_upper_bound(sub) for sub in net.subnetworks[:-1]]
    h_n = h_n_bound if h_n_bound is not None else loss_lipschitz_bound(net, composed, aux.p[-1], Y)
    rhs = theorem1_rhs(h_n, norms, hidden)
    coupling = []
    if aux.mode is AuxMode.GSADMM:
        coupling = [float(np.sqrt(frobenius_sq(aux.p[l + 1] - aux.q[l]))) for l in range(net.n - 1)]
    return BoundReport(
        lhs=lhs,
        rhs=rhs,
        residual_norms=norms,
        lipschitz_factors=hidden + [h_n],
        coupling_residuals=coupling,
        holds=lhs <= rhs + 1e-12 * max(1.0, rhs)
    )


def scaled_chain(net: NetworkSpec, X: np.ndarray, offsets: Sequence[np.ndarray], t: float) -> AuxState:
    """gsAM state with p_{l+1} = f_l(p_l) + t·offset_l"""
    p = [X]
    for sub, offset in zip(net.subnetworks[:-1], offsets):
        p.append(forward(sub, p[-1]) + t * offset)
    return AuxState(mode=AuxMode.GSAM, p=p)


def theorem1_sweep(count: int, rng: RngState) -> Tuple[float, int, float]:
    """Worst lhs/rhs ratio, violation count and worst linearity error over random instances"""
    worst_ratio, violations, linearity = 0.0, 0, 0.0
    for i in range(count):
        n = 2 + i % 3
        loss = LossKind.SOFTMAX_CROSS_ENTROPY if i % 2 == 0 else LossKind.LEAST_SQUARES
        mode = AuxMode.GSADMM if i % 4 < 2 else AuxMode.GSAM
        inst = random_instance(rng, n, mode, loss=loss, margin=0.0)
        report = check_theorem1(inst.net, inst.aux, inst.labels)
        violations += int(not report.holds)
        if report.rhs > 0:
            worst_ratio = max(worst_ratio, report.lhs / report.rhs)
        if loss is LossKind.SOFTMAX_CROSS_ENTROPY:
            offsets = [rng.normal(block.shape, scale=0.2) for block in inst.aux.p[1:]]
            base = check_theorem1(inst.net, scaled_chain(inst.net, inst.aux.p[0], offsets, 1.0), inst.labels).rhs
            for t in (2.0, 10.0):
                scaled = check_theorem1(inst.net, scaled_chain(inst.net, inst.aux.p[0], offsets, t), inst.labels).rhs
                linearity = max(linearity, abs(scaled - t * base) / max(t * base, 1e-300))
    return worst_ratio, violations, linearity

# =============================================================================
# REDUCTIONS
# =============================================================================

def _max_weight_gap(a: NetworkSpec, b: NetworkSpec) -> float:
    gap = 0.0
    for sub_a, sub_b in zip(a.subnetworks, b.subnetworks):
        for la, lb in zip(sub_a.layers, sub_b.layers):
            gap = max(gap, float(np.abs(la.weight - lb.weight).max()), float(np.abs(la.bias - lb.bias).max()))
    return gap


def check_sgd_reduction(
    seed: int,
    dataset: Dataset,
    depth: int,
    tau1: float,
    epochs: int = 20,
    width: int = 16,
    batch_size: int = 32,
    baseline_seed: Optional[int] = None
) -> float:
    """Max |W_gsAM − W_SGD| after running gsAM with n = 1 and SGD with lr 1/τ1 side by side"""
    widths = [dataset.features] + [width] * depth + [dataset.classes]
    hp = Hyperparams(tau1=tau1, batch_size=min(batch_size, dataset.samples), inner_opt=InnerOptimizer.SGD)
    gsam_net = build_network(widths, RngState(seed), splits=1)
    sgd_net = build_network(widths, RngState(seed), splits=1)
    aux = init_aux(gsam_net, dataset.inputs, AuxMode.GSAM)
    gsam_state = TrainState.start(seed, 1)
    sgd_state = TrainState.start(seed if baseline_seed is None else baseline_seed, 1)
    for _ in range(epochs):
        gsam_net, aux, gsam_state = gsam_epoch(gsam_net, aux, hp, gsam_state, dataset)
        sgd_net, sgd_state = baseline_epoch(sgd_net, hp, sgd_state, dataset, InnerOptimizer.SGD, lr=hp.w_lr)
    return _max_weight_gap(gsam_net, sgd_net)


def penalty_tracking_gap(
    seed: int,
    dataset: Dataset,
    alpha: float = 1e6,
    epochs: int = 50,
    widths: Optional[Sequence[int]] = None,
    batch_size: int = 120
) -> float:
    """Relative train-loss gap between gsADMM (n = 2, large α) and SGD; inf if gsADMM diverges"""
    widths = list(widths or [dataset.features, 32, 32, 32, dataset.classes])
    hp = Hyperparams(alpha=alpha, batch_size=min(batch_size, dataset.samples))
    split_net = build_network(widths, RngState(seed), splits=2)
    sgd_net = build_network(widths, RngState(seed), splits=1)
    aux = init_aux(split_net, dataset.inputs)
    split_state, sgd_state = TrainState.start(seed, 2), TrainState.start(seed, 1)
    try:
        for _ in range(epochs):
            split_net, aux, split_state = gsadmm_epoch(split_net, aux, hp, split_state, dataset)
            sgd_net, sgd_state = baseline_epoch(sgd_net, hp, sgd_state, dataset, lr=hp.w_lr)
    except SubsplitException as error:
        logger.warning("Penalty tracking run diverged: %s", error)
        return float("inf")
    split_loss, _ = evaluate(split_net, dataset.inputs, dataset.labels_onehot)
    sgd_loss, _ = evaluate(sgd_net, dataset.inputs, dataset.labels_onehot)
    return abs(split_loss - sgd_loss) / max(sgd_loss, 1e-12)


def dual_residual_trace(
    iterations: int = 30,
    dual_update: Callable[[np.ndarray, np.ndarray, np.ndarray, float], np.ndarray] = update_duals
) -> List[float]:
    """|p_2 − q_1| per iteration on a scalar two-subnetwork instance with exact p steps.

    f_1(p_1) = 0, R(p_2) = ½(p_2 − 1)², α = ρ = m = 1.
    """
    hp = Hyperparams(alpha=1.0, rho=1.0)
    first = Subnetwork(layers=[DenseLayer(weight=[[0.0]], bias=[0.0], activation=Activation.IDENTITY)])
    p_1, y = np.ones((1, 1)), np.ones((1, 1))
    q, u = np.zeros((1, 1)), np.zeros((1, 1))
    residuals = []
    for _ in range(iterations):
        p_2 = (y - u + hp.rho * q) / (1.0 + hp.rho)
        q = update_q_closed_form(first, p_1, p_2, u, hp, 1.0)
        u = dual_update(u, p_2, q, hp.rho)
        residuals.append(float(abs(p_2 - q)[0, 0]))
    return residuals


def dual_residual_holds(residuals: Sequence[float]) -> bool:
    non_increasing = all(b <= a + 1e-15 for a, b in zip(residuals, residuals[1:]))
    return non_increasing and residuals[-1] <= 1e-6 * max(1.0, residuals[0])

# =============================================================================
# SUITE
# =============================================================================

def _timed_check(name: str, tolerance: float, fn: Callable[[], Tuple[float, bool, int, Optional[str]]]) -> CheckResult:
    start = perf_counter()
    max_error, passed, instances, detail = fn()
    result = CheckResult(
        name=name,
        max_error=max_error,
        tolerance=tolerance,
        passed=passed,
        seconds=perf_counter() - start,
        instances=instances,
        detail=detail
    )
    log = logger.info if passed else logger.error
    log("check %s: max_error=%.3e tolerance=%.1e %s", name, max_error, tolerance, "PASS" if passed else "FAIL")
    return result


def run_suite(
    checks: Optional[Sequence[str]] = None,
    seed: int = 0,
    dual_update: Callable[[np.ndarray, np.ndarray, np.ndarray, float], np.ndarray] = update_duals
) -> VerifyReport:
    """Run the selected oracles (all when ``checks`` is None, none when empty)"""
    selected = list(SUITE_CHECKS) if checks is None else list(checks)
    unknown = [name for name in selected if name not in SUITE_CHECKS]
    if unknown:
        raise ParameterException(f"Unknown checks {unknown}; available: {list(SUITE_CHECKS)}", error_code="UNKNOWN_CHECK")
    rng = RngState(seed)
    report = VerifyReport()

    def _q_argmin():
        worst = q_argmin_sweep(1000, rng.spawn(1))
        return worst, worst < Q_TOLERANCE, 1000, None

    def _gradients():
        stream = rng.spawn(2)
        worst = 0.0
        for i in range(50):
            mode = AuxMode.GSADMM if i % 2 == 0 else AuxMode.GSAM
            errors = instance_gradient_errors(random_instance(stream, 1 + i % 4, mode))
            worst = max(worst, *errors.values())
        return worst, worst < GRADIENT_TOLERANCE, 50, None

    def _theorem1():
        ratio, violations, linearity = theorem1_sweep(100, rng.spawn(3))
        detail = f"worst lhs/rhs={ratio:.3e}, violations={violations}, linearity error={linearity:.1e}"
        return linearity, violations == 0 and linearity < 1e-9, 100, detail

    def _sgd_reduction():
        data = synthetic_blobs(3, 5, 40, 4.0, rng.spawn(4))
        divergence = check_sgd_reduction(seed, data, depth=2, tau1=100.0)
        return divergence, divergence < REDUCTION_TOLERANCE, 1, None

    def _dual_residual():
        residuals = dual_residual_trace(dual_update=dual_update)
        return residuals[-1], dual_residual_holds(residuals), 1, f"first={residuals[0]:.3e}"

    runners = {
        "q_argmin": (Q_TOLERANCE, _q_argmin),
        "gradients": (GRADIENT_TOLERANCE, _gradients),
        "theorem1": (1e-9, _theorem1),
        "sgd_reduction": (REDUCTION_TOLERANCE, _sgd_reduction),
        "dual_residual": (1e-6, _dual_residual),
    }
    for name in selected:
        tolerance, fn = runners[name]
        report.checks.append(_timed_check(name, tolerance, fn))
    return report
