"""
Tests for the gsADMM / gsAM update equations, epochs and baselines.
"""

import numpy as np
import pytest
from pydantic import ValidationError

from core.exceptions import ContractViolationException, DimensionException, ModeException, ParameterException
from dataio.schemas import Dataset
from network.schemas import Activation, DenseLayer, LossKind, NetworkSpec, Subnetwork
from network.services import build_network, compose, forward, loss_and_grad, loss_value, min_preactivation_margin, vjp_input
from optimizers.objectives import augmented_lagrangian, objective_F, penalty_omega
from optimizers.schemas import AuxMode, AuxState, HiddenRole, Hyperparams, InnerOptimizer, Sampling, TrainState
from optimizers.services import (
    baseline_epoch,
    constraint_residual,
    epoch_batches,
    evaluate,
    full_objective,
    gsadmm_epoch,
    gsadmm_iteration,
    gsam_epoch,
    gsam_iteration,
    init_aux,
    network_gradients,
    p_gradient_gsadmm,
    p_gradient_gsam,
    sample_batch,
    sgd_step,
    update_duals,
    update_p_gsadmm,
    update_p_gsam,
    update_q_closed_form,
    update_weights,
    weight_gradients,
)
from runtime.services import PhaseRuntime
from tensor.schemas import RngState
from verify.services import gradient_vector, grad_check, random_instance, subnetwork_from_vector, subnetwork_vector

from tests.conftest import linear_sub


def max_weight_gap(a: NetworkSpec, b: NetworkSpec) -> float:
    gaps = [
        max(np.abs(la.weight - lb.weight).max(), np.abs(la.bias - lb.bias).max())
        for sa, sb in zip(a.subnetworks, b.subnetworks)
        for la, lb in zip(sa.layers, sb.layers)
    ]
    return float(max(gaps))


class TestObjectives:

    def test_penalty_zero_at_forward_output(self, small_net):
        P = RngState(0).uniform(0.0, 1.0, (4, 5))
        sub = small_net.subnetworks[0]
        assert penalty_omega(sub, P, forward(sub, P), alpha=1.0, m_scale=4) == 0.0

    def test_penalty_scalar(self):
        sub = Subnetwork(layers=[DenseLayer(weight=np.zeros((2, 1)), bias=np.zeros(2), activation=Activation.IDENTITY)])
        assert penalty_omega(sub, np.zeros((1, 1)), np.array([[1.0, 1.0]]), alpha=2.0, m_scale=1) == 2.0

    def test_penalty_shape_mismatch(self, small_net):
        with pytest.raises(DimensionException):
            penalty_omega(small_net.subnetworks[0], np.zeros((2, 5)), np.zeros((2, 1)), 1.0, 2)

    def test_feasible_lagrangian_is_composed_loss(self, small_net, blobs):
        aux = init_aux(small_net, blobs.inputs)
        idx = np.arange(blobs.samples)
        composed = loss_value(small_net.loss, compose(small_net, blobs.inputs), blobs.labels_onehot)
        assert augmented_lagrangian(small_net, aux, Hyperparams(), idx, blobs.labels_onehot) == pytest.approx(composed, abs=1e-12)
        gsam = init_aux(small_net, blobs.inputs, AuxMode.GSAM)
        assert objective_F(small_net, gsam, Hyperparams(), idx, blobs.labels_onehot) == pytest.approx(composed, abs=1e-12)

    def test_lagrangian_term_by_term(self, small_net, blobs):
        rng = RngState(4)
        aux = init_aux(small_net, blobs.inputs)
        aux = AuxState(
            mode=aux.mode,
            p=[aux.p[0], aux.p[1] + rng.normal(aux.p[1].shape)],
            q=[aux.q[0] + rng.normal(aux.q[0].shape)],
            u=[rng.normal(aux.u[0].shape)]
        )
        hp = Hyperparams(alpha=1.5, rho=0.7)
        idx = np.array([3, 0, 9, 4])
        p0, p1, q0, u0 = aux.p[0][idx], aux.p[1][idx], aux.q[0][idx], aux.u[0][idx]
        first, last = small_net.subnetworks
        expected = (
            loss_value(small_net.loss, forward(last, p1), blobs.labels_onehot[idx])
            + hp.alpha / (2 * 4) * np.sum((q0 - forward(first, p0)) ** 2)
            + np.sum(u0 * (p1 - q0))
            + hp.rho / 2 * np.sum((p1 - q0) ** 2)
        )
        value = augmented_lagrangian(small_net, aux, hp, idx, blobs.labels_onehot[idx])
        assert value == pytest.approx(expected, rel=1e-10)

    def test_lagrangian_needs_gsadmm_state(self, small_net, blobs):
        gsam = init_aux(small_net, blobs.inputs, AuxMode.GSAM)
        with pytest.raises(ModeException):
            augmented_lagrangian(small_net, gsam, Hyperparams(), [0], blobs.labels_onehot[:1])

    def test_single_subnetwork_objective_is_loss(self, blobs):
        net = build_network([5, 4, 3], RngState(1), splits=1)
        aux = init_aux(net, blobs.inputs, AuxMode.GSAM)
        idx = np.arange(blobs.samples)
        expected = loss_value(net.loss, compose(net, blobs.inputs), blobs.labels_onehot)
        assert objective_F(net, aux, Hyperparams(), idx, blobs.labels_onehot) == pytest.approx(expected, abs=1e-12)


class TestSampling:

    def test_full_batch_is_permutation(self):
        assert sorted(sample_batch(RngState(0), 10, 10).tolist()) == list(range(10))

    def test_single_index(self):
        (i,) = sample_batch(RngState(0), 10, 1)
        assert 0 <= i < 10

    def test_batch_larger_than_dataset(self):
        with pytest.raises(ParameterException):
            sample_batch(RngState(0), 5, 6)

    def test_uniform_frequencies(self):
        rng = RngState(123)
        counts = np.zeros(10)
        draws = 100_000
        for _ in range(draws // 5):
            counts[sample_batch(rng, 10, 5)] += 1
        expected = draws / 10
        sigma = np.sqrt(draws * 0.1 * 0.9)
        assert np.all(np.abs(counts - expected) < 3 * sigma)

    def test_shuffle_sampling_covers_everything(self):
        batches = epoch_batches(RngState(2), 25, Hyperparams(batch_size=10, sampling=Sampling.SHUFFLE))
        assert [len(b) for b in batches] == [10, 10, 5]
        assert sorted(np.concatenate(batches).tolist()) == list(range(25))

    @pytest.mark.parametrize("sampling", [Sampling.SINGLE, Sampling.SHUFFLE])
    def test_epoch_batch_larger_than_dataset(self, sampling):
        with pytest.raises(ParameterException):
            epoch_batches(RngState(0), 25, Hyperparams(batch_size=26, sampling=sampling))
        assert len(epoch_batches(RngState(0), 25, Hyperparams(batch_size=25, sampling=sampling))[0]) == 25


class TestWeightUpdate:

    def test_scalar_chain(self):
        sub = linear_sub(1.0)
        hp = Hyperparams(alpha=1.0, tau1=1.0)
        new, _ = update_weights(sub, np.array([[1.0]]), np.array([[2.0]]), HiddenRole(alpha=1.0, batch_rows=1), hp)
        assert new.layers[0].weight.tolist() == [[2.0]]
        assert new.layers[0].bias.tolist() == [1.0]

    def test_zero_gradient_keeps_weights(self, small_net):
        sub = small_net.subnetworks[0]
        P = RngState(0).uniform(0.0, 1.0, (4, 5))
        new, _ = update_weights(sub, P, forward(sub, P), HiddenRole(alpha=1.0, batch_rows=4), Hyperparams())
        for old, layer in zip(sub.layers, new.layers):
            assert np.array_equal(old.weight, layer.weight)

    def test_sgd_is_w_minus_g_over_tau(self, small_net):
        sub = small_net.subnetworks[0]
        rng = RngState(5)
        P, T = rng.uniform(0.0, 1.0, (4, 5)), rng.normal((4, 6))
        hp = Hyperparams(tau1=40.0)
        role = HiddenRole(alpha=1.0, batch_rows=4)
        grads = weight_gradients(sub, P, T, role)
        new, _ = update_weights(sub, P, T, role, hp)
        for old, grad, layer in zip(sub.layers, grads, new.layers):
            assert np.array_equal(layer.weight, old.weight - hp.w_lr * grad.weight)
            assert np.array_equal(layer.bias, old.bias - hp.w_lr * grad.bias)

    def test_adam_moves_against_gradient(self, small_net):
        sub = small_net.subnetworks[0]
        rng = RngState(6)
        P, T = rng.uniform(0.0, 1.0, (4, 5)), rng.normal((4, 6))
        role = HiddenRole(alpha=1.0, batch_rows=4)
        hp = Hyperparams(inner_opt=InnerOptimizer.ADAM, tau1=1000.0)
        before = penalty_omega(sub, P, T, 1.0, 4)
        new, moments = update_weights(sub, P, T, role, hp)
        assert moments.step == 1
        assert penalty_omega(new, P, T, 1.0, 4) < before

    def test_target_shape_checked(self, small_net):
        with pytest.raises(DimensionException):
            update_weights(small_net.subnetworks[0], np.zeros((2, 5)), np.zeros((2, 2)), HiddenRole(alpha=1.0, batch_rows=2), Hyperparams())


class TestAuxiliaryUpdates:

    def test_q_closed_form_example(self):
        sub = Subnetwork(layers=[DenseLayer(weight=[[0.0]], bias=[2.0], activation=Activation.IDENTITY)])
        q = update_q_closed_form(sub, np.zeros((1, 1)), np.array([[4.0]]), np.zeros((1, 1)), Hyperparams(), 1)
        assert q.tolist() == [[3.0]]

    @pytest.mark.parametrize("alpha,rho,m", [(1.0, 1.0, 1), (0.3, 5.0, 120), (7.0, 0.2, 16)])
    def test_q_fixed_point(self, alpha, rho, m):
        sub = Subnetwork(layers=[DenseLayer(weight=[[0.0]], bias=[1.25], activation=Activation.IDENTITY)])
        q = update_q_closed_form(sub, np.zeros((1, 1)), np.array([[1.25]]), np.zeros((1, 1)), Hyperparams(alpha=alpha, rho=rho), m)
        assert q[0, 0] == pytest.approx(1.25, abs=1e-14)

    def test_q_is_stationary(self):
        rng = RngState(8)
        for _ in range(100):
            f, p_next, u = rng.normal((3,))
            alpha, rho = rng.uniform(0.1, 5.0, (2,))
            m = float(rng.integers(1, 50, (1,))[0])
            sub = Subnetwork(layers=[DenseLayer(weight=[[0.0]], bias=[f], activation=Activation.IDENTITY)])
            q = update_q_closed_form(sub, np.zeros((1, 1)), np.array([[p_next]]), np.array([[u]]), Hyperparams(alpha=alpha, rho=rho), m)[0, 0]
            derivative = (alpha / m) * (q - f) - u - rho * (p_next - q)
            assert abs(derivative) < 1e-8

    def test_duals(self):
        assert update_duals(np.array([[0.5]]), np.array([[3.0]]), np.array([[1.0]]), 1.0).tolist() == [[2.5]]
        u = np.array([[0.25]])
        assert np.array_equal(update_duals(u, np.array([[2.0]]), np.array([[2.0]]), 3.0), u)

    def test_duals_additive(self):
        rng = RngState(9)
        u, p, q, p2, q2 = (rng.normal((3, 2)) for _ in range(5))
        twice = update_duals(update_duals(u, p, q, 0.5), p2, q2, 0.5)
        once = update_duals(u, p + p2, q + q2, 0.5)
        assert np.allclose(twice, once, rtol=0, atol=1e-12)

    def test_q_step_never_increases_lagrangian(self):
        rng = RngState(21)
        for _ in range(100):
            inst = random_instance(rng, 3, AuxMode.GSADMM)
            net, aux, hp, Y = inst.net, inst.aux, inst.hp, inst.labels
            idx = np.arange(aux.samples)
            q = [
                update_q_closed_form(net.subnetworks[l], aux.p[l], aux.p[l + 1], aux.u[l], hp, aux.samples)
                for l in range(net.n - 1)
            ]
            before = augmented_lagrangian(net, aux, hp, idx, Y)
            after = augmented_lagrangian(net, AuxState(mode=aux.mode, p=aux.p, q=q, u=aux.u), hp, idx, Y)
            assert after <= before + 1e-12 * max(1.0, abs(before))

    def test_matched_coupling_scale(self, small_net, blobs):
        # with ρ = α/b the q and u steps leave q = f(p_l) + b·u/α
        rng = RngState(22)
        b, alpha = 12, 3.0
        hp = Hyperparams(alpha=alpha, rho=alpha / b)
        sub = small_net.subnetworks[0]
        P = blobs.inputs[:b]
        P_next, U = rng.normal((b, 6)), rng.normal((b, 6))
        q = update_q_closed_form(sub, P, P_next, U, hp, b)
        u = update_duals(U, P_next, q, hp.rho)
        assert np.allclose(q, forward(sub, P) + b * u / alpha, rtol=0, atol=1e-12)

    def test_p_stationary_point(self):
        net = NetworkSpec(subnetworks=[linear_sub(2.0), linear_sub(1.0)], loss=LossKind.LEAST_SQUARES)
        X = np.array([[1.5]])
        aux = init_aux(net, X)
        Y = forward(net.subnetworks[1], aux.p[1])
        updated = update_p_gsadmm(net, aux, Hyperparams(), [0], Y)
        assert np.array_equal(updated[1], aux.p[1])

    def test_coupling_gradient(self, small_net, blobs):
        rng = RngState(10)
        aux = init_aux(small_net, blobs.inputs)
        p = [aux.p[0][:4], aux.p[1][:4] + rng.normal((4, 6))]
        q = [aux.q[0][:4]]
        u = [rng.normal((4, 6))]
        Y = blobs.labels_onehot[:4]
        hp = Hyperparams(rho=2.0)
        last = small_net.subnetworks[1]
        _, G = loss_and_grad(small_net.loss, forward(last, p[1]), Y)
        coupling = p_gradient_gsadmm(small_net, 1, p, q, u, Y, hp) - vjp_input(last, p[1], G)
        assert np.allclose(coupling, u[0] + 2.0 * (p[1] - q[0]), rtol=0, atol=1e-12)

    def test_p_1_is_never_updated(self, small_net, blobs):
        aux = init_aux(small_net, blobs.inputs)
        with pytest.raises(ContractViolationException):
            update_p_gsadmm(small_net, aux, Hyperparams(), [0, 1], blobs.labels_onehot[:2], layers=[0])
        with pytest.raises(ContractViolationException):
            update_p_gsam(small_net, init_aux(small_net, blobs.inputs, AuxMode.GSAM), Hyperparams(), [0], blobs.labels_onehot[:1], layers=[0])

    def test_gsam_scalar_gradient(self, scalar_chain):
        p = [np.array([[0.7]]), np.array([[1.1]]), np.array([[-0.4]])]
        Y = np.array([[0.3]])
        alpha = 1.7
        got = p_gradient_gsam(scalar_chain, 1, p, Y, Hyperparams(alpha=alpha))
        expected = alpha * (1.1 - 2.0 * 0.7) - alpha * 0.5 * (-0.4 - 0.5 * 1.1)
        assert got[0, 0] == pytest.approx(expected, abs=1e-14)

    def test_gsam_stationary_chain(self, scalar_chain):
        X = np.array([[0.9]])
        aux = init_aux(scalar_chain, X, AuxMode.GSAM)
        Y = compose(scalar_chain, X)
        updated = update_p_gsam(scalar_chain, aux, Hyperparams(), [0], Y)
        assert np.array_equal(updated[1], aux.p[1]) and np.array_equal(updated[2], aux.p[2])

    def test_init_aux_is_feasible(self, small_net, blobs):
        aux = init_aux(small_net, blobs.inputs)
        assert constraint_residual(small_net, aux) == 0.0
        assert penalty_omega(small_net.subnetworks[0], aux.p[0], aux.q[0], 1.0, blobs.samples) == 0.0
        assert not aux.u[0].any()

    def test_init_aux_checks_width(self, small_net):
        with pytest.raises(DimensionException):
            init_aux(small_net, np.zeros((3, 4)))

    def test_gsam_state_has_no_duals(self, small_net, blobs):
        aux = init_aux(small_net, blobs.inputs, AuxMode.GSAM)
        assert aux.q == [] and aux.u == []
        with pytest.raises(ValidationError):
            AuxState(mode=AuxMode.GSAM, p=aux.p, q=[aux.p[1]], u=[aux.p[1]])


class TestEpochs:

    def test_gsadmm_is_deterministic(self, small_net, blobs, fast_hp):
        runs = []
        for _ in range(2):
            net, aux, state = small_net, init_aux(small_net, blobs.inputs), TrainState.start(5, 2)
            for _ in range(3):
                net, aux, state = gsadmm_epoch(net, aux, fast_hp, state, blobs)
            runs.append((net, aux, state))
        (net_a, aux_a, state_a), (net_b, aux_b, state_b) = runs
        assert max_weight_gap(net_a, net_b) == 0.0
        assert all(np.array_equal(a, b) for a, b in zip(aux_a.p + aux_a.q + aux_a.u, aux_b.p + aux_b.q + aux_b.u))
        assert state_a.k == state_b.k == 3

    def test_gsadmm_keeps_training_input(self, small_net, blobs, fast_hp):
        aux = init_aux(small_net, blobs.inputs)
        _, new_aux, _ = gsadmm_epoch(small_net, aux, fast_hp, TrainState.start(0, 2), blobs)
        assert np.array_equal(new_aux.p[0], blobs.inputs)

    def test_worker_count_does_not_change_results(self, small_net, blobs, fast_hp):
        outcomes = []
        for workers in (1, 2):
            with PhaseRuntime(workers) as runtime:
                net, aux, state = small_net, init_aux(small_net, blobs.inputs), TrainState.start(3, 2)
                for _ in range(2):
                    net, aux, state = gsadmm_epoch(net, aux, fast_hp, state, blobs, runtime)
            outcomes.append((net, aux))
        assert max_weight_gap(outcomes[0][0], outcomes[1][0]) == 0.0
        assert all(np.array_equal(a, b) for a, b in zip(outcomes[0][1].p, outcomes[1][1].p))

    @pytest.mark.parametrize("iteration,mode", [(gsadmm_iteration, AuxMode.GSADMM), (gsam_iteration, AuxMode.GSAM)])
    def test_permuting_samples_permutes_outputs(self, small_net, blobs, fast_hp, iteration, mode):
        rng = RngState(17)
        perm = rng.permutation(blobs.samples)
        inverse = np.argsort(perm)
        aux = init_aux(small_net, blobs.inputs, mode)
        shuffled = AuxState(
            mode=mode,
            p=[block[perm] for block in aux.p],
            q=[block[perm] for block in aux.q],
            u=[block[perm] for block in aux.u]
        )
        Y = blobs.labels_onehot
        idx = sample_batch(RngState(5), blobs.samples, fast_hp.batch_size)
        with PhaseRuntime(1) as runtime:
            net_a, aux_a, _ = iteration(small_net, aux, fast_hp, TrainState.start(0, 2), Y, idx, runtime)
            net_b, aux_b, _ = iteration(small_net, shuffled, fast_hp, TrainState.start(0, 2), Y[perm], inverse[idx], runtime)
        assert max_weight_gap(net_a, net_b) == 0.0
        for a, b in zip(aux_a.p + aux_a.q + aux_a.u, aux_b.p + aux_b.q + aux_b.u):
            assert np.array_equal(a[perm], b)

    def test_gsam_needs_gsam_state(self, small_net, blobs, fast_hp):
        with pytest.raises(ModeException):
            gsam_epoch(small_net, init_aux(small_net, blobs.inputs), fast_hp, TrainState.start(0, 2), blobs)

    @pytest.mark.parametrize("epoch_fn,mode", [(gsadmm_epoch, AuxMode.GSADMM), (gsam_epoch, AuxMode.GSAM)])
    def test_single_subnetwork_matches_sgd(self, blobs, epoch_fn, mode):
        widths = [5, 6, 6, 3]
        hp = Hyperparams(batch_size=8, tau1=50.0)
        split = build_network(widths, RngState(2), splits=1)
        plain = build_network(widths, RngState(2), splits=1)
        aux = init_aux(split, blobs.inputs, mode)
        split_state, plain_state = TrainState.start(7, 1), TrainState.start(7, 1)
        for _ in range(10):
            split, aux, split_state = epoch_fn(split, aux, hp, split_state, blobs)
            plain, plain_state = baseline_epoch(plain, hp, plain_state, blobs, lr=hp.w_lr)
        assert max_weight_gap(split, plain) < 1e-12

    def test_scalar_gsadmm_by_hand(self):
        # one sample, two 1-D linear subnetworks, least squares toward y = 3
        net = NetworkSpec(subnetworks=[linear_sub(2.0), linear_sub(0.5)], loss=LossKind.LEAST_SQUARES)
        X, Y = np.array([[0.5]]), np.array([[3.0]])
        aux = init_aux(net, X)
        hp = Hyperparams(alpha=1.0, rho=1.0, tau1=10.0, tau2=10.0, batch_size=1)
        with PhaseRuntime(1) as runtime:
            new_net, new_aux, _ = gsadmm_iteration(net, aux, hp, TrainState.start(0, 2), Y, np.array([0]), runtime)

        # W: Ω is already zero for the first subnetwork; the last sees R = ½(0.5·1 − 3)²
        assert new_net.subnetworks[0].layers[0].weight[0, 0] == 2.0
        assert new_net.subnetworks[1].layers[0].weight[0, 0] == pytest.approx(0.75, abs=1e-15)
        assert new_net.subnetworks[1].layers[0].bias[0] == pytest.approx(0.25, abs=1e-15)
        # p: 1 − 0.1 · 0.75 · (0.75 + 0.25 − 3)
        assert new_aux.p[1][0, 0] == pytest.approx(1.15, abs=1e-14)
        # q: (α·f(p_1) + ρ·p_2) / (ρ + α), then u = p_2 − q
        assert new_aux.q[0][0, 0] == pytest.approx(1.075, abs=1e-14)
        assert new_aux.u[0][0, 0] == pytest.approx(0.075, abs=1e-14)


class TestBaselines:

    def test_network_gradients_match_finite_differences(self, blobs):
        X, Y = blobs.inputs[:6], blobs.labels_onehot[:6]
        seed = 0
        while True:
            net = build_network([5, 6, 6, 6, 3], RngState(seed), splits=2)
            if min_preactivation_margin(net, X) > 1e-3:
                break
            seed += 1

        _, grads = network_gradients(net, X, Y)
        for l, sub in enumerate(net.subnetworks):
            def objective(v, l=l, sub=sub):
                return loss_value(net.loss, compose(net.with_subnetwork(l, subnetwork_from_vector(sub, v)), X), Y)
            assert grad_check(objective, subnetwork_vector(sub), gradient_vector(grads[l])) < 1e-6

    def test_least_squares_converges(self):
        # y = 2x + 1 on three points, one identity layer
        X = np.array([[0.0], [0.5], [1.0]])
        labels = 2.0 * X + 1.0
        net = NetworkSpec(subnetworks=[linear_sub(0.0)], loss=LossKind.LEAST_SQUARES)
        for _ in range(1000):
            _, grads = network_gradients(net, X, labels)
            net = net.with_subnetwork(0, sgd_step(net.subnetworks[0], grads[0], 1.0))
        layer = net.subnetworks[0].layers[0]
        assert layer.weight[0, 0] == pytest.approx(2.0, abs=1e-6)
        assert layer.bias[0] == pytest.approx(1.0, abs=1e-6)

    def test_zero_gradient_batch(self):
        net = NetworkSpec(subnetworks=[linear_sub(1.0)], loss=LossKind.LEAST_SQUARES)
        X = np.array([[1.0], [1.0]])
        data = Dataset(name="fixed", inputs=X, labels_onehot=np.ones((2, 1)), labels_raw=[0, 0])
        new, state = baseline_epoch(net, Hyperparams(batch_size=2), TrainState.start(0, 1), data)
        assert new.subnetworks[0].layers[0].weight[0, 0] == 1.0
        assert state.k == 1

    def test_adam_baseline_lowers_loss(self, blobs):
        net = build_network([5, 8, 3], RngState(0))
        before, _ = evaluate(net, blobs.inputs, blobs.labels_onehot)
        state = TrainState.start(0, 1)
        hp = Hyperparams(batch_size=30)
        for _ in range(30):
            net, state = baseline_epoch(net, hp, state, blobs, InnerOptimizer.ADAM)
        after, _ = evaluate(net, blobs.inputs, blobs.labels_onehot)
        assert after < before


class TestEvaluation:

    def test_separated_logits(self):
        net = NetworkSpec(subnetworks=[Subnetwork(layers=[
            DenseLayer(weight=np.eye(2) * 10.0, bias=np.zeros(2), activation=Activation.IDENTITY)
        ])])
        _, accuracy = evaluate(net, np.eye(2), np.eye(2))
        assert accuracy == 1.0

    def test_ties_go_to_lowest_class(self):
        net = NetworkSpec(subnetworks=[Subnetwork(layers=[
            DenseLayer(weight=np.zeros((2, 1)), bias=np.zeros(2), activation=Activation.IDENTITY)
        ])])
        labels = np.array([[0.0, 1.0]] * 3)
        _, accuracy = evaluate(net, np.ones((3, 1)), labels)
        assert accuracy == 0.0

    def test_full_objective_after_init(self, small_net, blobs):
        aux = init_aux(small_net, blobs.inputs)
        loss, _ = evaluate(small_net, blobs.inputs, blobs.labels_onehot)
        assert full_objective(small_net, aux, Hyperparams(), blobs.labels_onehot) == pytest.approx(loss, abs=1e-12)
