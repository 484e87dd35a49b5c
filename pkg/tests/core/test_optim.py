"""
Test: Optimizers and Losses
Verifies SGD/Adam updates, decoupled weight decay and loss gradients
"""
import numpy as np
import pytest

from src.exceptions import ConfigError, NonFiniteError, ShapeError
from src.nn.losses import loss_and_grad
from src.nn.network import Gradients, build_network, dense_specs
from src.nn.optim import OptState, opt_step


def constant_grads(net, value):
    return Gradients(
        weights=[np.full_like(w, value) for w in net.weights],
        biases=[np.full_like(b, value) for b in net.biases]
    )


class TestOptimizers:

    def test_plain_sgd_step(self, small_net):
        """Verify SGD without momentum applies p <- p - lr * g"""
        before = [w.copy() for w in small_net.weights]
        opt = OptState.create(small_net, kind="sgd", learning_rate=0.1)
        opt_step(small_net, constant_grads(small_net, 2.0), opt)

        for w0, w1 in zip(before, small_net.weights):
            np.testing.assert_allclose(w1, w0 - 0.2, rtol=0, atol=1e-15)
        assert opt.step == 1
        print("✅ SGD step correct")

    def test_sgd_momentum_accumulates(self, small_net):
        """Verify the second momentum step moves by lr * (1 + mu) * g"""
        w0 = small_net.biases[0].copy()
        opt = OptState.create(small_net, kind="sgd", learning_rate=0.1, momentum=0.5)
        grads = constant_grads(small_net, 1.0)
        opt_step(small_net, grads, opt)
        opt_step(small_net, grads, opt)
        np.testing.assert_allclose(small_net.biases[0], w0 - 0.1 - 0.15, atol=1e-15)
        print("✅ Momentum accumulates")

    def test_adam_first_step_is_lr_sized(self, small_net):
        """Verify Adam's bias-corrected first step has magnitude close to lr"""
        before = small_net.biases[1].copy()
        opt = OptState.create(small_net, kind="adam", learning_rate=1e-3, eps=1e-8)
        opt_step(small_net, constant_grads(small_net, 0.5), opt)
        np.testing.assert_allclose(before - small_net.biases[1], 1e-3, rtol=1e-6)
        print("✅ Adam first step correct")

    def test_weight_decay_is_decoupled_and_skips_biases(self, small_net):
        """Verify zero gradients still shrink weights but not biases"""
        small_net.biases[0][:] = 1.0
        w0 = small_net.weights[0].copy()
        opt = OptState.create(small_net, kind="sgd", learning_rate=0.1, weight_decay=0.5)
        opt_step(small_net, constant_grads(small_net, 0.0), opt)

        np.testing.assert_allclose(small_net.weights[0], w0 * 0.95, atol=1e-15)
        assert (small_net.biases[0] == 1.0).all()
        print("✅ Weight decay decoupled")

    def test_pruned_parameters_untouched(self, small_net):
        """Verify masked parameters never move"""
        small_net.masks[0][5] = True
        incoming = small_net.weights[0][:, 5].copy()
        outgoing = small_net.weights[1][5, :].copy()
        opt = OptState.create(small_net, kind="adam", weight_decay=0.1)
        opt_step(small_net, constant_grads(small_net, 1.0), opt)

        assert np.array_equal(small_net.weights[0][:, 5], incoming)
        assert np.array_equal(small_net.weights[1][5, :], outgoing)
        print("✅ Pruned parameters frozen")

    def test_non_finite_gradient_rejected(self, small_net):
        """Verify NaN gradients raise before any parameter changes"""
        grads = constant_grads(small_net, 0.0)
        grads.weights[2][0, 0] = np.inf
        opt = OptState.create(small_net)
        with pytest.raises(NonFiniteError):
            opt_step(small_net, grads, opt)
        print("✅ Non-finite gradients rejected")

    def test_invalid_optimizer_config(self, small_net):
        """Verify bad optimizer settings raise ConfigError"""
        with pytest.raises(ConfigError):
            OptState.create(small_net, kind="rmsprop")
        with pytest.raises(ConfigError):
            OptState.create(small_net, eps=0.0)
        print("✅ Invalid optimizer settings rejected")

    def test_moment_reset_helpers(self):
        """Verify zero_incoming / zero_outgoing touch only the listed neurons"""
        net = build_network(dense_specs(3, [4], 2), seed=0)
        opt = OptState.create(net)
        for buf in (*opt.first_w, *opt.second_w, *opt.first_b, *opt.second_b):
            buf[...] = 1.0
        opt.zero_incoming(0, [1])
        opt.zero_outgoing(0, [1])

        assert not opt.first_w[0][:, 1].any() and opt.first_w[0][:, 0].all()
        assert opt.second_b[0][1] == 0.0 and opt.second_b[0][0] == 1.0
        assert not opt.second_w[1][1, :].any() and opt.second_w[1][0, :].all()
        print("✅ Moment resets are targeted")


class TestLosses:

    def test_mse(self):
        """Verify MSE value and gradient"""
        loss, grad = loss_and_grad("mse", np.array([[1.0, 2.0]]), np.array([[0.0, 0.0]]))
        assert loss == pytest.approx(2.5)
        np.testing.assert_allclose(grad, [[1.0, 2.0]])
        print("✅ MSE correct")

    def test_huber_regions(self):
        """Verify quadratic inside delta and linear outside"""
        loss, grad = loss_and_grad("huber", np.array([0.5, 3.0]), np.array([0.0, 0.0]), delta=1.0)
        assert loss == pytest.approx((0.125 + 2.5) / 2)
        np.testing.assert_allclose(grad, [0.25, 0.5])
        print("✅ Huber correct")

    def test_cross_entropy(self):
        """Verify uniform logits give log(C) and gradients sum to zero per row"""
        logits = np.zeros((4, 5))
        labels = np.array([0, 1, 2, 4])
        loss, grad = loss_and_grad("cross_entropy", logits, labels)
        assert loss == pytest.approx(np.log(5))
        np.testing.assert_allclose(grad.sum(axis=1), 0.0, atol=1e-15)
        print("✅ Cross-entropy correct")

    def test_invalid_targets_raise_lab_errors(self):
        """Verify bad class indices, empty batches and unknown kinds raise the package errors"""
        logits = np.zeros((4, 5))
        with pytest.raises(ShapeError, match=r"\[0, 5\)"):
            loss_and_grad("cross_entropy", logits, np.array([0, 1, 2, 5]))
        with pytest.raises(ShapeError):
            loss_and_grad("cross_entropy", logits, np.array([0.0, 1.5, 2.0, 3.0]))
        with pytest.raises(ShapeError):
            loss_and_grad("cross_entropy", np.zeros((0, 5)), np.array([], dtype=np.int64))
        with pytest.raises(ConfigError):
            loss_and_grad("hinge", logits, logits)
        print("✅ Invalid loss inputs rejected")
