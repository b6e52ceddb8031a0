import unittest

import numpy as np

from src.services import ops
from src.services.grad_engine import GradTape, LossEvaluation, backward, fd_check
from src.utils.constants import ReductionConst


def _square_sum(tape, x):
    return tape.record("square_sum", np.array((x.value ** 2).sum()), (x,), lambda g: (2.0 * g * x.value,))


def _quadratic_loss(params, want_grad):
    tape = GradTape()
    total = ops.weighted_sum(tape, [(1.0, _square_sum(tape, tape.param(n, v))) for n, v in params.items()])
    grads = backward(total, tape) if want_grad else None
    return LossEvaluation(float(total.value), grads, tape.kink_signature())


def _clamp_l1_loss(params, want_grad):
    tape = GradTape()
    x = ops.clamp(tape, tape.param("x", params["x"]))
    loss = ops.l1(tape, ops.sub(tape, x, tape.constant(np.full(params["x"].shape, 0.25))))
    grads = backward(loss, tape) if want_grad else None
    return LossEvaluation(float(loss.value), grads, tape.kink_signature())


class TestBackward(unittest.TestCase):
    """Unit tests for backward."""

    def setUp(self):
        """Set up test fixtures."""
        self.rng = np.random.default_rng(21)

    def test_square_sum(self):
        """The gradient of sum(p^2) is 2p."""
        p = self.rng.normal(size=(3, 4))
        grads = _quadratic_loss({"p": p}, True).gradients
        np.testing.assert_allclose(grads["p"], 2.0 * p)

    def test_disconnected_parameter(self):
        """A parameter with zero weight in the loss gets a zero gradient."""
        tape = GradTape()
        a = tape.param("a", np.ones(3))
        tape.param("E", np.ones(3))
        total = ops.weighted_sum(tape, [(1.0, _square_sum(tape, a))])
        grads = backward(total, tape)
        self.assertFalse(grads["E"].any())

    def test_missing_parameter_warns(self):
        """A parameter that never reached the tape gets zeros and a warning."""
        tape = GradTape()
        total = _square_sum(tape, tape.param("a", np.ones(2)))
        with self.assertLogs("src.services.grad_engine", level="WARNING") as logs:
            grads = backward(total, tape, expected={"a": np.ones(2), "psf": np.ones((2, 2))})
        np.testing.assert_array_equal(grads["psf"], np.zeros((2, 2)))
        self.assertTrue(any("psf" in line for line in logs.output))

    def test_clamp_gradient_gate(self):
        """Clamp passes gradient inside (0, 1) and blocks it outside."""
        tape = GradTape()
        x = tape.param("x", np.array([-0.5, 0.3, 1.7]))
        loss = ops.weighted_sum(tape, [(1.0, _square_sum(tape, ops.clamp(tape, x)))])
        np.testing.assert_allclose(backward(loss, tape)["x"], [0.0, 0.6, 0.0])

    def test_leaky_gradient(self):
        """Leaky activation has slope 1 for positive inputs and ``slope`` otherwise."""
        tape = GradTape()
        x = tape.param("x", np.array([-2.0, 3.0]))
        out = ops.leaky(tape, x, 0.02)
        loss = ops.l1(tape, out, ReductionConst.SUM)
        np.testing.assert_allclose(backward(loss, tape)["x"], [-0.02, 1.0])

    def test_l1_sign_zero(self):
        """The L1 subgradient at an exact zero residual is zero."""
        tape = GradTape()
        r = tape.param("r", np.array([0.0, 0.5, -0.5, 0.0]))
        grads = backward(ops.l1(tape, r), tape)
        np.testing.assert_allclose(grads["r"], [0.0, 0.25, -0.25, 0.0])

    def test_linearity(self):
        """The gradient of a sum of losses is the sum of their gradients."""
        p = self.rng.random((4, 3))

        def grad_of(coefs):
            tape = GradTape()
            x = tape.param("x", p)
            terms = [
                (coefs[0], _square_sum(tape, x)),
                (coefs[1], ops.l1(tape, ops.sub(tape, x, tape.constant(np.full_like(p, 0.5))))),
            ]
            return backward(ops.weighted_sum(tape, terms), tape)["x"]

        np.testing.assert_allclose(grad_of((1.0, 1.0)), grad_of((1.0, 0.0)) + grad_of((0.0, 1.0)), atol=1e-12)

    def test_parameters_untouched(self):
        """backward never mutates parameter values."""
        p = self.rng.random((2, 2))
        snapshot = p.copy()
        _quadratic_loss({"p": p}, True)
        np.testing.assert_array_equal(p, snapshot)

    def test_block_conv_and_srf_adjoints(self):
        """Adjoints of the PSF and SRF ops agree with finite differences."""
        mask = np.array([[1, 0], [1, 1], [0, 1]], dtype=bool)
        x0 = self.rng.random((4, 4, 3))

        def loss_fn(params, want_grad):
            tape = GradTape()
            x = tape.param("x", params["x"])
            conv = ops.block_conv(tape, x, tape.param("k", params["k"]))
            out = ops.srf(tape, conv, tape.param("w", params["w"]), mask, 1e-8)
            loss = _square_sum(tape, out)
            return LossEvaluation(float(loss.value), backward(loss, tape) if want_grad else None, tape.kink_signature())

        report = fd_check(
            {"x": x0, "k": self.rng.random((2, 2)), "w": self.rng.random((3, 2)) + 0.1},
            loss_fn, masks={"w": mask},
        )
        self.assertTrue(report.passed, report.rows())


class TestFdCheck(unittest.TestCase):
    """Unit tests for fd_check."""

    def test_quadratic_is_exact(self):
        """Central differences of a quadratic are exact up to rounding."""
        rng = np.random.default_rng(0)
        report = fd_check({"a.W0": rng.uniform(0.5, 1.5, size=(5, 5)), "b": rng.uniform(-1.5, -0.5, size=7)}, _quadratic_loss)
        self.assertTrue(report.passed)
        self.assertEqual({g.group for g in report.groups}, {"a", "b"})
        for group in report.groups:
            self.assertLessEqual(group.max_rel_error, 1e-8)

    def test_samples_per_group(self):
        """At most ``samples_per_group`` coordinates are sampled per group."""
        report = fd_check({"p": np.linspace(0.1, 2.0, 200)}, _quadratic_loss, samples_per_group=64)
        self.assertEqual(report.groups[0].sampled, 64)

    def test_kink_skipped(self):
        """Coordinates next to a clamp boundary are skipped, not failed."""
        x = np.array([0.6, 1.0 + 1e-6, -1e-6, 0.7])
        report = fd_check({"x": x}, _clamp_l1_loss, h=1e-5)
        group = report.groups[0]
        self.assertEqual(group.kink_skipped, 2)
        self.assertEqual(group.sampled, 2)
        self.assertTrue(group.passed)

    def test_bad_gradient_fails(self):
        """A wrong analytic gradient is caught."""
        def wrong(params, want_grad):
            evaluation = _quadratic_loss(params, want_grad)
            if want_grad:
                evaluation.gradients = {k: v * 1.5 for k, v in evaluation.gradients.items()}
            return evaluation

        report = fd_check({"p": np.ones(4)}, wrong)
        self.assertFalse(report.passed)
        self.assertEqual(report.rows()[0]["group"], "p")


if __name__ == '__main__':
    unittest.main()
