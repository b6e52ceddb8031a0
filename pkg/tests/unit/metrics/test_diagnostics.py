import unittest
from unittest.mock import patch

import numpy as np
import pandas as pd

from src.models.network import ForwardBundle
from src.schemas.train_config import TrainConfig
from src.services.diagnostics import (
    abundance_diagnostics,
    psf_report,
    summarise_sweep,
    sweep_endmembers,
    sweep_weights,
)
from src.services.trainer import TrainResult
from src.utils.errors import ConfigurationError


def _bundle():
    A = np.zeros((4, 4, 2))
    A[..., 0] = 1.0
    A_h_a = np.full((2, 2, 2), 0.5)
    A_h_b = np.full((2, 2, 2), 0.25)
    unused = np.zeros((2, 2, 1))
    return ForwardBundle(
        A_h_a=A_h_a, Z_tilde_a=unused, A=A, X_tilde=unused, Y_tilde=unused,
        A_h_b=A_h_b, Z_tilde_b=unused, Y_lr_a=unused, Y_lr_b=unused,
    )


class TestAbundanceDiagnostics(unittest.TestCase):
    """Unit tests for abundance_diagnostics."""

    def setUp(self):
        """Set up test fixtures."""
        self.diag = abundance_diagnostics(_bundle(), bins=4)

    def test_histogram(self):
        """Each cube gets one row per bin and fractions sum to one."""
        hist = self.diag.histogram
        self.assertEqual(len(hist), 12)
        for _, group in hist.groupby("cube"):
            self.assertAlmostEqual(group["fraction"].sum(), 1.0, places=12)

    def test_summary(self):
        """Sparsity fraction and sum-to-one error per cube."""
        summary = self.diag.summary.set_index("cube")
        self.assertEqual(summary.loc["A", "fraction_below_0_1"], 0.5)
        self.assertEqual(summary.loc["A", "mean_sum_error"], 0.0)
        self.assertEqual(summary.loc["A_h_b", "mean_sum_error"], 0.5)
        self.assertEqual(summary.loc["A_h_a", "entries"], 8)

    def test_sum_error_maps(self):
        """Per-pixel sum-to-one error maps have the spatial shape of their cube."""
        self.assertEqual(self.diag.sum_error_maps["A"].shape, (4, 4))
        np.testing.assert_allclose(self.diag.sum_error_maps["A_h_b"], 0.5)


class TestSweeps(unittest.TestCase):
    """Unit tests for the endmember and weight sweeps with training mocked out."""

    def setUp(self):
        """Set up test fixtures."""
        self.ref = np.full((4, 4, 3), 0.5)
        self.Z = np.zeros((2, 2, 3))
        self.Y = np.zeros((4, 4, 1))
        self.base = TrainConfig(iterations=2, seed=3)
        self.result = TrainResult(params=None, X_tilde=self.ref * 0.9, log=pd.DataFrame())

    def test_endmember_sweep(self):
        """One row per (p, repeat) with the seed offset by the repeat."""
        with patch("src.services.diagnostics.trainer.train", return_value=self.result) as train:
            frame = sweep_endmembers(self.Z, self.Y, None, self.ref, self.base, [2, 5], repeats=2)
        self.assertEqual(train.call_count, 4)
        self.assertEqual(frame["p"].tolist(), [2, 2, 5, 5])
        self.assertEqual(frame["seed"].tolist(), [3, 4, 3, 4])
        self.assertEqual(train.call_args_list[2].args[2].p, 5)
        self.assertAlmostEqual(frame["mSAM"].iloc[0], 0.0, places=5)

    def test_weight_sweep(self):
        """The swept weight reaches the training config."""
        with patch("src.services.diagnostics.trainer.train", return_value=self.result) as train:
            frame = sweep_weights(self.Z, self.Y, None, self.ref, self.base, "gamma", [0.0, 50.0])
        self.assertEqual(frame["value"].tolist(), [0.0, 50.0])
        self.assertEqual(train.call_args_list[1].args[2].weights.gamma, 50.0)
        self.assertEqual(train.call_args_list[1].args[2].weights.alpha, self.base.weights.alpha)

    def test_weight_sweep_rejects_unknown_weight(self):
        """Only the five trade-off weights can be swept."""
        with self.assertRaises(ConfigurationError):
            sweep_weights(self.Z, self.Y, None, self.ref, self.base, "a_sparse", [0.1])

    def test_weight_sweep_rejects_negative(self):
        """Negative weights are rejected."""
        with self.assertRaises(ConfigurationError):
            sweep_weights(self.Z, self.Y, None, self.ref, self.base, "mu", [-1.0])

    def test_summary(self):
        """Repeats are averaged per key."""
        frame = pd.DataFrame({"p": [2, 2, 5], "seed": [0, 1, 0], "mPSNR": [30.0, 32.0, 40.0], "mSAM": [2.0, 4.0, 1.0]})
        summary = summarise_sweep(frame, "p")
        self.assertEqual(summary["mPSNR"].tolist(), [31.0, 40.0])
        self.assertEqual(summary["mSAM"].tolist(), [3.0, 1.0])


class TestPsfReport(unittest.TestCase):
    """Unit tests for psf_report."""

    def test_with_and_without_truth(self):
        """The kernel error is only reported when a truth kernel is given."""
        learned = np.full((2, 2), 0.5)
        self.assertEqual(psf_report(learned), {"psf_sum": 2.0})
        report = psf_report(learned, np.full((2, 2), 0.25))
        self.assertEqual(report["psf_kernel_error"], 0.0)


if __name__ == '__main__':
    unittest.main()
