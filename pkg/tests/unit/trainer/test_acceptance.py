import tempfile
import unittest
from functools import lru_cache
from pathlib import Path

import numpy as np

from src.config.config import settings
from src.schemas.train_config import RunConfig, RunPaths, SceneConfig, TrainConfig
from src.services.diagnostics import abundance_diagnostics
from src.services.fusion_net import forward_all
from src.services.metrics import mpsnr, msam, psf_kernel_error
from src.services.pipeline import FusionRunService, SimulationService
from src.services.scene import gen_scene
from src.services.trainer import FusionTrainer, boxes_respected
from src.utils.constants import AblationConst, ConstraintConst, FileConst

ITERATIONS = 3000
ENDMEMBERS = 16
SEEDS = (0, 1, 2)
SLOW_REASON = "set SPECFUSE_SLOW_TESTS=1 to run the training acceptance runs"


@lru_cache(maxsize=None)
def _scene(sigma: float):
    return gen_scene(SceneConfig(sigma=sigma))


@lru_cache(maxsize=None)
def _train(sigma: float, seed: int, constraint: ConstraintConst, ablation: tuple):
    scene, triplet = _scene(sigma)
    cfg = TrainConfig(
        iterations=ITERATIONS,
        p=ENDMEMBERS,
        seed=seed,
        constraint_fn=constraint,
        ablation=list(ablation),
        reproducible=True,
    )
    # debug_checks asserts the E/PSF/SRF boxes after every update
    trainer = FusionTrainer(
        triplet.lrhsi, triplet.hrmsi, cfg, scene.coverage, reference=scene.hrhsi, debug_checks=True
    )
    return trainer.run()


def _final_mpsnr(sigma=0.5, seed=0, constraint=ConstraintConst.CLAMP, ablation=()) -> float:
    scene, _ = _scene(sigma)
    return mpsnr(scene.hrhsi, _train(sigma, seed, constraint, ablation).X_tilde)


@unittest.skipUnless(settings.slow_tests, SLOW_REASON)
class TestRecovery(unittest.TestCase):
    """Unit tests for end-to-end recovery on the default synthetic scene."""

    def setUp(self):
        """Set up test fixtures."""
        self.scene, self.triplet = _scene(0.5)
        self.result = _train(0.5, 0, ConstraintConst.CLAMP, ())

    def test_fused_image_and_psf_recovered(self):
        """p = 16 for 3000 iterations reaches 30 dB, 5 degrees and a PSF error of 0.02."""
        self.assertGreaterEqual(mpsnr(self.scene.hrhsi, self.result.X_tilde), 30.0)
        self.assertLessEqual(msam(self.scene.hrhsi, self.result.X_tilde), 5.0)
        self.assertLessEqual(psf_kernel_error(self.result.params.psf.kernel, self.scene.psf.kernel), 0.02)

    def test_abundances_sparse_and_near_simplex(self):
        """Abundances stay in [0, 1], sum to one within 0.05 and are mostly below 0.1."""
        bundle = forward_all(self.triplet.lrhsi, self.triplet.hrmsi, self.result.params)
        summary = abundance_diagnostics(bundle).summary.set_index("cube")
        for name in ("A", "A_h_a"):
            self.assertGreaterEqual(summary.loc[name, "min"], 0.0)
            self.assertLessEqual(summary.loc[name, "max"], 1.0)
            self.assertGreaterEqual(summary.loc[name, "fraction_below_0_1"], 0.6)
        # A_h_b is a PSF-weighted block average of A, bounded by the kernel sum
        self.assertGreaterEqual(summary.loc["A_h_b", "min"], 0.0)
        self.assertLessEqual(summary.loc["A_h_b", "max"], 1.01)
        for name in ("A", "A_h_b"):
            self.assertLessEqual(summary.loc[name, "mean_sum_error"], 0.05, name)
        self.assertTrue(boxes_respected(self.result.params))


@unittest.skipUnless(settings.slow_tests, SLOW_REASON)
class TestConstraintFunction(unittest.TestCase):
    """Unit tests for the clamp against the softmax abundance constraint."""

    def test_clamp_at_least_as_accurate(self):
        """Over three seeds the median mPSNR gain of the clamp over softmax is not negative."""
        gains = [
            _final_mpsnr(seed=seed) - _final_mpsnr(seed=seed, constraint=ConstraintConst.SOFTMAX)
            for seed in SEEDS
        ]
        self.assertGreaterEqual(float(np.median(gains)), 0.0, gains)


@unittest.skipUnless(settings.slow_tests, SLOW_REASON)
class TestAblation(unittest.TestCase):
    """Unit tests for the branch ablations."""

    def test_bridge_matters_most(self):
        """Dropping the Z_b branch costs at least 1 dB, and more than dropping the LrMSI term."""
        full = np.array([_final_mpsnr(seed=seed) for seed in SEEDS])
        no_bridge = np.array([_final_mpsnr(seed=seed, ablation=(AblationConst.DROP_ZB,)) for seed in SEEDS])
        no_lrmsi = np.array([_final_mpsnr(seed=seed, ablation=(AblationConst.DROP_YLR,)) for seed in SEEDS])
        bridge_loss = float(np.median(full - no_bridge))
        lrmsi_loss = float(np.median(full - no_lrmsi))
        self.assertGreaterEqual(bridge_loss, 1.0)
        self.assertGreater(bridge_loss, lrmsi_loss)


@unittest.skipUnless(settings.slow_tests, SLOW_REASON)
class TestPsfRobustness(unittest.TestCase):
    """Unit tests for recovery under different PSF widths."""

    def test_mpsnr_band_across_sigma(self):
        """sigma in {0.5, 1, 2} keeps the final mPSNR within a 2 dB band."""
        values = [_final_mpsnr(sigma=sigma) for sigma in (0.5, 1.0, 2.0)]
        self.assertLessEqual(max(values) - min(values), 2.0, values)


@unittest.skipUnless(settings.slow_tests, SLOW_REASON)
class TestFuseDeterminism(unittest.TestCase):
    """Unit tests for bit-identical fuse runs."""

    def setUp(self):
        """Set up test fixtures."""
        self.tmp = tempfile.TemporaryDirectory()
        self.root = Path(self.tmp.name)
        SimulationService(self.root / "sim").synthetic(SceneConfig())

    def tearDown(self):
        self.tmp.cleanup()

    def _fuse(self, out: str) -> Path:
        sim = self.root / "sim"
        cfg = RunConfig(
            train=TrainConfig(iterations=300, p=ENDMEMBERS, seed=0, reproducible=True),
            paths=RunPaths(
                lrhsi=str(sim / FileConst.LRHSI),
                hrmsi=str(sim / FileConst.HRMSI),
                coverage=str(sim / FileConst.COVERAGE),
                reference=str(sim / FileConst.HRHSI),
                out=str(self.root / out),
            ),
        )
        FusionRunService(cfg).run()
        return self.root / out

    def test_checkpoint_and_log_bit_identical(self):
        """Two reproducible runs with the same seed write byte-identical checkpoints and logs."""
        first, second = self._fuse("run_a"), self._fuse("run_b")
        for name in (FileConst.CHECKPOINT, FileConst.TRAINING_LOG, FileConst.PSF_LEARNED):
            self.assertEqual((first / name).read_bytes(), (second / name).read_bytes(), name)


if __name__ == '__main__':
    unittest.main()
