import unittest

import numpy as np

from src.services.degradation import gaussian_kernel
from src.services.metrics import (
    ergas,
    evaluate,
    mpsnr,
    mrae,
    msam,
    psf_kernel_error,
    psnr_band,
    rmse,
    sam,
    sam_pixel,
    srf_weight_error,
)
from src.utils.errors import ShapeError


class TestPsnr(unittest.TestCase):
    """Unit tests for psnr_band / mpsnr."""

    def setUp(self):
        """Set up test fixtures."""
        self.ref = np.random.default_rng(0).random((6, 6, 4))

    def test_identical_cubes_cap(self):
        """Identical cubes report the 100 dB cap."""
        self.assertEqual(mpsnr(self.ref, self.ref), 100.0)

    def test_twenty_db(self):
        """Peak 1.0 with an error of 0.1 everywhere is 20 dB."""
        ref = np.ones((4, 4, 2))
        np.testing.assert_allclose(psnr_band(ref, ref - 0.1), [20.0, 20.0], atol=1e-9)

    def test_noise_monotone(self):
        """More noise gives a lower PSNR."""
        noise = np.random.default_rng(1).normal(size=self.ref.shape)
        values = [mpsnr(self.ref, self.ref + s * noise) for s in (0.01, 0.05, 0.2)]
        self.assertEqual(values, sorted(values, reverse=True))

    def test_zero_peak_band(self):
        """A zero reference band with non-zero error reports minus the cap."""
        ref = np.zeros((2, 2, 1))
        self.assertEqual(psnr_band(ref, ref + 0.1)[0], -100.0)

    def test_shape_mismatch(self):
        """Cubes of different shapes are rejected."""
        with self.assertRaises(ShapeError):
            mpsnr(self.ref, self.ref[:3])


class TestSam(unittest.TestCase):
    """Unit tests for sam / sam_pixel / msam."""

    def test_pixel_angles(self):
        """0, 90 and 45 degrees for identical, orthogonal and diagonal spectra."""
        self.assertAlmostEqual(sam_pixel([0.3, 0.4], [0.3, 0.4]), 0.0, places=5)
        self.assertAlmostEqual(sam_pixel([1.0, 0.0], [0.0, 1.0]), 90.0, places=12)
        self.assertAlmostEqual(sam_pixel([1.0, 0.0], [1.0, 1.0]), 45.0, places=12)

    def test_scale_invariant(self):
        """Scaling the estimate uniformly leaves the angle at zero."""
        ref = np.random.default_rng(2).random((5, 5, 6)) + 0.1
        self.assertAlmostEqual(msam(ref, 0.5 * ref), 0.0, places=5)

    def test_zero_norm_reference_excluded(self):
        """Zero-norm reference pixels are excluded and counted."""
        ref = np.array([[[1.0, 0.0], [0.0, 0.0]]])
        est = np.array([[[1.0, 1.0], [0.5, 0.5]]])
        result = sam(ref, est)
        self.assertEqual(result.excluded_pixels, 1)
        self.assertAlmostEqual(result.mean_deg, 45.0, places=12)
        self.assertEqual(result.map_deg[0, 1], 0.0)

    def test_zero_norm_estimate(self):
        """A zero estimate against a non-zero reference is 90 degrees."""
        self.assertAlmostEqual(sam_pixel([0.2, 0.3], [0.0, 0.0]), 90.0, places=12)

    def test_pixel_permutation(self):
        """Reordering pixels in both cubes leaves the mean unchanged."""
        rng = np.random.default_rng(3)
        ref, est = rng.random((4, 4, 5)), rng.random((4, 4, 5))
        order = rng.permutation(16)
        ref_p = ref.reshape(16, 5)[order].reshape(4, 4, 5)
        est_p = est.reshape(16, 5)[order].reshape(4, 4, 5)
        self.assertAlmostEqual(msam(ref, est), msam(ref_p, est_p), places=10)


class TestErgasRmseMrae(unittest.TestCase):
    """Unit tests for ergas, rmse and mrae."""

    def test_identical(self):
        """Identical cubes give zero for every error measure."""
        ref = np.random.default_rng(4).random((4, 4, 3))
        self.assertEqual(ergas(ref, ref, 4), 0.0)
        self.assertEqual(rmse(ref, ref)[0], 0.0)
        self.assertEqual(mrae(ref, ref)[0], 0.0)

    def test_ergas_single_band(self):
        """Mean 0.5, RMSE 0.05, ratio 4 gives 2.5."""
        ref = np.full((4, 4, 1), 0.5)
        self.assertAlmostEqual(ergas(ref, ref + 0.05, 4), 2.5, places=9)

    def test_ergas_zero_mean_band(self):
        """A band with zero reference mean contributes nothing."""
        ref = np.zeros((2, 2, 2))
        ref[..., 0] = 0.5
        est = ref + 0.05
        self.assertAlmostEqual(ergas(ref, est, 4), 100.0 / 4 * np.sqrt(0.01 / 2), places=9)

    def test_constant_offset(self):
        """Reference 0.5 against estimate 0.6 gives RMSE 0.1 and MRAE 0.2."""
        ref = np.full((3, 3, 2), 0.5)
        rmse_value, rmse_map = rmse(ref, ref + 0.1)
        mrae_value, mrae_map = mrae(ref, ref + 0.1)
        self.assertAlmostEqual(rmse_value, 0.1, places=12)
        self.assertAlmostEqual(mrae_value, 0.2, places=12)
        self.assertEqual(rmse_map.shape, (3, 3))
        np.testing.assert_allclose(mrae_map, 0.2)

    def test_against_double_loop(self):
        """Per-pixel maps match a brute-force loop."""
        rng = np.random.default_rng(5)
        ref, est = rng.random((3, 4, 5)), rng.random((3, 4, 5))
        _, rmse_map = rmse(ref, est)
        _, mrae_map = mrae(ref, est)
        for i in range(3):
            for j in range(4):
                d = ref[i, j] - est[i, j]
                self.assertAlmostEqual(rmse_map[i, j], np.sqrt(np.mean(d ** 2)), places=12)
                self.assertAlmostEqual(mrae_map[i, j], np.mean(np.abs(d) / np.maximum(ref[i, j], 1e-3)), places=12)

    def test_mrae_floor(self):
        """Zero reference entries are divided by eps_mrae."""
        value, _ = mrae(np.zeros((1, 1, 1)), np.full((1, 1, 1), 0.001))
        self.assertAlmostEqual(value, 1.0, places=12)


class TestKernelErrors(unittest.TestCase):
    """Unit tests for psf_kernel_error and srf_weight_error."""

    def test_scale_invariant(self):
        """A kernel compared with a scaled copy of itself has zero error."""
        truth = gaussian_kernel(4, 0.5).kernel
        self.assertEqual(psf_kernel_error(truth, truth), 0.0)
        self.assertAlmostEqual(psf_kernel_error(3.0 * truth, truth), 0.0, places=15)

    def test_uniform_vs_gaussian(self):
        """A uniform kernel sits at a fixed distance from the sigma 0.5 Gaussian."""
        truth = gaussian_kernel(4, 0.5).kernel
        expected = np.sqrt(np.mean((np.full((4, 4), 1 / 16) - truth) ** 2))
        value = psf_kernel_error(np.ones((4, 4)), truth)
        self.assertAlmostEqual(value, expected, places=12)
        self.assertGreater(value, 0.05)

    def test_srf_weight_error(self):
        """SRF weight vectors are compared after normalising each band."""
        truth = [np.array([1.0, 2.0, 1.0]), np.array([1.0])]
        self.assertAlmostEqual(srf_weight_error([2 * truth[0], 5 * truth[1]], truth), 0.0, places=15)
        with self.assertRaises(ShapeError):
            srf_weight_error([np.ones(2)], [np.ones(3)])


class TestEvaluate(unittest.TestCase):
    """Unit tests for the combined report."""

    def test_report(self):
        """All scalars and maps are produced with the expected shapes."""
        rng = np.random.default_rng(6)
        ref = rng.random((4, 4, 3)) * 0.8 + 0.1
        report = evaluate(ref, np.clip(ref + 0.05 * rng.normal(size=ref.shape), 0, 1), 4)
        self.assertEqual(set(report.scalars()), {"mPSNR", "mSAM", "ERGAS", "RMSE", "MRAE", "SAM_excluded_pixels"})
        self.assertEqual(report.psnr_per_band.shape, (3,))
        self.assertEqual({k: v.shape for k, v in report.maps.items()}, {"rmse": (4, 4), "mrae": (4, 4), "sam": (4, 4)})
        self.assertTrue(0.0 <= report.msam <= 180.0)
        self.assertAlmostEqual(report.mpsnr, report.psnr_per_band.mean(), places=12)


if __name__ == '__main__':
    unittest.main()
