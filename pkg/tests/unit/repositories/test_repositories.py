import json
import struct
import tempfile
import unittest
from pathlib import Path

import numpy as np
import pandas as pd

from src.models.cube import ImageCube
from src.repositories.checkpoint import CheckpointRepository
from src.repositories.coverage import CoverageRepository
from src.repositories.cube import CubeRepository
from src.repositories.export import ExportRepository
from src.schemas.cube import RunManifest
from src.services.fusion_net import init_params
from src.services.hsi_core import build_coverage
from src.utils.constants import FileConst
from src.utils.errors import ConfigurationError, CubeFormatError, ShapeError


class TestCubeRepository(unittest.TestCase):
    """Unit tests for CubeRepository."""

    def setUp(self):
        """Set up test fixtures."""
        self.tmp = tempfile.TemporaryDirectory()
        self.repo = CubeRepository(self.tmp.name)
        rng = np.random.default_rng(0)
        self.cube = ImageCube(rng.random((3, 4, 5)), np.linspace(400.0, 800.0, 5))

    def tearDown(self):
        self.tmp.cleanup()

    def test_save_layout(self):
        """The file is band-sequential f32 with a JSON sidecar."""
        path = self.repo.save("scene", self.cube)
        self.assertEqual(path.name, "scene.cube")
        self.assertEqual(path.stat().st_size, 3 * 4 * 5 * 4)
        raw = np.fromfile(path, dtype="<f4")
        self.assertAlmostEqual(float(raw[4]), self.cube.data[1, 0, 0], places=6)
        header = json.loads(path.with_suffix(".json").read_text())
        self.assertEqual((header["rows"], header["cols"], header["bands"]), (3, 4, 5))
        self.assertEqual((header["dtype"], header["interleave"]), ("f32le", "bsq"))

    def test_load_matches_within_f32(self):
        """Loaded data agrees with the saved cube to float32 precision."""
        self.repo.save("scene", self.cube)
        loaded = self.repo.load("scene")
        self.assertEqual(loaded.shape, (3, 4, 5))
        np.testing.assert_allclose(loaded.data, self.cube.data, atol=1e-7)
        np.testing.assert_allclose(loaded.wavelengths, self.cube.wavelengths)

    def test_dotted_stem_keeps_its_name(self):
        """A name with a dot in its stem gets .cube appended, and a second version does not overwrite the first."""
        first = self.repo.save("scene.v2", self.cube)
        other = ImageCube(self.cube.data * 0.5, self.cube.wavelengths)
        second = self.repo.save("scene.v3", other)
        self.assertEqual(first.name, "scene.v2.cube")
        self.assertEqual(second.name, "scene.v3.cube")
        self.assertTrue(self.repo.sidecar_path(first).exists())
        np.testing.assert_allclose(self.repo.load("scene.v2").data, self.cube.data, atol=1e-7)
        np.testing.assert_allclose(self.repo.load("scene.v3").data, other.data, atol=1e-7)

    def test_wrong_byte_count(self):
        """A truncated cube file is rejected."""
        path = self.repo.save("scene", self.cube)
        path.write_bytes(path.read_bytes()[:-4])
        with self.assertRaises(CubeFormatError) as ctx:
            self.repo.load("scene")
        self.assertIn("expected 240 bytes", ctx.exception.message)

    def test_missing_sidecar(self):
        """A cube without its sidecar is rejected."""
        path = self.repo.save("scene", self.cube)
        path.with_suffix(".json").unlink()
        with self.assertRaises(CubeFormatError):
            self.repo.load("scene")

    def test_missing_file(self):
        """A missing cube file is a format error."""
        with self.assertRaises(CubeFormatError):
            self.repo.load("nothing")

    def test_out_of_range_and_normalise(self):
        """Out-of-range data is rejected unless min-max normalisation is requested."""
        path = Path(self.tmp.name) / "raw.cube"
        np.arange(8, dtype="<f4").reshape(2, 2, 2).tofile(path)
        path.with_suffix(".json").write_text(json.dumps({"rows": 2, "cols": 2, "bands": 2}))
        with self.assertRaises(CubeFormatError):
            self.repo.load("raw")
        cube = self.repo.load("raw", normalise=True)
        self.assertEqual((cube.data.min(), cube.data.max()), (0.0, 1.0))


class TestCheckpointRepository(unittest.TestCase):
    """Unit tests for CheckpointRepository."""

    def setUp(self):
        """Set up test fixtures."""
        self.tmp = tempfile.TemporaryDirectory()
        self.path = Path(self.tmp.name) / FileConst.CHECKPOINT
        self.repo = CheckpointRepository(self.path)

    def tearDown(self):
        self.tmp.cleanup()

    def test_header(self):
        """The file starts with the magic and the array count."""
        self.repo.save({"a": np.ones((2, 3)), "b": np.zeros(4)})
        raw = self.path.read_bytes()
        self.assertEqual(raw[:8], b"HYCONET1")
        self.assertEqual(struct.unpack("<I", raw[8:12])[0], 2)

    def test_params_restore_exactly(self):
        """Model parameters come back bit-identical and in order."""
        wl = np.linspace(400.0, 700.0, 6)
        cov = build_coverage(wl, [(400.0, 550.0), (550.0, 700.0)])
        rng = np.random.default_rng(1)
        params = init_params(rng.random((2, 2, 6)), rng.random((4, 4, 2)), cov, 3, rng, hidden_widths=[5])
        self.repo.save_params(params)
        loaded = self.repo.load()
        self.assertEqual(list(loaded), list(params.as_dict()))
        for name, value in params.as_dict().items():
            np.testing.assert_array_equal(loaded[name], value)

        fresh = init_params(rng.random((2, 2, 6)), rng.random((4, 4, 2)), cov, 3, rng, hidden_widths=[5])
        self.repo.load_into(fresh)
        np.testing.assert_array_equal(fresh.endmembers.E, params.endmembers.E)

    def test_bad_magic(self):
        """A file with the wrong magic is rejected."""
        self.path.write_bytes(b"NOTACKPT\x00\x00\x00\x00")
        with self.assertRaises(CubeFormatError):
            self.repo.load()

    def test_truncated_and_trailing(self):
        """Truncated files and trailing bytes are rejected."""
        self.repo.save({"a": np.ones(3)})
        good = self.path.read_bytes()
        self.path.write_bytes(good[:-1])
        with self.assertRaises(CubeFormatError):
            self.repo.load()
        self.path.write_bytes(good + b"\x00")
        with self.assertRaises(CubeFormatError):
            self.repo.load()


class TestExportRepository(unittest.TestCase):
    """Unit tests for ExportRepository."""

    def setUp(self):
        """Set up test fixtures."""
        self.tmp = tempfile.TemporaryDirectory()
        self.exports = ExportRepository(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_kernel_round_trip(self):
        """Kernels are written as CSV matrices and read back square."""
        kernel = np.array([[0.1, 0.2], [0.3, 0.4]])
        path = self.exports.write_kernel("psf.csv", kernel)
        np.testing.assert_allclose(ExportRepository.read_kernel(path), kernel)

    def test_read_kernel_rejects_non_square(self):
        """Non-square kernels are rejected."""
        path = self.exports.write_matrix("k.csv", np.ones((2, 3)))
        with self.assertRaises(ShapeError):
            ExportRepository.read_kernel(path)

    def test_heatmap(self):
        """A heatmap is written as PGM, raw f32 and a scale sidecar."""
        values = np.array([[0.0, 0.5], [1.0, 2.0]])
        self.exports.write_heatmap("rmse_map", values)
        root = Path(self.tmp.name)
        pgm = (root / "rmse_map.pgm").read_bytes()
        self.assertTrue(pgm.startswith(b"P5\n2 2\n255\n"))
        self.assertEqual(list(pgm[-4:]), [0, 64, 128, 255])
        scale = json.loads((root / "rmse_map.scale.json").read_text())
        self.assertEqual((scale["minimum"], scale["maximum"]), (0.0, 2.0))
        np.testing.assert_allclose(np.fromfile(root / "rmse_map.f32", dtype="<f4").reshape(2, 2), values)

    def test_manifest_lists_files_once(self):
        """The manifest lists every written file exactly once, itself included."""
        self.exports.write_rows("a.csv", [{"x": 1}])
        self.exports.register("a.csv", "cube.cube")
        self.exports.write_manifest(RunManifest(command="test"))
        manifest = json.loads((Path(self.tmp.name) / FileConst.MANIFEST).read_text())
        self.assertEqual(manifest["files"], ["a.csv", "cube.cube", FileConst.MANIFEST])


class TestCoverageRepository(unittest.TestCase):
    """Unit tests for CoverageRepository."""

    def setUp(self):
        """Set up test fixtures."""
        self.tmp = tempfile.TemporaryDirectory()
        self.root = Path(self.tmp.name)
        self.wl = np.array([400.0, 450.0, 500.0, 550.0, 600.0])

    def tearDown(self):
        self.tmp.cleanup()

    def test_coverage_round_trip(self):
        """A written coverage table reads back to the same index sets."""
        cov = build_coverage(self.wl, [(400.0, 480.0), (480.0, 600.0)])
        path = CoverageRepository.write_coverage(self.root / "coverage.csv", cov)
        again = CoverageRepository.read_coverage(path, self.wl)
        for a, b in zip(cov.hsi_band_index_sets, again.hsi_band_index_sets):
            np.testing.assert_array_equal(a, b)

    def test_missing_coverage_file(self):
        """A missing coverage file is a configuration error."""
        with self.assertRaises(ConfigurationError) as ctx:
            CoverageRepository.read_coverage(self.root / "nope.csv", self.wl)
        self.assertIn("Coverage file not found", ctx.exception.message)

    def test_missing_columns(self):
        """Coverage tables need their three columns."""
        pd.DataFrame({"msi_band": [0], "low": [400.0]}).to_csv(self.root / "bad.csv", index=False)
        with self.assertRaises(ConfigurationError):
            CoverageRepository.read_coverage(self.root / "bad.csv", self.wl)

    def test_srf_weights(self):
        """SRF tables give weights per covered band and imply the coverage."""
        cov = build_coverage(self.wl, [(400.0, 450.0), (500.0, 600.0)])
        weights = [np.array([0.5, 1.0]), np.array([0.2, 0.9, 0.4])]
        path = self.root / "srf.csv"
        CoverageRepository.srf_weight_frame(cov, weights).to_csv(path, index=False)
        read = CoverageRepository.read_srf_weights(path, cov)
        for a, b in zip(read, weights):
            np.testing.assert_allclose(a, b)
        implied = CoverageRepository.coverage_from_srf_table(path, self.wl)
        np.testing.assert_array_equal(implied.hsi_band_index_sets[1], [2, 3, 4])

    def test_srf_weights_missing_band(self):
        """A covered band without a weight row is reported."""
        cov = build_coverage(self.wl, [(400.0, 450.0)])
        path = self.root / "srf.csv"
        pd.DataFrame({"msi_band": [0], "wavelength_nm": [400.0], "weight": [1.0]}).to_csv(path, index=False)
        with self.assertRaises(ConfigurationError) as ctx:
            CoverageRepository.read_srf_weights(path, cov)
        self.assertIn("450", ctx.exception.message)


if __name__ == '__main__':
    unittest.main()
