"""Orchestration behind the CLI subcommands: read inputs, run a stage, write the run directory."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from src.models.cube import ImageCube, SpectralCoverage
from src.repositories import CheckpointRepository, CoverageRepository, CubeRepository, ExportRepository
from src.schemas import RunConfig, RunManifest, SceneConfig, TrainConfig
from src.services import diagnostics, fusion_net
from src.services.degradation import gaussian_kernel, simulate_triplet
from src.services.grad_engine import FdCheckReport, fd_check
from src.services.metrics import MetricsReport, evaluate, srf_weight_error
from src.services.scene import gen_scene
from src.services.trainer import FusionTrainer, TrainResult, grad_check_loss_fn
from src.utils.constants import CsvColumnsConst, FileConst, GradCheckConst
from src.utils.errors import ConfigurationError, ShapeError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


@dataclass
class FusionInputs:
    Z: ImageCube
    Y: ImageCube
    coverage: SpectralCoverage
    reference: Optional[ImageCube] = None


def _require(path: Optional[str], flag: str) -> str:
    if not path:
        raise ConfigurationError(f"Missing required input {flag}")
    return path


def load_fusion_inputs(cfg: RunConfig) -> FusionInputs:
    paths = cfg.paths
    cubes = CubeRepository()
    Z = cubes.load(_require(paths.lrhsi, "--lrhsi"))
    Y = cubes.load(_require(paths.hrmsi, "--hrmsi"))
    if Z.wavelengths is None:
        raise ConfigurationError(f"{paths.lrhsi}: sidecar has no wavelengths_nm, cannot map SRF coverage")
    coverage = CoverageRepository.read_coverage(_require(paths.coverage, "--coverage"), Z.wavelengths)
    if coverage.n_msi != Y.bands:
        raise ShapeError(f"Coverage lists {coverage.n_msi} MSI bands, HrMSI has {Y.bands}")
    fusion_net.gsd_ratio(Z.shape, Y.shape)
    reference = None
    if paths.reference:
        reference = cubes.load(paths.reference)
        if reference.shape != (Y.rows, Y.cols, Z.bands):
            raise ShapeError(
                f"Reference {reference.shape} does not match the fused shape {(Y.rows, Y.cols, Z.bands)}"
            )
    return FusionInputs(Z=Z, Y=Y, coverage=coverage, reference=reference)


class SimulationService:
    def __init__(self, out: PathLike):
        self.exports = ExportRepository(out)
        self.cubes = CubeRepository(out)

    def synthetic(self, scene_cfg: SceneConfig) -> RunManifest:
        scene, triplet = gen_scene(scene_cfg)
        self.exports.write_matrix(
            FileConst.ENDMEMBERS_TRUE,
            scene.true_E,
            columns=[f"{w:g}" for w in scene.coverage.hsi_wavelengths],
        )
        self.exports.write_matrix(
            FileConst.ABUNDANCES_TRUE,
            scene.true_A.reshape(-1, scene.p_true),
            columns=[f"e{j}" for j in range(scene.p_true)],
        )
        return self._write(
            scene.hrhsi, triplet, scene.psf.kernel, scene.coverage, scene.srf_weights,
            scene_cfg.seed, scene_cfg.model_dump(),
        )

    def from_cube(
        self,
        hrhsi: PathLike,
        ratio: int,
        sigma: float,
        coverage_path: Optional[PathLike] = None,
        srf_path: Optional[PathLike] = None,
        normalise: bool = False,
        seed: int = 0,
    ) -> RunManifest:
        reference = CubeRepository().load(hrhsi, normalise=normalise)
        if reference.wavelengths is None:
            raise ConfigurationError(f"{hrhsi}: sidecar has no wavelengths_nm, cannot map SRF coverage")
        if coverage_path is not None:
            coverage = CoverageRepository.read_coverage(coverage_path, reference.wavelengths)
        elif srf_path is not None:
            coverage = CoverageRepository.coverage_from_srf_table(srf_path, reference.wavelengths)
        else:
            raise ConfigurationError("Degrading a user cube needs --coverage or --srf")
        if srf_path is not None:
            weights = CoverageRepository.read_srf_weights(srf_path, coverage)
        else:
            weights = [np.ones(idx.size) for idx in coverage.hsi_band_index_sets]
        psf = gaussian_kernel(ratio, sigma)
        triplet = simulate_triplet(reference, psf, coverage, weights, seed)
        details = {"source": str(hrhsi), "ratio": ratio, "sigma": sigma}
        return self._write(reference, triplet, psf.kernel, coverage, weights, seed, details)

    def _write(self, reference, triplet, kernel, coverage, weights, seed, details) -> RunManifest:
        named = (
            (FileConst.HRHSI, reference),
            (FileConst.LRHSI, triplet.lrhsi),
            (FileConst.HRMSI, triplet.hrmsi),
            (FileConst.LRMSI, triplet.lrmsi),
        )
        for name, cube in named:
            self.cubes.save(name, cube)
            self.exports.register(f"{name}{FileConst.CUBE_SUFFIX}", f"{name}{FileConst.SIDECAR_SUFFIX}")
        CoverageRepository.write_coverage(self.exports.path_for(FileConst.COVERAGE), coverage)
        self.exports.write_kernel(FileConst.PSF_TRUE, kernel)
        self.exports.write_table(FileConst.SRF_TRUE, CoverageRepository.srf_weight_frame(coverage, weights))
        manifest = RunManifest(
            command="simulate",
            seed=seed,
            shapes={name: list(cube.shape) for name, cube in named},
            details=details,
        )
        self.exports.write_manifest(manifest)
        return manifest


class FusionRunService:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.exports = ExportRepository(cfg.paths.out)

    def run(self) -> TrainResult:
        inputs = load_fusion_inputs(self.cfg)
        self.exports.write_json(FileConst.EFFECTIVE_CONFIG, self.cfg.model_dump(mode="json"))
        trainer = FusionTrainer(inputs.Z, inputs.Y, self.cfg.train, inputs.coverage, reference=inputs.reference)
        result = trainer.run()
        self._write_outputs(inputs, result)
        return result

    def _write_outputs(self, inputs: FusionInputs, result: TrainResult) -> None:
        params = result.params
        fused = ImageCube(np.clip(result.X_tilde, 0.0, 1.0), inputs.Z.wavelengths)
        CubeRepository(self.exports.root).save(FileConst.FUSED, fused)
        self.exports.register(f"{FileConst.FUSED}{FileConst.CUBE_SUFFIX}", f"{FileConst.FUSED}{FileConst.SIDECAR_SUFFIX}")
        CheckpointRepository(self.exports.path_for(FileConst.CHECKPOINT)).save_params(params)

        self.exports.write_table(FileConst.TRAINING_LOG, result.log)
        self.exports.write_kernel(FileConst.PSF_LEARNED, fusion_net.learned_psf_normalised(params))
        self.exports.write_table(
            FileConst.SRF_LEARNED,
            CoverageRepository.srf_weight_frame(inputs.coverage, params.srf.band_weights()),
        )

        bundle = fusion_net.forward_all(inputs.Z, inputs.Y, params, self.cfg.train.constraint_fn)
        diag = diagnostics.abundance_diagnostics(bundle)
        self.exports.write_table(FileConst.ABUNDANCE_HISTOGRAM, diag.histogram)
        self.exports.write_table(FileConst.ABUNDANCE_SUMMARY, diag.summary)
        for name, values in diag.sum_error_maps.items():
            self.exports.write_pgm(f"sum_error_{name}.pgm", values)

        details: Dict[str, object] = {
            "final_loss": result.final_breakdown,
            **diagnostics.psf_report(params.psf.kernel, self._true_psf()),
        }
        if self.cfg.paths.true_srf:
            truth = CoverageRepository.read_srf_weights(self.cfg.paths.true_srf, inputs.coverage)
            details["srf_weight_error"] = srf_weight_error(params.srf.band_weights(), truth)
        if inputs.reference is not None:
            report = evaluate(inputs.reference, fused, fusion_net.gsd_ratio(inputs.Z.shape, inputs.Y.shape))
            write_metrics(self.exports, report)
            details["metrics"] = report.scalars()

        self.exports.write_manifest(
            RunManifest(
                command="fuse",
                seed=self.cfg.train.seed,
                shapes={FileConst.FUSED: list(fused.shape)},
                details=details,
            )
        )

    def _true_psf(self) -> Optional[np.ndarray]:
        if not self.cfg.paths.true_psf:
            return None
        return ExportRepository.read_kernel(self.cfg.paths.true_psf)


def write_metrics(exports: ExportRepository, report: MetricsReport) -> None:
    exports.write_rows(FileConst.METRICS, [report.scalars()])
    exports.write_table(
        FileConst.PSNR_PER_BAND,
        pd.DataFrame({"band": np.arange(report.psnr_per_band.size), "psnr_db": report.psnr_per_band}),
    )
    for name, values in report.maps.items():
        exports.write_heatmap(f"{name}_map", values)


class EvaluationService:
    def __init__(self, out: PathLike):
        self.exports = ExportRepository(out)

    def run(self, ref_path: PathLike, est_path: PathLike, ratio: int) -> MetricsReport:
        cubes = CubeRepository()
        ref, est = cubes.load(ref_path), cubes.load(est_path)
        report = evaluate(ref, est, ratio)
        write_metrics(self.exports, report)
        self.exports.write_manifest(
            RunManifest(
                command="evaluate",
                shapes={"reference": list(ref.shape), "estimate": list(est.shape)},
                details={"ratio": ratio, **report.scalars()},
            )
        )
        return report


class GradCheckService:
    """Finite-difference check of every parameter group on a small seeded scene."""

    def __init__(self, seed: int = 0, train_cfg: Optional[TrainConfig] = None):
        self.seed = seed
        self.train_cfg = (train_cfg or TrainConfig()).model_copy(
            update={"p": GradCheckConst.ENDMEMBERS, "seed": seed}
        )

    def run(
        self,
        step: float = GradCheckConst.STEP,
        tolerance: float = GradCheckConst.TOLERANCE,
        samples: int = GradCheckConst.SAMPLES_PER_GROUP,
    ) -> FdCheckReport:
        scene_cfg = SceneConfig(
            size=GradCheckConst.SIZE,
            bands=GradCheckConst.BANDS,
            p_true=GradCheckConst.ENDMEMBERS,
            ratio=GradCheckConst.RATIO,
            seed=self.seed,
        )
        scene, triplet = gen_scene(scene_cfg)
        Z, Y = triplet.lrhsi.data, triplet.hrmsi.data
        params = fusion_net.init_params(
            Z, Y, scene.coverage, self.train_cfg.p, np.random.default_rng(self.seed),
            self.train_cfg.hidden_widths, self.train_cfg.leaky_slope,
        )
        loss_fn = grad_check_loss_fn(Z, Y, params, self.train_cfg)
        report = fd_check(
            params.as_dict(), loss_fn, h=step, tolerance=tolerance, samples_per_group=samples,
            seed=self.seed, rel_floor=GradCheckConst.REL_FLOOR, masks=params.masks(),
        )
        for row in report.rows():
            logger.info(
                "group %-6s sampled %3d, kink-skipped %3d, max rel error %.3e -> %s",
                row["group"], row["sampled"], row["kink_skipped"], row["max_rel_error"],
                "pass" if row["passed"] else "FAIL",
            )
        return report

    @staticmethod
    def write_report(out: PathLike, report: FdCheckReport) -> None:
        exports = ExportRepository(out)
        exports.write_rows(FileConst.GRAD_REPORT, report.rows(), columns=CsvColumnsConst.GRAD_REPORT)
        exports.write_manifest(
            RunManifest(command="grad-check", details={"passed": report.passed, "tolerance": report.tolerance})
        )


class SweepService:
    """Endmember-count and loss-weight studies on one triplet with ground truth."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.exports = ExportRepository(cfg.paths.out)

    def _inputs(self) -> FusionInputs:
        inputs = load_fusion_inputs(self.cfg)
        if inputs.reference is None:
            raise ConfigurationError("Sweeps need --reference to score each run")
        return inputs

    def endmembers(self, p_values: Sequence[int], repeats: int) -> pd.DataFrame:
        inputs = self._inputs()
        frame = diagnostics.sweep_endmembers(
            inputs.Z.data, inputs.Y.data, inputs.coverage, inputs.reference.data,
            self.cfg.train, p_values, repeats,
        )
        self._write(FileConst.ENDMEMBER_SWEEP, frame, "p", "sweep-endmembers")
        return frame

    def weights(self, weight: str, values: Sequence[float], repeats: int) -> pd.DataFrame:
        inputs = self._inputs()
        frame = diagnostics.sweep_weights(
            inputs.Z.data, inputs.Y.data, inputs.coverage, inputs.reference.data,
            self.cfg.train, weight, values, repeats,
        )
        self._write(FileConst.WEIGHT_SWEEP, frame, "value", "sweep-weights")
        return frame

    def _write(self, name: str, frame: pd.DataFrame, key: str, command: str) -> None:
        self.exports.write_json(FileConst.EFFECTIVE_CONFIG, self.cfg.model_dump(mode="json"))
        self.exports.write_table(name, frame)
        self.exports.write_table(FileConst.SWEEP_SUMMARY, diagnostics.summarise_sweep(frame, key))
        self.exports.write_manifest(RunManifest(command=command, seed=self.cfg.train.seed))


def parse_number_list(raw: str, cast=float) -> List:
    try:
        values = [cast(item) for item in raw.replace(" ", "").split(",") if item]
    except ValueError:
        raise ConfigurationError(f"Cannot parse {raw!r} as a comma-separated list")
    if not values:
        raise ConfigurationError("Expected at least one value")
    return values
