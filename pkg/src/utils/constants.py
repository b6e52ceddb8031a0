from enum import Enum, IntEnum
from typing import Any


class ExitCodeConst(IntEnum):
    SUCCESS = 0
    CHECK_FAILED = 1
    USER_ERROR = 2
    DIVERGENCE = 3


class NumericConst:
    EPS_NORM = 1e-8         # SRF normalisation denominator guard
    EPS_KL = 1e-6           # squashing before the KL logs
    EPS_MRAE = 1e-3
    PSNR_CAP_DB = 100.0
    IO_TOLERANCE = 1e-9
    KERNEL_SUM_TOLERANCE = 1e-12


class TrainDefaultsConst:
    ITERATIONS = 10000
    LR0 = 5e-3
    ADAM_BETA1 = 0.9
    ADAM_BETA2 = 0.999
    ADAM_EPS = 1e-8
    ALPHA = 10.0
    BETA = 10.0
    GAMMA = 100.0
    MU = 1.0                # sum-to-one weight for mean-reduced terms
    NU = 0.001
    SPARSITY_TARGET = 0.0001
    ENDMEMBERS = 100
    HIDDEN_WIDTHS = (128, 64)
    LEAKY_SLOPE = 0.02
    METRICS_EVERY = 100
    LOG_EVERY = 500


class SceneDefaultsConst:
    SIZE = 48
    BANDS = 31
    ENDMEMBERS = 4
    RATIO = 4
    SIGMA = 0.5
    MSI_BANDS = 3
    WAVELENGTH_START_NM = 400.0
    WAVELENGTH_STOP_NM = 700.0
    MIN_ENDMEMBER_ANGLE_DEG = 10.0
    MIN_FIELD_SIZE = 8


class GradCheckConst:
    SIZE = 8
    BANDS = 12
    ENDMEMBERS = 4
    RATIO = 2
    STEP = 1e-5
    TOLERANCE = 1e-4
    SAMPLES_PER_GROUP = 64
    # relative error denominator never drops below this magnitude
    REL_FLOOR = 1e-5


class ReductionConst(str, Enum):
    MEAN = "mean"
    SUM = "sum"


class ConstraintConst(str, Enum):
    CLAMP = "clamp"
    SOFTMAX = "softmax"


class AblationConst(str, Enum):
    DROP_ZB = "drop_Zb"
    DROP_ZA = "drop_Za"
    DROP_Y = "drop_Y"
    DROP_YLR = "drop_Ylr"

    @classmethod
    def parse(cls, v: Any) -> "AblationConst":
        if isinstance(v, cls):
            return v
        if isinstance(v, str):
            for m in cls:
                if v in {m.value, m.name, m.value.lower()}:
                    return m
        raise ValueError(f"cannot convert {v!r} to AblationConst")


class LossTermConst(str, Enum):
    ZA = "L_Za"
    ZB = "L_Zb"
    Y = "L_Y"
    YLR = "L_Ylr"
    SUM2ONE = "L_sum2one"
    SPARSE = "L_sparse"
    TOTAL = "L_total"


class ParamGroupConst(str, Enum):
    ENC_LR = "enc_lr"
    ENC_HR = "enc_hr"
    ENDMEMBERS = "E"
    PSF = "psf"
    SRF = "srf"

    @classmethod
    def constrained(cls) -> tuple["ParamGroupConst", ...]:
        return (cls.ENDMEMBERS, cls.PSF, cls.SRF)


class FileConst:
    CUBE_SUFFIX = ".cube"
    SIDECAR_SUFFIX = ".json"
    CHECKPOINT = "checkpoint.hyconet"
    CHECKPOINT_MAGIC = b"HYCONET1"
    MANIFEST = "manifest.json"
    EFFECTIVE_CONFIG = "effective_config.json"
    TRAINING_LOG = "training_log.csv"
    METRICS = "metrics.csv"
    PSNR_PER_BAND = "psnr_per_band.csv"
    GRAD_REPORT = "grad_check.csv"
    PSF_LEARNED = "psf_learned.csv"
    PSF_TRUE = "psf_true.csv"
    SRF_LEARNED = "srf_learned.csv"
    SRF_TRUE = "srf_true.csv"
    COVERAGE = "coverage.csv"
    ENDMEMBERS_TRUE = "endmembers_true.csv"
    ABUNDANCES_TRUE = "abundances_true.csv"
    ABUNDANCE_HISTOGRAM = "abundance_histogram.csv"
    ABUNDANCE_SUMMARY = "abundance_summary.csv"
    ENDMEMBER_SWEEP = "endmember_sweep.csv"
    WEIGHT_SWEEP = "weight_sweep.csv"
    SWEEP_SUMMARY = "sweep_summary.csv"
    HRHSI = "hrhsi"
    LRHSI = "lrhsi"
    HRMSI = "hrmsi"
    LRMSI = "lrmsi"
    FUSED = "fused"


class CubeFormatConst:
    DTYPE = "f32le"
    INTERLEAVE = "bsq"
    BYTES_PER_SAMPLE = 4


class CsvColumnsConst:
    TRAINING_LOG: list = [
        "iter", "lr", "L_total", "L_Za", "L_Zb", "L_Y", "L_Ylr", "L_sum2one", "L_sparse",
    ]
    TRAINING_METRICS: list = ["mPSNR", "mSAM"]
    COVERAGE: list = ["msi_band", "lambda_low_nm", "lambda_high_nm"]
    SRF_WEIGHTS: list = ["msi_band", "wavelength_nm", "weight"]
    GRAD_REPORT: list = ["group", "sampled", "kink_skipped", "max_rel_error", "passed"]
