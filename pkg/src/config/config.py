import os
from dotenv import load_dotenv
load_dotenv()

THREAD_ENV_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)


def get_env(key: str, default: str = None, required: bool = False) -> str:
    value = os.getenv(key, default)
    if required and not value:
        raise ValueError(f"Missing required environment variable: {key}")
    return value


def get_bool_env(key: str, default: bool = False) -> bool:
    value = os.getenv(key)
    if value is None or value == "":
        return default
    return value.strip().lower() in {"1", "true", "yes", "on"}


def apply_thread_hint(threads: int | None, reproducible: bool = False) -> int | None:
    """Export BLAS/OpenMP thread counts.

    Only effective before numpy is imported for the first time, which is why
    the CLI imports every numeric module lazily inside its commands.
    Reproducible mode pins a single thread so reductions run in a fixed order.
    """
    if reproducible:
        threads = 1
    if threads is None:
        env_threads = get_env("SPECFUSE_THREADS")
        threads = int(env_threads) if env_threads else None
    if threads is None:
        return None
    if threads < 1:
        raise ValueError(f"Thread count must be >= 1, got {threads}")
    for var in THREAD_ENV_VARS:
        os.environ[var] = str(threads)
    return threads


class Settings:
    """Environment-backed switches, read on every access."""

    @property
    def reproducible(self) -> bool:
        return get_bool_env("SPECFUSE_REPRODUCIBLE", default=False)

    @property
    def slow_tests(self) -> bool:
        return get_bool_env("SPECFUSE_SLOW_TESTS", default=False)


settings = Settings()
