"""Process-wide configuration from environment variables."""

from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Settings loaded from ``GREEDY_PREDICT_*`` environment variables or ``.env``."""

    # App
    APP_NAME: str = "greedy_predict"
    DEBUG: bool = False
    LOG_LEVEL: str = "INFO"

    # Parallelism (0 = sequential)
    THREADS: int = 0

    # Numerical tolerances
    CORR_TOL: float = 1e-12
    PROJ_TOL: float = 1e-10
    DEGENERATE_NORM: float = 1e-12

    # Restricted eigenvalue oracle
    SUBSET_CAP: int = 10**6

    # Degrees of freedom by perturbation
    GDF_REPS: int = 20
    GDF_TAU_FRACTION: float = 0.5

    # Simulation tables
    N_EVAL: int = 2000
    MAX_FAILURE_FRACTION: float = 0.10

    class Config:
        env_prefix = "GREEDY_PREDICT_"
        env_file = ".env"
        env_file_encoding = "utf-8"
        case_sensitive = True


settings = Settings()
