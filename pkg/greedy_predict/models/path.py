"""Results: greedy iteration paths, information-criterion traces, bound checks, tables."""

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Tuple

import numpy as np
import pandas as pd

from greedy_predict.core.exceptions import ConfigError
from greedy_predict.schemas.schemas import AlgoConfig


class PathStep(NamedTuple):
    selected_index: int
    coeffs: np.ndarray
    rss_n: float


@dataclass(frozen=True, eq=False)
class GreedyPath:
    """Per-iteration trace of a greedy fit.

    Row j-1 of every array describes step j. ``excluded`` lists
    (step, index) pairs for regressors dropped by the OGA collinearity guard.
    """

    selected: np.ndarray
    coeffs: np.ndarray
    rss: np.ndarray
    weights: np.ndarray
    max_corr: np.ndarray
    config: AlgoConfig
    converged_at: Optional[int] = None
    scale: Optional[np.ndarray] = None
    means: Optional[np.ndarray] = None
    excluded: Tuple[Tuple[int, int], ...] = ()

    def __post_init__(self):
        for name in ("selected", "coeffs", "rss", "weights", "max_corr"):
            getattr(self, name).setflags(write=False)

    def __len__(self) -> int:
        return int(self.selected.shape[0])

    @property
    def K(self) -> int:
        return self.coeffs.shape[1]

    @property
    def l1(self) -> np.ndarray:
        return np.abs(self.coeffs).sum(axis=1)

    def coeffs_at(self, at_step: int) -> np.ndarray:
        """Coefficients after ``at_step`` steps (0 = the empty fit)."""
        if at_step < 0 or at_step > len(self):
            raise ConfigError(f"step {at_step} outside path of length {len(self)}")
        if at_step == 0:
            return np.zeros(self.K)
        return self.coeffs[at_step - 1]

    def step(self, j: int) -> PathStep:
        if j < 1 or j > len(self):
            raise ConfigError(f"step {j} outside path of length {len(self)}")
        return PathStep(int(self.selected[j - 1]), self.coeffs[j - 1], float(self.rss[j - 1]))

    @property
    def steps(self) -> Tuple[PathStep, ...]:
        return tuple(self.step(j) for j in range(1, len(self) + 1))


@dataclass(frozen=True)
class IcRecord:
    m: int
    rss_n: float
    df: float
    aic: float
    aicc: float


@dataclass(frozen=True)
class IcTrace:
    """AIC / corrected AIC along a path; aicc is NaN where undefined."""

    records: Tuple[IcRecord, ...]
    chosen_m_aic: int
    chosen_m_aicc: Optional[int]
    criterion: str = "AICC"

    @property
    def chosen_m(self) -> Optional[int]:
        return self.chosen_m_aicc if self.criterion == "AICC" else self.chosen_m_aic


@dataclass(frozen=True, eq=False)
class CvResult:
    chosen: float
    candidates: np.ndarray
    mean_mse: np.ndarray
    fold_mse: np.ndarray


@dataclass(frozen=True)
class BoundReport:
    algorithm: str
    m: int
    lhs: float
    rhs: float
    satisfied: bool
    slack_term: float
    oracle_objective: float = 0.0
    budget: float = 0.0


@dataclass(frozen=True, eq=False)
class MonteCarloReport:
    """One row per (cell, algorithm): mise_mean, mise_sd, reps, failures, ..."""

    frame: pd.DataFrame
    reps: int
    master_seed: int
    preset: Optional[str] = None
    errors: Tuple[str, ...] = field(default=(), compare=False)

    def cell(self, theta_case: str, omega: float, sigma2: float, n: int, algorithm: str) -> pd.Series:
        f = self.frame
        hit = f[
            (f["case"] == theta_case)
            & np.isclose(f["omega"], omega)
            & np.isclose(f["sigma2"], sigma2)
            & (f["n"] == n)
            & (f["algorithm"] == algorithm)
        ]
        if hit.empty:
            raise ConfigError(f"no cell ({theta_case}, {omega}, {sigma2}, {n}, {algorithm})")
        return hit.iloc[0]

    def failing_cells(self, max_fraction: float) -> pd.DataFrame:
        return self.frame[self.frame["failures"] > max_fraction * self.reps]
