"""Pydantic schemas for validated configuration objects."""

from enum import Enum
from typing import Any, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from greedy_predict.core.config import settings


def _upper_key(value: Any, members: type[Enum]) -> Any:
    """Case-insensitive lookup of an enum member by value."""
    if isinstance(value, str):
        for member in members:
            if member.value.lower() == value.strip().lower():
                return member.value
    return value


# ---- Algorithms ----
class Algorithm(str, Enum):
    PGA = "PGA"
    OGA = "OGA"
    RGA = "RGA"
    CGA = "CGA"
    FWA = "FWA"


class WeightRule(str, Enum):
    fixed = "fixed"
    line_search = "line_search"


class AlgoConfig(BaseModel):
    """Settings for one greedy fit."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    algorithm: Algorithm
    m_max: int = Field(100, ge=1)
    nu: float = Field(0.1, gt=0.0, le=1.0)
    b_bar: Optional[float] = Field(None, gt=0.0)
    weights: WeightRule = WeightRule.fixed
    simplex: bool = False
    corr_tol: float = Field(default_factory=lambda: settings.CORR_TOL, ge=0.0)
    proj_tol: float = Field(default_factory=lambda: settings.PROJ_TOL, ge=0.0)
    literal_vectorized_rga: bool = False

    @field_validator("algorithm", mode="before")
    @classmethod
    def _algorithm_case(cls, v: Any) -> Any:
        return _upper_key(v, Algorithm)

    @model_validator(mode="before")
    @classmethod
    def _simplex_budget(cls, data: Any) -> Any:
        # The simplex CGA is defined on the unit simplex.
        if isinstance(data, dict) and data.get("simplex"):
            algo = _upper_key(data.get("algorithm"), Algorithm)
            if algo == Algorithm.CGA.value:
                data = {**data, "b_bar": 1.0}
        return data

    @model_validator(mode="after")
    def _check_combination(self) -> "AlgoConfig":
        constrained = self.algorithm in (Algorithm.CGA, Algorithm.FWA)
        if constrained and self.b_bar is None:
            raise ValueError(f"b_bar is required for {self.algorithm.value}")
        if self.simplex and not constrained:
            raise ValueError("simplex applies to CGA and FWA only")
        if self.weights == WeightRule.line_search and self.algorithm not in (
            Algorithm.RGA, Algorithm.CGA, Algorithm.FWA,
        ):
            raise ValueError("line_search weights apply to RGA, CGA and FWA only")
        if self.literal_vectorized_rga and self.algorithm != Algorithm.RGA:
            raise ValueError("literal_vectorized_rga applies to RGA only")
        return self


# ---- Model selection ----
class Criterion(str, Enum):
    AIC = "AIC"
    AICC = "AICC"


class DfMethod(str, Enum):
    nonzero = "nonzero"
    rank = "rank"


class CvScheme(str, Enum):
    contiguous_blocks = "contiguous_blocks"
    random = "random"
    holdout = "holdout"


class CvPlan(BaseModel):
    """Cross-validation plan over a grid of m or b_bar candidates."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    folds: int = Field(5, ge=2)
    scheme: CvScheme = CvScheme.contiguous_blocks
    grid: Tuple[float, ...] = Field(..., min_length=1)
    seed: int = 0

    @field_validator("grid")
    @classmethod
    def _grid_positive(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        if any(g <= 0 for g in v):
            raise ValueError("grid values must be positive")
        return v


# ---- Simulation ----
class ThetaCase(str, Enum):
    ID = "ID"
    WD = "WD"
    SD = "SD"
    LongMemory = "LongMemory"


class CoeffScheme(str, Enum):
    LowDim = "LowDim"
    EqualSmall = "EqualSmall"
    Decay = "Decay"
    SlowDecay = "SlowDecay"
    Custom = "Custom"


class DgpSpec(BaseModel):
    """Data-generating process of the Monte Carlo study."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    n: int = Field(100, ge=1)
    K: int = Field(100, ge=1)
    theta_case: ThetaCase = ThetaCase.ID
    epsilon: float = Field(0.5, gt=0.0, le=1.0)
    omega: float = Field(0.0, ge=0.0, lt=1.0)
    sigma2: float = Field(8.0, gt=0.0)
    coeff_scheme: CoeffScheme = CoeffScheme.LowDim
    custom_coeffs: Optional[Tuple[float, ...]] = None
    seed: int = 0

    @field_validator("theta_case", mode="before")
    @classmethod
    def _case_key(cls, v: Any) -> Any:
        return _upper_key(v, ThetaCase)

    @field_validator("coeff_scheme", mode="before")
    @classmethod
    def _scheme_key(cls, v: Any) -> Any:
        return _upper_key(v, CoeffScheme)

    @model_validator(mode="after")
    def _check_custom(self) -> "DgpSpec":
        if self.coeff_scheme == CoeffScheme.Custom:
            if self.custom_coeffs is None or len(self.custom_coeffs) != self.K:
                raise ValueError("Custom coefficient scheme needs K custom_coeffs")
        return self


# ---- Command-line run configuration ----
class RunConfig(BaseModel):
    """Flat key=value configuration shared by every CLI command.

    Each field is a CLI flag (``--name=value``) and a key of the optional
    config file. Unknown keys are rejected.
    """

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    # fitting
    algorithm: Algorithm = Field(Algorithm.OGA, description="PGA, OGA, RGA, CGA or FWA")
    m_max: int = Field(100, ge=1, description="iteration budget m")
    nu: float = Field(0.1, gt=0.0, le=1.0, description="PGA shrinkage, in (0,1]")
    b_bar: Optional[float] = Field(None, gt=0.0, description="l1 budget for CGA/FWA")
    weights: WeightRule = Field(WeightRule.fixed, description="fixed or line_search")
    simplex: bool = Field(False, description="unit-simplex variant of CGA/FWA")
    literal_vectorized_rga: bool = Field(False, description="RGA with the 1/j factor on the new coefficient")
    corr_tol: float = Field(default_factory=lambda: settings.CORR_TOL, ge=0.0, description="early stop on max abs correlation")
    proj_tol: float = Field(default_factory=lambda: settings.PROJ_TOL, ge=0.0, description="OGA collinearity pivot threshold")
    center: bool = Field(False, description="mean-center regressors before scaling")

    # data
    target: Optional[str] = Field(None, description="response column of the CSV file")
    out_dir: str = Field(".", description="directory for output files")

    # stopping rules
    criterion: Criterion = Field(Criterion.AICC, description="AIC or AICC")
    df_method: DfMethod = Field(DfMethod.nonzero, description="CGA/FWA degrees of freedom: nonzero or rank")
    coefficients_at: str = Field("final", description="final or criterion: step reported in coefficients.csv")
    gdf_reps: int = Field(default_factory=lambda: settings.GDF_REPS, ge=2, description="perturbation refits for RGA df")

    # cross-validation
    folds: int = Field(5, ge=2, description="number of folds")
    cv_scheme: CvScheme = Field(CvScheme.contiguous_blocks, description="contiguous_blocks, random or holdout")
    cv_grid: Optional[List[float]] = Field(None, description="comma list or a:b range of m or b_bar candidates")
    refit: Optional[bool] = Field(
        None, description="table: refit on the whole sample at the chosen value (default: only for k-fold schemes)"
    )

    # simulation
    preset: Optional[str] = Field(None, description="table2, table3, table4 or table5")
    case: ThetaCase = Field(ThetaCase.ID, description="ID, WD, SD or LongMemory")
    epsilon: float = Field(0.5, gt=0.0, le=1.0, description="LongMemory decay parameter")
    omega: float = Field(0.0, ge=0.0, lt=1.0, description="cross-sectional correlation base")
    sigma2: float = Field(8.0, gt=0.0, description="signal to noise ratio")
    n: int = Field(100, ge=1, description="sample size")
    K: int = Field(100, ge=1, description="number of regressors")
    coeff_scheme: CoeffScheme = Field(CoeffScheme.LowDim, description="LowDim, EqualSmall, Decay or SlowDecay")
    algorithms: List[Algorithm] = Field(default_factory=lambda: list(Algorithm), description="comma list of algorithms to tabulate")
    reps: int = Field(100, ge=1, description="Monte Carlo replications per cell")
    n_eval: int = Field(default_factory=lambda: settings.N_EVAL, ge=1, description="evaluation sample size for MISE")
    tune: bool = Field(True, description="cross-validate m or b_bar in each replication")
    record_timings: bool = Field(False, description="add mean runtime to report.csv")
    threads: Optional[int] = Field(None, ge=0, description="worker processes (0 = sequential)")

    seed: int = Field(0, description="master random seed")

    @field_validator("algorithm", mode="before")
    @classmethod
    def _algorithm_case(cls, v: Any) -> Any:
        return _upper_key(v, Algorithm)

    @field_validator("criterion", mode="before")
    @classmethod
    def _criterion_case(cls, v: Any) -> Any:
        return _upper_key(v, Criterion)

    @field_validator("case", mode="before")
    @classmethod
    def _case_key(cls, v: Any) -> Any:
        return _upper_key(v, ThetaCase)

    @field_validator("coeff_scheme", mode="before")
    @classmethod
    def _scheme_key(cls, v: Any) -> Any:
        return _upper_key(v, CoeffScheme)

    @field_validator("algorithms", mode="before")
    @classmethod
    def _split_algorithms(cls, v: Any) -> Any:
        if isinstance(v, str):
            v = [p for p in v.split(",") if p.strip()]
        if isinstance(v, (list, tuple)):
            return [_upper_key(p, Algorithm) for p in v]
        return v

    @field_validator("cv_grid", mode="before")
    @classmethod
    def _parse_grid(cls, v: Any) -> Any:
        if not isinstance(v, str):
            return v
        text = v.strip()
        if not text:
            return None
        if ":" in text:
            lo, hi = (int(p) for p in text.split(":", 1))
            return [float(m) for m in range(lo, hi + 1)]
        return [float(p) for p in text.split(",") if p.strip()]

    @field_validator("coefficients_at")
    @classmethod
    def _check_step_choice(cls, v: str) -> str:
        if v not in ("final", "criterion"):
            raise ValueError("coefficients_at must be 'final' or 'criterion'")
        return v

    @field_validator("preset")
    @classmethod
    def _check_preset(cls, v: Optional[str]) -> Optional[str]:
        if v is not None and v not in ("table2", "table3", "table4", "table5"):
            raise ValueError("preset must be one of table2, table3, table4, table5")
        return v

    def algo_config(self, algorithm: Optional[Algorithm] = None, **overrides: Any) -> AlgoConfig:
        """Build the AlgoConfig for one algorithm from this run configuration."""
        algo = algorithm or self.algorithm
        values = {
            "algorithm": algo,
            "m_max": self.m_max,
            "nu": self.nu,
            "b_bar": self.b_bar,
            "weights": self.weights if algo in (Algorithm.RGA, Algorithm.CGA, Algorithm.FWA) else WeightRule.fixed,
            "simplex": self.simplex if algo in (Algorithm.CGA, Algorithm.FWA) else False,
            "corr_tol": self.corr_tol,
            "proj_tol": self.proj_tol,
            "literal_vectorized_rga": self.literal_vectorized_rga and algo == Algorithm.RGA,
        }
        values.update(overrides)
        return AlgoConfig(**values)


def documented_keys() -> List[Tuple[str, str]]:
    """(key, description) for every RunConfig field, in declaration order."""
    return [(name, field.description or "") for name, field in RunConfig.model_fields.items()]
