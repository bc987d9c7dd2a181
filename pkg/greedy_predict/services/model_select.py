"""Model selection service: degrees of freedom, AIC / corrected AIC, perturbation df and cross-validation."""

import logging
import math
from typing import Callable, Iterator, List, Optional, Tuple

import numpy as np
from sklearn.model_selection import KFold

from greedy_predict.core.config import settings
from greedy_predict.core.exceptions import (
    AiccUndefinedError,
    ConfigError,
    EmptyFoldError,
    NeedsRawDesignError,
)
from greedy_predict.models.design import RawDesign, StandardizedDesign, SuffStats
from greedy_predict.models.path import CvResult, GreedyPath, IcRecord, IcTrace
from greedy_predict.schemas.schemas import (
    AlgoConfig,
    Algorithm,
    Criterion,
    CvPlan,
    CvScheme,
    DfMethod,
)
from greedy_predict.services.design_matrix import standardize, suffstats_from
from greedy_predict.services.greedy_fit import fit, predict_steps

logger = logging.getLogger("greedy_predict")

_NONZERO = 1e-12


# ---- Degrees of freedom ----

def _pga_df_trace(design: StandardizedDesign, path: GreedyPath, m: int) -> np.ndarray:
    """Trace of I_n - prod_j (I_n - nu P_{s(j)}) for every prefix 1..m.

    Each factor is applied to the running n x n residual operator as a
    rank-one update.
    """
    x = design.x_std
    nu = path.config.nu
    resid = np.eye(design.n)
    out = np.empty(m)
    for j in range(m):
        col = x[:, path.selected[j]]
        resid -= (nu / (col @ col)) * np.outer(col, col @ resid)
        out[j] = design.n - np.trace(resid)
    return out


def _fitted_std(x_std: np.ndarray, path: GreedyPath, steps: np.ndarray) -> np.ndarray:
    table = np.vstack([np.zeros(path.K), path.coeffs])
    return x_std @ table[np.minimum(steps, len(path))].T


def path_fitter(design: StandardizedDesign, cfg: AlgoConfig, m: int) -> Callable[[np.ndarray], np.ndarray]:
    """Map y to the (n, m) fitted values at steps 1..m of a refit on ``design.x_std``."""
    x = design.x_std
    d = x.T @ x / design.n
    d = 0.5 * (d + d.T)

    def _refit(y: np.ndarray) -> np.ndarray:
        stats = SuffStats(c=x.T @ y / design.n, d=d, n=design.n, sy2=float(y @ y) / design.n)
        path = fit(stats, cfg)
        return _fitted_std(x, path, np.arange(1, m + 1))

    return _refit


def estimate_gdf(
    fitter: Callable[[np.ndarray], np.ndarray],
    design: StandardizedDesign,
    perturbation_sd: float,
    reps: int,
    seed: int = 0,
):
    """Generalized degrees of freedom by perturbed refits.

    ``fitter`` maps a response vector to fitted values, either an n-vector or
    an (n, M) matrix of several fits; the estimate has the matching shape.
    Each observation's sensitivity is the slope of its fitted values on its
    perturbations across the ``reps`` refits.
    """
    if reps < 2:
        raise ConfigError("reps must be at least 2")
    if perturbation_sd <= 0:
        raise ConfigError("perturbation_sd must be positive")
    rng = np.random.default_rng(seed)
    y = design.y
    deltas = rng.normal(0.0, perturbation_sd, size=(reps, design.n))
    fits = np.stack([np.asarray(fitter(y + delta), dtype=np.float64) for delta in deltas])
    dc = deltas - deltas.mean(axis=0)
    fc = fits - fits.mean(axis=0)
    var = np.sum(dc * dc, axis=0)
    if fc.ndim == 2:
        slopes = np.sum(dc * fc, axis=0) / var
        return float(slopes.sum())
    slopes = np.einsum("ti,tim->im", dc, fc) / var[:, None]
    return slopes.sum(axis=0)


def _rga_df_path(design: StandardizedDesign, path: GreedyPath, m: int, reps: Optional[int], seed: int) -> np.ndarray:
    reps = settings.GDF_REPS if reps is None else reps
    tau = settings.GDF_TAU_FRACTION * float(np.std(design.y, ddof=1)) if design.n > 1 else 0.0
    if tau <= 0:
        tau = settings.GDF_TAU_FRACTION
    cfg = path.config.model_copy(update={"m_max": m})
    return np.atleast_1d(estimate_gdf(path_fitter(design, cfg, m), design, tau, reps, seed))


def _constrained_df(design: Optional[StandardizedDesign], b: np.ndarray, df_method: DfMethod) -> float:
    active = np.flatnonzero(np.abs(b) > _NONZERO)
    if df_method == DfMethod.nonzero or active.size == 0:
        return float(active.size)
    if design is None:
        raise NeedsRawDesignError("rank degrees of freedom need the training design")
    x_s = design.x_std[:, active]
    return float(np.linalg.matrix_rank(x_s.T @ x_s / design.n))


def _df_path(
    design: Optional[StandardizedDesign],
    path: GreedyPath,
    m: int,
    df_method: DfMethod = DfMethod.nonzero,
    gdf_reps: Optional[int] = None,
    seed: int = 0,
) -> np.ndarray:
    algo = path.config.algorithm
    if algo == Algorithm.OGA:
        return np.array([float(np.unique(path.selected[:j]).size) for j in range(1, m + 1)])
    if algo in (Algorithm.CGA, Algorithm.FWA):
        return np.array([_constrained_df(design, path.coeffs[j - 1], df_method) for j in range(1, m + 1)])
    if design is None:
        raise NeedsRawDesignError(f"{algo.value} degrees of freedom need the training design")
    if algo == Algorithm.PGA:
        return _pga_df_trace(design, path, m)
    return _rga_df_path(design, path, m, gdf_reps, seed)


def dof(
    algorithm: Algorithm,
    design: Optional[StandardizedDesign],
    path: GreedyPath,
    at_step: int,
    df_method: DfMethod = DfMethod.nonzero,
    gdf_reps: Optional[int] = None,
    seed: int = 0,
) -> float:
    """Degrees of freedom of the fit after ``at_step`` steps.

    Raises:
        NeedsRawDesignError: PGA/RGA (or rank df) without the training design.
    """
    if Algorithm(algorithm) != path.config.algorithm:
        raise ConfigError(f"path was fitted with {path.config.algorithm.value}, not {algorithm}")
    if at_step < 0 or at_step > len(path):
        raise ConfigError(f"step {at_step} outside path of length {len(path)}")
    if at_step == 0:
        return 0.0
    return float(_df_path(design, path, at_step, df_method, gdf_reps, seed)[-1])


# ---- Information criteria ----

def aic(rss_n: float, df: float, n: int) -> float:
    """ln(rss_n) + 2 df / n."""
    if rss_n <= 0:
        raise ConfigError(f"rss_n must be positive, got {rss_n}")
    return math.log(rss_n) + 2.0 * df / n


def aicc(rss_n: float, df: float, n: int) -> float:
    """ln(rss_n) + (1 + df/n) / (1 - (df + 2)/n).

    Raises:
        AiccUndefinedError: (df + 2) / n >= 1.
    """
    if rss_n <= 0:
        raise ConfigError(f"rss_n must be positive, got {rss_n}")
    denom = 1.0 - (df + 2.0) / n
    if denom <= 0:
        raise AiccUndefinedError(f"corrected AIC undefined for df={df:g}, n={n}")
    return math.log(rss_n) + (1.0 + df / n) / denom


def select_m_by_ic(
    path: GreedyPath,
    design: Optional[StandardizedDesign],
    criterion: Criterion = Criterion.AICC,
    df_method: DfMethod = DfMethod.nonzero,
    gdf_reps: Optional[int] = None,
    seed: int = 0,
) -> IcTrace:
    """AIC and corrected AIC at every step of ``path``; ties go to the smaller m.

    The corrected AIC scan stops at the last step where it is defined.
    """
    m = len(path)
    if m == 0:
        raise ConfigError("cannot select a step on an empty path")
    criterion = Criterion(criterion)
    if design is None:
        raise NeedsRawDesignError("information criteria need the training design")
    n = design.n
    dfs = _df_path(design, path, m, df_method, gdf_reps, seed)
    records: List[IcRecord] = []
    valid_aicc = True
    for j in range(1, m + 1):
        rss = max(float(path.rss[j - 1]), 1e-300)
        df = max(float(dfs[j - 1]), 0.0)
        value_aicc = math.nan
        if valid_aicc:
            try:
                value_aicc = aicc(rss, df, n)
            except AiccUndefinedError:
                valid_aicc = False
        records.append(IcRecord(m=j, rss_n=float(path.rss[j - 1]), df=df, aic=aic(rss, df, n), aicc=value_aicc))

    aics = np.array([r.aic for r in records])
    aiccs = np.array([r.aicc for r in records])
    chosen_aic = int(np.argmin(aics)) + 1
    chosen_aicc = None if np.all(np.isnan(aiccs)) else int(np.nanargmin(aiccs)) + 1
    logger.debug("IC selection: AIC m=%d, AICC m=%s", chosen_aic, chosen_aicc)
    return IcTrace(tuple(records), chosen_aic, chosen_aicc, criterion.value)


# ---- Cross-validation ----

def holdout_split(n: int, folds: int) -> Tuple[np.ndarray, np.ndarray]:
    """Leading estimation rows and the trailing n // folds validation rows."""
    n_val = n // folds
    if n_val == 0 or n_val == n:
        raise EmptyFoldError(f"{n} rows cannot be split into estimation and validation samples")
    idx = np.arange(n)
    return idx[: n - n_val], idx[n - n_val:]


def _splits(n: int, plan: CvPlan) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
    if n < plan.folds:
        raise EmptyFoldError(f"{n} rows cannot fill {plan.folds} folds")
    if plan.scheme == CvScheme.holdout:
        yield holdout_split(n, plan.folds)
        return
    shuffle = plan.scheme == CvScheme.random
    kfold = KFold(n_splits=plan.folds, shuffle=shuffle, random_state=plan.seed if shuffle else None)
    yield from kfold.split(np.zeros((n, 1)))


def cross_validate(raw: RawDesign, cfg: AlgoConfig, plan: CvPlan, center: bool = False) -> CvResult:
    """k-fold validation MSE over a grid of m (PGA/OGA/RGA) or b_bar (CGA/FWA).

    Scales are recomputed on each training fold and applied to its validation
    fold. For m grids one fit at the largest m serves every candidate. Returns
    the candidate with the smallest mean validation MSE, the smaller on ties.
    """
    tune_budget = cfg.algorithm in (Algorithm.CGA, Algorithm.FWA)
    if tune_budget:
        candidates = np.array(sorted(set(plan.grid)), dtype=np.float64)
    else:
        candidates = np.array(sorted({int(round(g)) for g in plan.grid}), dtype=np.float64)
        if candidates[0] < 1:
            raise ConfigError("m candidates must be at least 1")

    fold_mse: List[np.ndarray] = []
    for train_idx, val_idx in _splits(raw.n, plan):
        if train_idx.size == 0 or val_idx.size == 0:
            raise EmptyFoldError("cross-validation fold has no rows")
        train = standardize(raw.rows(train_idx), center=center)
        stats = suffstats_from(train)
        val = raw.rows(val_idx)
        if tune_budget:
            preds = np.column_stack([
                predict_steps(fit(stats, cfg.model_copy(update={"b_bar": float(b)})), np.array([cfg.m_max]), val.x)[:, 0]
                for b in candidates
            ])
        else:
            m_top = int(candidates[-1])
            path = fit(stats, cfg.model_copy(update={"m_max": m_top}))
            preds = predict_steps(path, candidates.astype(np.int64), val.x)
        resid = val.y[:, None] - preds
        fold_mse.append(np.mean(resid * resid, axis=0))

    folds = np.vstack(fold_mse)
    mean_mse = folds.mean(axis=0)
    best = int(np.argmin(mean_mse))
    chosen = float(candidates[best])
    logger.debug(
        "%s cross-validation over %d candidates: chose %g (mse %.6g)",
        cfg.algorithm.value, candidates.size, chosen, mean_mse[best],
    )
    return CvResult(chosen=chosen, candidates=candidates, mean_mse=mean_mse, fold_mse=folds)
