"""Greedy fitting service: PGA, OGA, RGA, CGA and FWA on sufficient statistics.

Every fit consumes only (c, d, sy2). With coefficients b the residual
correlations are A = c - d b and the in-sample residual sum of squares is
|Y - F|_n^2 = sy2 - 2 b'c + b'd b. ``g`` below always holds d b, updated
one column at a time.
"""

import logging
from typing import Callable, Collection, Dict, List, Optional, Tuple, Union

import numpy as np
from scipy import linalg

from greedy_predict.core.exceptions import (
    AllExcludedError,
    ConfigError,
    DimensionMismatchError,
)
from greedy_predict.models.design import SuffStats
from greedy_predict.models.path import GreedyPath
from greedy_predict.schemas.schemas import AlgoConfig, Algorithm, WeightRule, _upper_key

logger = logging.getLogger("greedy_predict")

# Quadratic coefficients below this are treated as zero in the line searches.
_FLAT = 1e-14


def select_regressor(
    a: np.ndarray,
    excluded: Optional[Union[np.ndarray, Collection[int]]] = None,
    signed: bool = False,
) -> int:
    """Smallest index attaining max |a_k| (max a_k when ``signed``) over non-excluded k.

    ``excluded`` is a boolean mask of length K or a collection of indices.

    Raises:
        AllExcludedError: every index is excluded.
    """
    vals = np.asarray(a, dtype=np.float64) if signed else np.abs(a)
    if excluded is not None:
        vals = np.array(vals, dtype=np.float64, copy=True)
        if isinstance(excluded, np.ndarray) and excluded.dtype == bool:
            vals[excluded] = -np.inf
        else:
            idx = list(excluded)
            if idx:
                vals[idx] = -np.inf
        if np.all(np.isneginf(vals)):
            raise AllExcludedError("every regressor is excluded from selection")
    return int(np.argmax(vals))


class _Recorder:
    """Preallocated per-step arrays of a path."""

    def __init__(self, m_max: int, K: int):
        self.selected = np.zeros(m_max, dtype=np.int64)
        self.coeffs = np.zeros((m_max, K))
        self.weights = np.zeros(m_max)
        self.max_corr = np.zeros(m_max)
        self.length = 0

    def record(self, s: int, b: np.ndarray, w: float, max_corr: float, scale: float = 1.0) -> None:
        j = self.length
        self.selected[j] = s
        if scale == 1.0:
            self.coeffs[j] = b
        else:
            np.multiply(b, scale, out=self.coeffs[j])
        self.weights[j] = w
        self.max_corr[j] = max_corr
        self.length += 1

    def finish(
        self,
        stats: SuffStats,
        cfg: AlgoConfig,
        converged_at: Optional[int],
        excluded: Tuple[Tuple[int, int], ...] = (),
    ) -> GreedyPath:
        m = self.length
        coeffs = self.coeffs[:m].copy()
        rss = stats.sy2 - 2.0 * (coeffs @ stats.c) + np.sum((coeffs @ stats.d) * coeffs, axis=1)
        path = GreedyPath(
            selected=self.selected[:m].copy(),
            coeffs=coeffs,
            rss=np.maximum(rss, 0.0),
            weights=self.weights[:m].copy(),
            max_corr=self.max_corr[:m].copy(),
            config=cfg,
            converged_at=converged_at,
            scale=stats.scale,
            means=stats.means,
            excluded=excluded,
        )
        logger.debug(
            "%s fit: %d steps, rss_n=%.6g, converged_at=%s",
            cfg.algorithm.value,
            m,
            float(path.rss[-1]) if m else stats.sy2,
            converged_at,
        )
        return path


class _ScaledState:
    """Coefficients b = sigma * bt and d @ b = sigma * gt.

    Shrinking by (1 - w) only updates the scalar sigma.
    """

    # sigma is folded back into the vectors below this
    _FLOOR = 1e-100

    def __init__(self, K: int):
        self.bt = np.zeros(K)
        self.gt = np.zeros(K)
        self.sigma = 1.0
        self.work = np.empty(K)
        self._mag = np.empty(K)
        self._col = np.empty(K)

    def b(self) -> np.ndarray:
        return self.sigma * self.bt

    def g(self) -> np.ndarray:
        return self.sigma * self.gt

    def correlations(self, c: np.ndarray, keep: float) -> np.ndarray:
        """c - keep * g, written into ``work``."""
        np.multiply(self.gt, keep * self.sigma, out=self.work)
        np.subtract(c, self.work, out=self.work)
        return self.work

    def peak(self, signed: bool) -> Tuple[int, float]:
        """Selected index and max |a| of the last ``correlations``."""
        np.abs(self.work, out=self._mag)
        if signed:
            return int(self.work.argmax()), float(self._mag.max())
        s = int(self._mag.argmax())
        return s, float(self._mag[s])

    def step(self, keep: float, s: int, coef: float, d: np.ndarray) -> None:
        """b <- keep * b + coef * e_s."""
        self.sigma *= keep
        if self.sigma < self._FLOOR:
            self.bt *= self.sigma
            self.gt *= self.sigma
            self.sigma = 1.0
        if coef != 0.0:
            scaled = coef / self.sigma
            self.bt[s] += scaled
            # d is symmetric, so its row s is the contiguous copy of column s
            np.multiply(d[s], scaled, out=self._col)
            self.gt += self._col


def _require(cfg: AlgoConfig, algorithm: Algorithm) -> None:
    if cfg.algorithm != algorithm:
        raise ConfigError(f"config is for {cfg.algorithm.value}, not {algorithm.value}")


def fit_pga(stats: SuffStats, cfg: AlgoConfig) -> GreedyPath:
    """Pure greedy algorithm (L2-Boosting): b[s] += nu * A[s]."""
    _require(cfg, Algorithm.PGA)
    c, d = stats.c, stats.d
    b = np.zeros(stats.K)
    g = np.zeros(stats.K)
    rec = _Recorder(cfg.m_max, stats.K)
    converged_at = None
    for j in range(1, cfg.m_max + 1):
        a = c - g
        s = select_regressor(a)
        top = abs(a[s])
        if top < cfg.corr_tol:
            converged_at = j - 1
            break
        step = cfg.nu * a[s]
        b[s] += step
        g += step * d[:, s]
        rec.record(s, b, cfg.nu, top)
    return rec.finish(stats, cfg, converged_at)


def fit_oga(stats: SuffStats, cfg: AlgoConfig) -> GreedyPath:
    """Orthogonal greedy algorithm: OLS refit on the selected span after each selection.

    The Cholesky factor of d[S, S] grows by one row per selection. A candidate
    whose Schur-complement pivot d_ss - |l|^2 falls below ``proj_tol`` is
    permanently excluded.
    """
    _require(cfg, Algorithm.OGA)
    c, d = stats.c, stats.d
    K = stats.K
    b = np.zeros(K)
    g = np.zeros(K)
    chol = np.zeros((K, K))
    active: List[int] = []
    blocked = np.zeros(K, dtype=bool)
    excluded: List[Tuple[int, int]] = []
    rec = _Recorder(min(cfg.m_max, K), K)
    converged_at = None
    for j in range(1, cfg.m_max + 1):
        a = c - g
        free = ~blocked
        top = float(np.max(np.abs(a[free]))) if free.any() else 0.0
        if top < cfg.corr_tol:
            converged_at = j - 1
            break
        s = None
        while s is None:
            try:
                cand = select_regressor(a, excluded=blocked)
            except AllExcludedError:
                break
            p = len(active)
            if p:
                row = linalg.solve_triangular(chol[:p, :p], d[active, cand], lower=True)
            else:
                row = np.zeros(0)
            pivot = d[cand, cand] - row @ row
            blocked[cand] = True
            if pivot < cfg.proj_tol:
                excluded.append((j, cand))
                logger.debug("OGA step %d: regressor %d excluded, pivot %.3g", j, cand, pivot)
                continue
            chol[p, :p] = row
            chol[p, p] = np.sqrt(pivot)
            s = cand
        if s is None:
            converged_at = j - 1
            break
        active.append(s)
        p = len(active)
        factor = chol[:p, :p]
        z = linalg.solve_triangular(factor, c[active], lower=True)
        coef = linalg.solve_triangular(factor.T, z, lower=False)
        b = np.zeros(K)
        b[active] = coef
        g = d[:, active] @ coef
        rec.record(s, b, 1.0, top)
    return rec.finish(stats, cfg, converged_at, tuple(excluded))


def _fixed_weight(cfg: AlgoConfig, j: int) -> float:
    return 2.0 / (1.0 + j) if cfg.algorithm == Algorithm.FWA else 1.0 / j


def _relaxed_line_search(
    a: np.ndarray, g: np.ndarray, q: float, p: float, w_default: float,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-candidate minimizer of |R + wF - beta X_k|_n^2 over w in [0, 1] and beta.

    R = Y - F is the current residual, a = <R, X_k>, g = <F, X_k>,
    q = |F|_n^2 and p = <R, F>. Returns (w, beta, objective - |R|^2).
    """
    curv = q - g * g
    lin = p - a * g
    flat = curv <= _FLAT
    safe = np.where(flat, 1.0, curv)
    w = np.where(flat, np.where(lin < 0, 1.0, np.where(lin > 0, 0.0, w_default)), -lin / safe)
    w = np.clip(w, 0.0, 1.0)
    beta = a + w * g
    obj = w * w * curv + 2.0 * w * lin - a * a
    return w, beta, obj


def _face_minimizer(quad: np.ndarray, lin: np.ndarray) -> np.ndarray:
    """argmin over w in [0, 1] of w^2 quad + 2 w lin with quad >= 0."""
    flat = quad <= _FLAT
    safe = np.where(flat, 1.0, quad)
    w = np.where(flat, np.where(lin < 0, 1.0, 0.0), -lin / safe)
    return np.clip(w, 0.0, 1.0)


def _constrained_line_search(
    a: np.ndarray, g: np.ndarray, q: float, p: float, b_bar: float, simplex: bool, w_default: float,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-candidate minimizer of |R + wF - gamma X_k|_n^2 with |gamma| <= w b_bar.

    With ``simplex`` the constraint is 0 <= gamma <= w b_bar. The objective is
    a convex quadratic in (w, gamma); its minimum is either the unconstrained
    relaxed step (when feasible) or lies on a face gamma = sigma w b_bar.
    Returns (w, gamma, objective - |R|^2).
    """
    w_in, gam_in, obj_in = _relaxed_line_search(a, g, q, p, w_default)
    low = 0.0 if simplex else -b_bar
    feasible = (gam_in <= w_in * b_bar + 1e-15) & (gam_in >= w_in * low - 1e-15)
    best_obj = np.where(feasible, obj_in, np.inf)
    best_w = w_in.copy()
    best_gam = gam_in.copy()

    faces = [1.0, 0.0] if simplex else [1.0, -1.0]
    for sigma in faces:
        bound = sigma * b_bar
        quad = q + bound * bound - 2.0 * bound * g
        lin = p - bound * a
        w = _face_minimizer(quad, lin)
        obj = w * w * quad + 2.0 * w * lin
        better = obj < best_obj
        best_obj = np.where(better, obj, best_obj)
        best_w = np.where(better, w, best_w)
        best_gam = np.where(better, w * bound, best_gam)
    return best_w, best_gam, best_obj


def fit_rga(stats: SuffStats, cfg: AlgoConfig) -> GreedyPath:
    """Relaxed greedy algorithm: F_j = (1 - w_j) F_{j-1} + A[s] X^(s).

    With ``literal_vectorized_rga`` the new coefficient is w_j A[s]. With
    line-search weights (s, w, beta) jointly minimize the residual norm.
    """
    _require(cfg, Algorithm.RGA)
    c, d = stats.c, stats.d
    b = np.zeros(stats.K)
    g = np.zeros(stats.K)
    rec = _Recorder(cfg.m_max, stats.K)
    converged_at = None
    line_search = cfg.weights == WeightRule.line_search
    for j in range(1, cfg.m_max + 1):
        w = 1.0 / j
        if line_search:
            a = c - g
            top = float(np.max(np.abs(a)))
            if top < cfg.corr_tol:
                converged_at = j - 1
                break
            q = float(b @ g)
            p = float(b @ c) - q
            ws, betas, obj = _relaxed_line_search(a, g, q, p, w)
            s = int(np.argmin(obj))
            w = float(ws[s])
            coef = float(betas[s])
        else:
            a = c - (1.0 - w) * g
            s = select_regressor(a)
            top = abs(a[s])
            if top < cfg.corr_tol:
                converged_at = j - 1
                break
            coef = w * a[s] if cfg.literal_vectorized_rga else a[s]
        b *= 1.0 - w
        g *= 1.0 - w
        b[s] += coef
        g += coef * d[:, s]
        rec.record(s, b, w, top)
    return rec.finish(stats, cfg, converged_at)


def fit_cga(stats: SuffStats, cfg: AlgoConfig) -> GreedyPath:
    """Constrained greedy algorithm: relaxed steps with the step coefficient clipped to b_bar.

    The l1 norm of the coefficients never exceeds b_bar. The simplex variant
    (b_bar = 1) clips to [0, 1] and selects on the signed correlation.
    """
    _require(cfg, Algorithm.CGA)
    c, d = stats.c, stats.d
    b_bar = float(cfg.b_bar)
    state = _ScaledState(stats.K)
    rec = _Recorder(cfg.m_max, stats.K)
    converged_at = None
    line_search = cfg.weights == WeightRule.line_search
    for j in range(1, cfg.m_max + 1):
        w = 1.0 / j
        if line_search:
            g = state.g()
            a = c - g
            top = float(np.max(np.abs(a)))
            if top < cfg.corr_tol:
                converged_at = j - 1
                break
            b = state.b()
            q = float(b @ g)
            p = float(b @ c) - q
            ws, gammas, obj = _constrained_line_search(a, g, q, p, b_bar, cfg.simplex, w)
            s = int(np.argmin(obj))
            w = float(ws[s])
            coef = float(gammas[s])
        else:
            a = state.correlations(c, 1.0 - w)
            s, top = state.peak(cfg.simplex)
            if top < cfg.corr_tol:
                converged_at = j - 1
                break
            beta = a[s] / w
            if cfg.simplex:
                clipped = min(max(beta, 0.0), 1.0)
            else:
                clipped = np.sign(beta) * min(abs(beta), b_bar)
            coef = w * clipped
        state.step(1.0 - w, s, coef, d)
        rec.record(s, state.bt, w, top, state.sigma)
    return rec.finish(stats, cfg, converged_at)


def fit_fwa(stats: SuffStats, cfg: AlgoConfig) -> GreedyPath:
    """Frank-Wolfe algorithm: move towards the l1-ball vertex b_bar sign(A[s]) e_s.

    Fixed weights are w_j = 2 / (1 + j); line-search weights minimize the
    residual norm along the segment exactly. The simplex variant selects on the
    signed correlation and uses the vertex 0 when no correlation is positive.
    """
    _require(cfg, Algorithm.FWA)
    c, d = stats.c, stats.d
    b_bar = float(cfg.b_bar)
    state = _ScaledState(stats.K)
    rec = _Recorder(cfg.m_max, stats.K)
    converged_at = None
    line_search = cfg.weights == WeightRule.line_search
    for j in range(1, cfg.m_max + 1):
        a = state.correlations(c, 1.0)
        s, top = state.peak(cfg.simplex)
        if top < cfg.corr_tol:
            converged_at = j - 1
            break
        vertex = b_bar * np.sign(a[s])
        if cfg.simplex:
            vertex = max(vertex, 0.0)
        w = 2.0 / (1.0 + j)
        if line_search:
            sigma = state.sigma
            q = sigma * sigma * float(state.bt @ state.gt)
            p = sigma * float(state.bt @ c) - q
            quad = q - 2.0 * vertex * sigma * state.gt[s] + vertex * vertex
            lin = p - vertex * a[s]
            if quad > _FLAT:
                w = min(max(-lin / quad, 0.0), 1.0)
        state.step(1.0 - w, s, w * vertex, d)
        rec.record(s, state.bt, w, top, state.sigma)
    return rec.finish(stats, cfg, converged_at)


# Fitter registry
FITTER_REGISTRY: Dict[Algorithm, Callable[[SuffStats, AlgoConfig], GreedyPath]] = {
    Algorithm.PGA: fit_pga,
    Algorithm.OGA: fit_oga,
    Algorithm.RGA: fit_rga,
    Algorithm.CGA: fit_cga,
    Algorithm.FWA: fit_fwa,
}


def get_fitter(algorithm: Union[Algorithm, str]) -> Callable[[SuffStats, AlgoConfig], GreedyPath]:
    """Get the fit function for an algorithm name."""
    try:
        return FITTER_REGISTRY[Algorithm(_upper_key(algorithm, Algorithm))]
    except ValueError:
        raise ConfigError(f"Unknown algorithm: {algorithm}")


def fit(stats: SuffStats, cfg: AlgoConfig) -> GreedyPath:
    """Run the algorithm named by ``cfg``."""
    return get_fitter(cfg.algorithm)(stats, cfg)


def _standardize_rows(path: GreedyPath, x_new: np.ndarray) -> np.ndarray:
    x_new = np.asarray(x_new, dtype=np.float64)
    if x_new.ndim == 1:
        x_new = x_new[None, :]
    if x_new.ndim != 2 or x_new.shape[1] != path.K:
        raise DimensionMismatchError(
            f"x_new has shape {x_new.shape}, expected (*, {path.K})"
        )
    if path.means is not None:
        x_new = x_new - path.means
    if path.scale is not None:
        x_new = x_new / path.scale
    return x_new


def predict(path: GreedyPath, at_step: int, x_new: np.ndarray) -> np.ndarray:
    """Predictions of F_{at_step} on raw regressors (scaled with the stored scales)."""
    return _standardize_rows(path, x_new) @ path.coeffs_at(at_step)


def predict_steps(path: GreedyPath, steps: np.ndarray, x_new: np.ndarray) -> np.ndarray:
    """Predictions at several steps at once: an (n_new, len(steps)) matrix.

    Steps beyond the path length use its final coefficients.
    """
    x_std = _standardize_rows(path, x_new)
    steps = np.minimum(np.asarray(steps, dtype=np.int64), len(path))
    table = np.vstack([np.zeros(path.K), path.coeffs])
    return x_std @ table[steps].T


def coeffs_raw(path: GreedyPath, at_step: int) -> np.ndarray:
    """Coefficients on the raw regressor scale (standardized coefficients / scale)."""
    b = path.coeffs_at(at_step)
    return b / path.scale if path.scale is not None else b.copy()
