"""Ground-truth solvers and bound checks.

Nothing here calls into the greedy fitting code: the constrained least-squares
oracle, the dense OLS solver and the projections only use numpy arithmetic.
"""

import logging
from typing import Sequence

import numpy as np
import pandas as pd

from greedy_predict.core.exceptions import ConfigError, NoConvergenceError, SingularError
from greedy_predict.models.design import SuffStats
from greedy_predict.models.path import BoundReport, GreedyPath
from greedy_predict.schemas.schemas import Algorithm

logger = logging.getLogger("greedy_predict")

BOUND_TOL = 1e-9


def objective(stats: SuffStats, coeffs: np.ndarray) -> float:
    """|Y - X b|_n^2 from sufficient statistics."""
    b = np.asarray(coeffs, dtype=np.float64)
    return float(stats.sy2 - 2.0 * (b @ stats.c) + b @ stats.d @ b)


def project_simplex(v: np.ndarray, radius: float = 1.0) -> np.ndarray:
    """Euclidean projection onto {b >= 0, sum(b) <= radius}."""
    v = np.asarray(v, dtype=np.float64)
    pos = np.maximum(v, 0.0)
    if pos.sum() <= radius:
        return pos
    # Sort-and-threshold onto the face sum(b) = radius.
    u = np.sort(v)[::-1]
    cssv = np.cumsum(u) - radius
    ind = np.arange(1, v.size + 1)
    rho = np.nonzero(u - cssv / ind > 0)[0][-1]
    theta = cssv[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def project_l1_ball(v: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection onto {b : sum |b_k| <= radius}."""
    if radius <= 0:
        raise ConfigError("radius must be positive")
    v = np.asarray(v, dtype=np.float64)
    if np.abs(v).sum() <= radius:
        return v.copy()
    return np.sign(v) * project_simplex(np.abs(v), radius)


def _largest_eigenvalue(d: np.ndarray, iters: int = 500, tol: float = 1e-12) -> float:
    """Power iteration on a symmetric positive semidefinite matrix."""
    v = np.ones(d.shape[0]) / np.sqrt(d.shape[0])
    lam = 0.0
    for _ in range(iters):
        w = d @ v
        norm = np.sqrt(w @ w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        new = float(v @ d @ v)
        if abs(new - lam) <= tol * max(new, 1.0):
            return new
        lam = new
    return lam


def lasso_oracle(
    stats: SuffStats,
    b_bar: float,
    tol: float = 1e-10,
    iter_cap: int = 200_000,
    simplex: bool = False,
) -> np.ndarray:
    """Minimize |Y - X b|_n^2 subject to sum |b_k| <= b_bar by projected gradient.

    Steps have length 1/L with L the largest eigenvalue of d (slightly
    inflated). With ``simplex`` the feasible set is {b >= 0, sum b <= b_bar}.

    Raises:
        NoConvergenceError: the fixed-point residual is still above ``tol``
            after ``iter_cap`` iterations.
    """
    if b_bar <= 0:
        raise ConfigError("b_bar must be positive")
    project = (lambda v: project_simplex(v, b_bar)) if simplex else (lambda v: project_l1_ball(v, b_bar))
    c, d = stats.c, stats.d
    lip = _largest_eigenvalue(d) * (1.0 + 1e-6)
    if lip <= 0:
        return np.zeros(stats.K)
    b = np.zeros(stats.K)
    for it in range(iter_cap):
        nxt = project(b - (d @ b - c) / lip)
        gap = float(np.max(np.abs(nxt - b)))
        b = nxt
        if gap < tol:
            logger.debug("lasso oracle converged after %d iterations", it + 1)
            return b
    raise NoConvergenceError(f"projected gradient did not reach tol={tol:g} in {iter_cap} iterations")


def ols_dense(stats: SuffStats, subset: Sequence[int]) -> np.ndarray:
    """Least-squares coefficients on the columns in ``subset`` (zero elsewhere).

    Raises:
        SingularError: the smallest eigenvalue of d[subset, subset] is at most 1e-10.
    """
    idx = np.array(sorted(set(int(k) for k in subset)), dtype=np.int64)
    b = np.zeros(stats.K)
    if idx.size == 0:
        return b
    gram = stats.d[np.ix_(idx, idx)]
    low = float(np.linalg.eigvalsh(gram)[0])
    if low <= 1e-10:
        raise SingularError(f"Gram submatrix is singular (smallest eigenvalue {low:.3g})")
    b[idx] = np.linalg.solve(gram, stats.c[idx])
    return b


def _slack(path: GreedyPath, stats: SuffStats, budget: float, m: int) -> float:
    cfg = path.config
    algo = cfg.algorithm
    if algo == Algorithm.PGA:
        nu = cfg.nu
        return float((4.0 * stats.sy2 ** 2 * budget ** 2 / (nu * (2.0 - nu) * m)) ** (1.0 / 3.0))
    if algo == Algorithm.OGA:
        return 4.0 * budget ** 2 / m
    if algo in (Algorithm.RGA, Algorithm.CGA):
        return budget ** 2 / m
    return 4.0 * budget ** 2 / m


def check_bound(path: GreedyPath, oracle_coeffs: np.ndarray, stats: SuffStats) -> BoundReport:
    """Compare rss_n after the last step with the oracle objective plus the step-m slack.

    The budget is the l1 norm of ``oracle_coeffs`` for PGA/OGA/RGA and b_bar
    for CGA/FWA.
    """
    m = len(path)
    if m == 0:
        raise ConfigError("cannot check a bound on an empty path")
    oracle_coeffs = np.asarray(oracle_coeffs, dtype=np.float64)
    cfg = path.config
    if cfg.algorithm in (Algorithm.CGA, Algorithm.FWA):
        budget = float(cfg.b_bar)
    else:
        budget = float(np.abs(oracle_coeffs).sum())
    oracle_obj = objective(stats, oracle_coeffs)
    slack = _slack(path, stats, budget, m)
    lhs = float(path.rss[m - 1])
    rhs = oracle_obj + slack
    return BoundReport(
        algorithm=cfg.algorithm.value,
        m=m,
        lhs=lhs,
        rhs=rhs,
        satisfied=lhs <= rhs + BOUND_TOL,
        slack_term=slack,
        oracle_objective=oracle_obj,
        budget=budget,
    )


def l1_growth(path: GreedyPath) -> pd.DataFrame:
    """Per-step l1 norm of the coefficients and its ratio to sqrt(m)."""
    m = np.arange(1, len(path) + 1)
    l1 = path.l1
    return pd.DataFrame({"m": m, "l1": l1, "l1_over_sqrt_m": l1 / np.sqrt(m)})
