"""Design-matrix service: standardization, sufficient statistics, restricted eigenvalues."""

import itertools
import logging
import math
from functools import reduce
from typing import Iterable, Optional

import numpy as np
from scipy import linalg

from greedy_predict.core.config import settings
from greedy_predict.core.exceptions import (
    CombinatorialBlowupError,
    ConfigError,
    DegenerateColumnError,
    DimensionMismatchError,
    StreamingScaleError,
)
from greedy_predict.models.design import RawDesign, StandardizedDesign, SuffStats

logger = logging.getLogger("greedy_predict")


def inner_n(u: np.ndarray, v: np.ndarray) -> float:
    """Empirical inner product <u, v>_n = (1/n) sum_i u_i v_i."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DimensionMismatchError(f"shapes {u.shape} and {v.shape} differ")
    return float(u @ v) / u.shape[0]


def standardize(raw: RawDesign, center: bool = False) -> StandardizedDesign:
    """Divide each column (optionally mean-centered) by its empirical norm.

    Raises:
        DegenerateColumnError: a column has empirical norm below 1e-12.
    """
    x = raw.x
    means = x.mean(axis=0) if center else None
    xc = x - means if center else x
    norms = np.sqrt(np.mean(xc * xc, axis=0))
    bad = np.flatnonzero(norms < settings.DEGENERATE_NORM)
    if bad.size:
        k = int(bad[0])
        raise DegenerateColumnError(k, raw.feature_names[k], float(norms[k]))
    return StandardizedDesign(
        x_std=xc / norms,
        scale=norms,
        y=raw.y,
        centered=center,
        means=means,
        feature_names=raw.feature_names,
    )


def standardize_with(
    raw: RawDesign,
    scale: np.ndarray,
    means: Optional[np.ndarray] = None,
) -> StandardizedDesign:
    """Standardize with externally fixed scales (and centering offsets).

    The columns are not re-scaled to unit norm; the deviation from it is
    recorded in ``norm_drift``.
    """
    scale = np.asarray(scale, dtype=np.float64)
    if scale.shape != (raw.K,):
        raise DimensionMismatchError(f"scale of length {scale.shape} for {raw.K} columns")
    if means is not None:
        means = np.asarray(means, dtype=np.float64)
        if means.shape != (raw.K,):
            raise DimensionMismatchError(f"means of length {means.shape} for {raw.K} columns")
    xc = raw.x - means if means is not None else raw.x
    x_std = xc / scale
    drift = float(np.max(np.abs(np.mean(x_std * x_std, axis=0) - 1.0)))
    if drift > 0.05:
        logger.warning("Fixed scales leave empirical norms off by up to %.3g", drift)
    return StandardizedDesign(
        x_std=x_std,
        scale=scale,
        y=raw.y,
        centered=means is not None,
        means=means,
        feature_names=raw.feature_names,
        norm_drift=drift,
    )


def suffstats_from(design: StandardizedDesign) -> SuffStats:
    """c = X'Y/n, d = X'X/n, sy2 = |Y|_n^2 of a standardized design."""
    x = design.x_std
    y = design.y
    n = design.n
    d = x.T @ x / n
    return SuffStats(
        c=x.T @ y / n,
        d=0.5 * (d + d.T),
        n=n,
        sy2=float(y @ y) / n,
        scale=design.scale,
        means=design.means,
    )


def empty_suffstats(K: int, scale: Optional[np.ndarray] = None, means: Optional[np.ndarray] = None) -> SuffStats:
    """Identity element of ``suffstats_merge`` (n = 0)."""
    return SuffStats(c=np.zeros(K), d=np.zeros((K, K)), n=0, sy2=0.0, scale=scale, means=means)


def _same(a: Optional[np.ndarray], b: Optional[np.ndarray]) -> bool:
    if a is None or b is None:
        return a is None and b is None
    return a.shape == b.shape and bool(np.array_equal(a, b))


def suffstats_merge(a: SuffStats, b: SuffStats) -> SuffStats:
    """Sufficient statistics of the concatenated samples.

    Raises:
        DimensionMismatchError: the batches have different K.
        StreamingScaleError: the batches were standardized differently.
    """
    if a.K != b.K:
        raise DimensionMismatchError(f"cannot merge K={a.K} with K={b.K}")
    # an empty batch carries no standardization of its own
    if b.n == 0:
        return a
    if a.n == 0:
        return b
    if not (_same(a.scale, b.scale) and _same(a.means, b.means)):
        raise StreamingScaleError("batches were standardized with different scales")
    n = a.n + b.n
    wa = a.n / n
    wb = b.n / n
    return SuffStats(
        c=wa * a.c + wb * b.c,
        d=wa * a.d + wb * b.d,
        n=n,
        sy2=wa * a.sy2 + wb * b.sy2,
        scale=a.scale,
        means=a.means,
    )


def suffstats_from_batches(
    batches: Iterable[RawDesign],
    scale: np.ndarray,
    means: Optional[np.ndarray] = None,
) -> SuffStats:
    """Stream batches through one fixed standardization and merge their statistics."""
    scale = np.asarray(scale, dtype=np.float64)
    start = empty_suffstats(scale.shape[0], scale, means)

    def _fold(acc: SuffStats, batch: RawDesign) -> SuffStats:
        return suffstats_merge(acc, suffstats_from(standardize_with(batch, scale, means)))

    stats = reduce(_fold, batches, start)
    logger.debug("Merged streamed statistics over %d rows", stats.n)
    return stats


def restricted_eigenvalue(stats: SuffStats, m: int, cap: Optional[int] = None) -> float:
    """Minimum over size-m column subsets of the smallest eigenvalue of d[S, S].

    Subsets are enumerated exhaustively in lexicographic order.

    Raises:
        CombinatorialBlowupError: C(K, m) exceeds ``cap``.
    """
    K = stats.K
    if m < 1 or m > K:
        raise ConfigError(f"m must be in 1..{K}, got {m}")
    cap = settings.SUBSET_CAP if cap is None else cap
    count = math.comb(K, m)
    if count > cap:
        raise CombinatorialBlowupError(
            f"C({K},{m}) = {count} subsets exceeds the cap of {cap}"
        )
    d = stats.d
    best = math.inf
    for i, subset in enumerate(itertools.combinations(range(K), m)):
        idx = np.array(subset)
        low = linalg.eigvalsh(d[np.ix_(idx, idx)], subset_by_index=[0, 0])[0]
        best = min(best, float(low))
        if (i + 1) % 100000 == 0:
            logger.debug("restricted eigenvalue: %d/%d subsets, current %.6g", i + 1, count, best)
    return max(best, 0.0)
