"""Design data: raw regressors, standardized regressors and sufficient statistics."""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from greedy_predict.core.exceptions import DimensionMismatchError, MalformedInputError


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class RawDesign:
    """n observations of K raw regressors and the response."""

    x: np.ndarray
    y: np.ndarray
    feature_names: Tuple[str, ...] = ()

    def __post_init__(self):
        x = _frozen(self.x)
        y = _frozen(self.y)
        if x.ndim != 2:
            raise DimensionMismatchError(f"x must be a matrix, got shape {x.shape}")
        if y.ndim != 1 or y.shape[0] != x.shape[0]:
            raise DimensionMismatchError(
                f"y has shape {y.shape}, expected ({x.shape[0]},)"
            )
        if x.shape[0] < 1 or x.shape[1] < 1:
            raise DimensionMismatchError(f"empty design of shape {x.shape}")
        if not (np.isfinite(x).all() and np.isfinite(y).all()):
            raise MalformedInputError("design contains non-finite values")
        names = tuple(self.feature_names) or tuple(f"x{k}" for k in range(x.shape[1]))
        if len(names) != x.shape[1]:
            raise DimensionMismatchError(
                f"{len(names)} feature names for {x.shape[1]} columns"
            )
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def K(self) -> int:
        return self.x.shape[1]

    def rows(self, index: np.ndarray) -> "RawDesign":
        """Sub-design on the given row indices."""
        return RawDesign(self.x[index], self.y[index], self.feature_names)


@dataclass(frozen=True, eq=False)
class StandardizedDesign:
    """Regressors divided by their empirical norm, so that |X^(k)|_n^2 = 1.

    ``means`` holds the centering offsets when ``centered`` is true.
    ``norm_drift`` is max_k |(1/n) sum_i x_std[i,k]^2 - 1|, which is zero up to
    rounding unless the scales were fixed on another sample.
    """

    x_std: np.ndarray
    scale: np.ndarray
    y: np.ndarray
    centered: bool = False
    means: Optional[np.ndarray] = None
    feature_names: Tuple[str, ...] = ()
    norm_drift: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "x_std", _frozen(self.x_std))
        object.__setattr__(self, "scale", _frozen(self.scale))
        object.__setattr__(self, "y", _frozen(self.y))
        if self.means is not None:
            object.__setattr__(self, "means", _frozen(self.means))
        if self.scale.shape != (self.x_std.shape[1],):
            raise DimensionMismatchError("scale length differs from column count")
        if np.any(self.scale <= 0):
            raise DimensionMismatchError("scale entries must be positive")

    @property
    def n(self) -> int:
        return self.x_std.shape[0]

    @property
    def K(self) -> int:
        return self.x_std.shape[1]


@dataclass(frozen=True, eq=False)
class SuffStats:
    """c = X'Y/n, d = X'X/n and sy2 = |Y|_n^2 over n observations.

    ``scale`` and ``means`` record the standardization the statistics were
    built with; batches only merge when both agree.
    """

    c: np.ndarray
    d: np.ndarray
    n: int
    sy2: float
    scale: Optional[np.ndarray] = None
    means: Optional[np.ndarray] = None

    def __post_init__(self):
        c = _frozen(self.c)
        d = _frozen(self.d)
        if c.ndim != 1 or d.shape != (c.shape[0], c.shape[0]):
            raise DimensionMismatchError(
                f"c has shape {c.shape} but d has shape {d.shape}"
            )
        if self.n < 0:
            raise DimensionMismatchError("sample count must be nonnegative")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "sy2", float(self.sy2))
        if self.scale is not None:
            object.__setattr__(self, "scale", _frozen(self.scale))
        if self.means is not None:
            object.__setattr__(self, "means", _frozen(self.means))

    @property
    def K(self) -> int:
        return self.c.shape[0]
