"""Tabulated functions on strictly increasing abscissae."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class GridFunction:
    """Values sampled on strictly increasing abscissae.

    Evaluation between nodes is linear interpolation; outside the table the
    nearest value is held (callers that care about extrapolation check
    ``x_min``/``x_max`` themselves).
    """

    xs: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        vs = np.asarray(self.values, dtype=float)
        if xs.ndim != 1 or xs.shape != vs.shape:
            raise ValueError("xs and values must be 1-d arrays of equal length")
        if xs.size < 2 or not np.all(np.diff(xs) > 0):
            raise ValueError("abscissae must be strictly increasing (>= 2 nodes)")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "values", vs)

    @property
    def x_min(self):
        return float(self.xs[0])

    @property
    def x_max(self):
        return float(self.xs[-1])

    def __call__(self, x):
        return np.interp(x, self.xs, self.values)
