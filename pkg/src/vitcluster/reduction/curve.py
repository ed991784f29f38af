"""Least-squares fit of the low-dimensional similarity curve parameters."""

import numpy as np
from scipy.optimize import curve_fit

from ..exceptions import FitError

GRID_POINTS = 300


def fit_ab(min_dist: float, spread: float = 1.0) -> tuple[float, float]:
    """Fit 1 / (1 + a * t^(2b)) to the piecewise target that is 1 for
    t <= min_dist and exp(-(t - min_dist) / spread) beyond, sampled on a fixed
    300-point grid over [0, 3 * spread]."""
    if not 0.0 < min_dist < spread:
        raise ValueError(
            f"need 0 < min_dist < spread, got min_dist={min_dist}, spread={spread}"
        )
    t = np.linspace(0.0, 3.0 * spread, GRID_POINTS)
    target = np.where(t <= min_dist, 1.0, np.exp(-(t - min_dist) / spread))

    def curve(tv, a, b):
        return 1.0 / (1.0 + a * tv ** (2.0 * b))

    try:
        (a, b), _ = curve_fit(curve, t, target)
    except RuntimeError as exc:
        raise FitError(f"similarity curve fit did not converge: {exc}") from exc
    return float(a), float(b)
