"""Exact pair losses and analytic gradients for the layout objective.

With Phi(x, y) = 1 / (1 + a * d^(2b)) and d2 = ||x - y||^2, an edge (x, y)
contributes the attractive loss -log Phi and a sampled non-edge the repulsive
loss -log(1 - Phi). These are the closed forms the SGD kernel descends; the
kernel additionally applies numerical safeguards (a small denominator offset
and per-dimension clipping) that are documented there and deliberately absent
here, so these functions stay exactly differentiable for finite-difference
checks.

Both gradients are with respect to x; by symmetry the gradient in y is the
negation. Coincident points (d2 = 0) return a zero gradient, matching the
kernel's convention of not moving coincident attractive pairs.
"""

import numpy as np


def _sq_dist(x: np.ndarray, y: np.ndarray) -> float:
    diff = np.asarray(x, dtype=np.float64) - np.asarray(y, dtype=np.float64)
    return float((diff * diff).sum())


def attractive_loss(x, y, a: float, b: float) -> float:
    """-log Phi = log(1 + a * d2^b)."""
    d2 = _sq_dist(x, y)
    return float(np.log1p(a * d2 ** b))


def attractive_grad(x, y, a: float, b: float) -> np.ndarray:
    """d/dx of log(1 + a * d2^b) = [2ab * d2^(b-1) / (1 + a * d2^b)] (x - y)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    d2 = _sq_dist(x, y)
    if d2 == 0.0:
        return np.zeros_like(x)
    coeff = 2.0 * a * b * d2 ** (b - 1.0) / (1.0 + a * d2 ** b)
    return coeff * (x - y)


def repulsive_loss(x, y, a: float, b: float) -> float:
    """-log(1 - Phi) = log(1 + a * d2^b) - log(a) - b * log(d2)."""
    d2 = _sq_dist(x, y)
    if d2 == 0.0:
        return float(np.inf)
    return float(np.log1p(a * d2 ** b) - np.log(a) - b * np.log(d2))


def repulsive_grad(x, y, a: float, b: float) -> np.ndarray:
    """d/dx of -log(1 - Phi) = [-2b / (d2 * (1 + a * d2^b))] (x - y)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    d2 = _sq_dist(x, y)
    if d2 == 0.0:
        return np.zeros_like(x)
    coeff = -2.0 * b / (d2 * (1.0 + a * d2 ** b))
    return coeff * (x - y)
