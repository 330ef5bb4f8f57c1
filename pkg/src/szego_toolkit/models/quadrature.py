"""Dirichlet-weighted Gauss quadrature on the standard simplex.

Monomial moments on the sphere reduce to integrals over t_j = |z_j|^2 in the simplex
with weight t^alpha.  In collapsed coordinates (stick breaking) that weight factors
into one Jacobi weight per coordinate, so Gauss-Jacobi rules integrate it exactly and
only the smooth density is sampled.
"""
import logging
from functools import lru_cache
from typing import Callable, Sequence, Tuple

import numpy as np
from scipy.special import roots_jacobi

from ..core.errors import QuadratureToleranceError

logger = logging.getLogger(__name__)


@lru_cache(maxsize=4096)
def _beta_rule(a: float, b: float, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes in [0, 1] and normalized weights for the Beta(a, b) density."""
    x, w = roots_jacobi(order, b - 1.0, a - 1.0)
    return 0.5 * (1.0 + x), w / np.sum(w)


def dirichlet_expectation(func: Callable[[np.ndarray], np.ndarray], alpha: Sequence[int], order: int = 64) -> float:
    """E[func(t)] for t ~ Dirichlet(alpha + 1) on the simplex in R^{len(alpha)}.

    ``func`` receives an array of shape (len(alpha), k) and returns k values.
    """
    params = [float(a) + 1.0 for a in alpha]
    dims = len(params) - 1
    if dims < 1:
        raise ValueError("the simplex needs at least two coordinates")
    # One Beta rule per stick-breaking coordinate
    nodes, weights = [], []
    for i in range(dims):
        s, w = _beta_rule(params[i], float(sum(params[i + 1:])), order)
        nodes.append(s)
        weights.append(w)
    # Tensor grid and product weights
    grids = np.meshgrid(*nodes, indexing='ij')
    grid_w = np.ones_like(grids[0])
    for i, w in enumerate(weights):
        shape = [1] * dims
        shape[i] = order
        grid_w = grid_w * w.reshape(shape)

    # Map the unit cube back onto the simplex
    s = [g.ravel() for g in grids]
    remaining = np.ones_like(s[0])
    t = []
    for i in range(dims):
        t.append(remaining * s[i])
        remaining = remaining * (1.0 - s[i])
    t.append(remaining)
    return float(np.sum(grid_w.ravel() * func(np.array(t))))


def checked_expectation(func: Callable[[np.ndarray], np.ndarray], alpha: Sequence[int], order: int = 64,
                        rtol: float = 1e-12) -> float:
    """dirichlet_expectation with an order-doubling error estimate."""
    coarse = dirichlet_expectation(func, alpha, order)
    fine = dirichlet_expectation(func, alpha, 2 * order)
    if abs(fine - coarse) > rtol * abs(fine):
        raise QuadratureToleranceError(
            f"quadrature for exponent {tuple(alpha)} changed by {abs(fine - coarse):.3e} on doubling order {order}")
    return fine
