"""Bargmann-Fock model: the flat chart phi = |z|^2 and its exact weighted Bergman kernel."""
import math
from typing import Sequence

import numpy as np

from ..core.brt_chart import BRTChart


def bargmann_fock_chart(n: int) -> BRTChart:
    """Flat chart with g = 2 Id and the Euclidean rigid metric <Z_j|Z_k> = delta_jk."""

    def potential(zs, zbs):
        return sum((z * zb for z, zb in zip(zs[1:], zbs[1:])), zs[0] * zbs[0])

    def metric_gram(zs, zbs):
        return [[1.0 if j == k else 0.0 for k in range(n)] for j in range(n)]

    return BRTChart(n=n, potential=potential, metric_gram=metric_gram, label=f"bargmann-fock-{n}")


def bargmann_fock_kernel(m: int, z: Sequence[complex], w: Sequence[complex]) -> complex:
    """P_m(z, w) = (2m/pi)^n exp(m (2 z.conj(w) - |z|^2 - |w|^2))."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    n = len(z)
    phase = 2.0 * np.dot(z, w.conj()) - np.vdot(z, z).real - np.vdot(w, w).real
    return (2.0 * m / math.pi) ** n * np.exp(m * phase)
