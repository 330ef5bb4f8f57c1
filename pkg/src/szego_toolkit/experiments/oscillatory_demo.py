"""Circle Fourier components of the Bargmann-Fock kernel.

The weight-m component of u -> P_m(z, e^{ipu} z) is computed twice: by the trapezoid
rule on [0, 2 pi) and from the series of exp(2m sum |z_j|^2 e^{-i p_j u}).
"""
import math
import logging
from dataclasses import dataclass
from functools import reduce
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import gammaln

from ..core.errors import AliasingError, InvalidDeltaError
from ..models.flat_model import bargmann_fock_kernel
from ..models.weighted_sphere import weighted_exponents

logger = logging.getLogger(__name__)

ALIASING_TOLERANCE = 1e-11
ROUNDOFF_FLOOR = 1e-13
SUPPRESSION_GRID = 2048
MAX_DOUBLINGS = 4
DEMO_REL_TOLERANCE = 1e-10
DEMO_ABS_TOLERANCE = 1e-12

DEMO_COLUMNS = ('n', 'p', 'm', 'z', 'order', 'quadrature', 'exact', 'abs_error', 'rel_error', 'divisible',
                'suppression')


@dataclass(frozen=True)
class OscillatoryResult:
    n: int
    p: Tuple[int, ...]
    z: Tuple[complex, ...]
    m: int
    order: int
    quadrature: complex
    exact: float
    delta: float
    suppression: float

    @property
    def abs_error(self) -> float:
        return abs(self.quadrature - self.exact)

    @property
    def rel_error(self) -> float:
        return self.abs_error / abs(self.exact) if self.exact else math.inf

    @property
    def passed(self) -> bool:
        # relative where the mode is nonzero, absolute against m^n where it vanishes
        if self.exact:
            return self.rel_error <= DEMO_REL_TOLERANCE
        return self.abs_error <= DEMO_ABS_TOLERANCE * self.m ** self.n

    @property
    def divisible(self) -> bool:
        """Whether some k >= 0 has sum p_j k_j = m, i.e. the mode can be nonzero."""
        return bool(weighted_exponents(self.p, self.m))

    def row(self) -> Dict[str, object]:
        return {'n': self.n, 'p': ' '.join(map(str, self.p)), 'm': self.m,
                'z': ' '.join(format(c, '.17g') for c in self.z), 'order': self.order,
                'quadrature': self.quadrature.real, 'exact': self.exact, 'abs_error': self.abs_error,
                'rel_error': self.rel_error, 'divisible': int(self.divisible), 'suppression': self.suppression}


def _weights(p: Union[int, Sequence[int]], n: int) -> Tuple[int, ...]:
    weights = (int(p),) * n if np.isscalar(p) else tuple(int(v) for v in p)
    if len(weights) != n or any(v < 1 for v in weights):
        raise ValueError(f"need {n} positive weights, got {p}")
    return weights


def exact_mode(z: Sequence[complex], p: Sequence[int], m: int) -> float:
    """(2m/pi)^n e^{-2m|z|^2} sum over sum p_j k_j = m of prod (2m|z_j|^2)^{k_j} / k_j!."""
    a = np.abs(np.asarray(z, dtype=complex)) ** 2
    n = len(a)
    log_prefactor = n * math.log(2.0 * m / math.pi) - 2.0 * m * float(a.sum())
    terms = []
    # sum in log space, skipping terms that vanish at z_j = 0
    for k in weighted_exponents(p, m):
        if any(kj > 0 and aj == 0 for kj, aj in zip(k, a)):
            continue
        log_term = sum(kj * math.log(2.0 * m * aj) - gammaln(kj + 1.0) for kj, aj in zip(k, a) if kj > 0)
        terms.append(math.exp(log_prefactor + log_term))
    return math.fsum(terms)


def default_order(z: Sequence[complex], p: Sequence[int], m: int) -> int:
    """Power of two past twice the largest mode index with non-negligible weight."""
    # the series weights are Poisson-like with this mean
    mass = 2.0 * m * float(np.sum(np.abs(np.asarray(z)) ** 2))
    k_max = mass + 10.0 * math.sqrt(mass) + 40.0
    needed = 2 * (m + max(p) * k_max) + 64
    return 1 << math.ceil(math.log2(needed))


def _orbit(z: np.ndarray, p: Sequence[int], u: float) -> np.ndarray:
    return z * np.exp(1j * np.asarray(p) * u)


def trapezoid_mode(z: Sequence[complex], p: Sequence[int], m: int, order: int) -> complex:
    """(1/2pi) int_0^{2pi} P_m(z, e^{ipu} z) e^{imu} du on ``order`` equispaced nodes."""
    z = np.asarray(z, dtype=complex)
    nodes = 2.0 * math.pi * np.arange(order) / order
    values = [bargmann_fock_kernel(m, z, _orbit(z, p, u)) * np.exp(1j * m * u) for u in nodes]
    return complex(np.sum(values) / order)


def off_diagonal_suppression(z: Sequence[complex], p: Sequence[int], m: int, delta: float) -> float:
    """max over u in [delta, 2pi/g - delta] of |P_m(z, e^{ipu} z)| / P_m(z, z), g = gcd(p)."""
    a = np.abs(np.asarray(z, dtype=complex)) ** 2
    g = reduce(math.gcd, p)
    if not 0 < delta < math.pi / g:
        raise InvalidDeltaError(f"delta must lie in (0, {math.pi / g:.6g}), got {delta}")
    # |P_m(z, e^{ipu} z)| / P_m(z, z) = exp(-2m sum |z_j|^2 (1 - cos p_j u))
    u = np.linspace(delta, 2.0 * math.pi / g - delta, SUPPRESSION_GRID)
    decay = np.sum(a[:, None] * (1.0 - np.cos(np.multiply.outer(np.asarray(p, dtype=float), u))), axis=0)
    return float(np.exp(-2.0 * m * decay.min()))


def oscillatory_demo(n: int, p: Union[int, Sequence[int]], z: Sequence[complex], m: int,
                     order: Optional[int] = None, delta: Optional[float] = None,
                     tolerance: float = ALIASING_TOLERANCE) -> OscillatoryResult:
    if m < 1:
        raise ValueError(f"m must be positive, got {m}")
    if len(z) != n:
        raise ValueError(f"z has {len(z)} coordinates, expected {n}")
    weights = _weights(p, n)
    z = tuple(complex(c) for c in z)
    automatic = order is None
    order = default_order(z, weights, m) if automatic else int(order)
    floor = ROUNDOFF_FLOOR * (2.0 * m / math.pi) ** n

    value = trapezoid_mode(z, weights, m, order)
    # Double the order until the mode stops moving
    for attempt in range(MAX_DOUBLINGS + 1):
        refined = trapezoid_mode(z, weights, m, 2 * order)
        if abs(refined - value) <= max(tolerance * abs(refined), floor):
            break
        if not automatic or attempt == MAX_DOUBLINGS:
            raise AliasingError(f"trapezoid order {order} aliases: doubling moves the mode by "
                                f"{abs(refined - value):.3g}")
        logger.warning("trapezoid order %d aliases for m=%d; doubling", order, m)
        order, value = 2 * order, refined

    # Compare with the closed form
    delta = 0.5 * math.pi / max(weights) if delta is None else delta
    result = OscillatoryResult(n=n, p=weights, z=z, m=m, order=order, quadrature=value,
                               exact=exact_mode(z, weights, m), delta=delta,
                               suppression=off_diagonal_suppression(z, weights, m, delta))
    logger.debug("mode m=%d p=%s: quadrature %.17g exact %.17g (order %d)", m, weights, value.real,
                 result.exact, order)
    return result
