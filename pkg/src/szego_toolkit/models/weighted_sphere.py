"""Weighted spheres S^{2n+1} with the circle action (e^{i p_1 theta} z_1, ..., e^{i p_{n+1} theta} z_{n+1}).

Provides the stratification by period, distances to singular strata, explicit BRT
charts, monomial bases of the weight-m CR functions and exact Szego kernel values.
"""
import cmath
import math
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property, lru_cache, reduce
from itertools import combinations
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import gammaln

from ..core.brt_chart import BRTChart, levi_matrix
from ..core.coefficient_engine import METRIC_PRESETS
from ..core.errors import InadmissiblePresetError, InvalidDeltaError, ModelError
from ..core.jet_engine import Jet, get_context, newton_jet_solve, variables
from .quadrature import checked_expectation

logger = logging.getLogger(__name__)

SUPPORT_THRESHOLD = 1e-10
UNIT_TOLERANCE = 1e-12
D_HAT_GRID = 2048


def weighted_exponents(weights: Sequence[int], m: int) -> List[Tuple[int, ...]]:
    """All alpha >= 0 with sum p_j alpha_j = m, first coordinate descending."""
    if not weights:
        return [()] if m == 0 else []
    head, tail = weights[0], weights[1:]
    result = []
    for first in range(m // head, -1, -1):
        for rest in weighted_exponents(tail, m - head * first):
            result.append((first,) + rest)
    return result


@dataclass(frozen=True)
class SpherePoint:
    z: Tuple[complex, ...]

    def __post_init__(self):
        z = tuple(complex(c) for c in self.z)
        object.__setattr__(self, 'z', z)
        norm = math.sqrt(math.fsum(abs(c) ** 2 for c in z))
        if abs(norm - 1.0) > UNIT_TOLERANCE:
            raise ModelError(f"point {z} is not on the unit sphere (|z| = {norm!r})")

    @classmethod
    def normalized(cls, values: Sequence[complex]) -> 'SpherePoint':
        values = np.asarray(values, dtype=complex)
        norm = np.linalg.norm(values)
        if norm == 0:
            raise ModelError("cannot normalize the zero vector")
        return cls(tuple(values / norm))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.z, dtype=complex)

    def rotate(self, weights: Sequence[int], theta: float) -> 'SpherePoint':
        return SpherePoint.normalized([c * cmath.exp(1j * p * theta) for c, p in zip(self.z, weights)])


def _as_point(x) -> SpherePoint:
    return x if isinstance(x, SpherePoint) else SpherePoint(tuple(x))


@dataclass(frozen=True)
class StratumInfo:
    weights: Tuple[int, ...]

    @cached_property
    def subset_gcds(self) -> List[Tuple[Tuple[int, ...], int]]:
        k = len(self.weights)
        return [(subset, reduce(math.gcd, (self.weights[i] for i in subset)))
                for size in range(1, k + 1) for subset in combinations(range(k), size)]

    @cached_property
    def p_list(self) -> Tuple[int, ...]:
        return tuple(sorted({g for _, g in self.subset_gcds}))

    @property
    def t(self) -> int:
        return len(self.p_list)

    def support(self, x) -> Tuple[int, ...]:
        return tuple(i for i, c in enumerate(_as_point(x).z) if abs(c) > SUPPORT_THRESHOLD)

    def period_index(self, x) -> int:
        return reduce(math.gcd, (self.weights[i] for i in self.support(x)))

    def stratum_of(self, x) -> int:
        """r (1-based) with x in X_{p_r}."""
        return self.p_list.index(self.period_index(x)) + 1

    def singular_subsets(self, r: int) -> List[Tuple[int, ...]]:
        """Coordinate subsets I whose subspheres make up the closure of X^r_sing."""
        p_r = self.p_list[r - 1]
        return [subset for subset, g in self.subset_gcds if g > p_r]

    def representative_subset(self, r: int) -> Tuple[int, ...]:
        p_r = self.p_list[r - 1]
        return max((subset for subset, g in self.subset_gcds if g == p_r), key=len)


@dataclass(frozen=True)
class MonomialBasis:
    m: int
    exponents: np.ndarray
    log_norms: np.ndarray

    @property
    def dimension(self) -> int:
        return len(self.exponents)

    @property
    def norms(self) -> np.ndarray:
        return np.exp(self.log_norms)


@dataclass(frozen=True)
class WeightedSphere:
    n: int
    weights: Tuple[int, ...]
    metric_preset: str = 'levi'
    quadrature_order: int = 64
    threads: int = 1

    def __post_init__(self):
        weights = tuple(int(p) for p in self.weights)
        object.__setattr__(self, 'weights', weights)
        if len(weights) != self.n + 1:
            raise ModelError(f"{len(weights)} weights given for S^{2 * self.n + 1}")
        if any(p < 1 for p in weights):
            raise ModelError(f"weights must be positive, got {weights}")
        if reduce(math.gcd, weights) != 1:
            raise ModelError(f"weights must be coprime, got {weights}")
        if self.metric_preset not in METRIC_PRESETS:
            raise InadmissiblePresetError(f"unknown metric preset '{self.metric_preset}'")
        # the round metric is only rigid for the standard action
        if self.metric_preset == 'ambient-round' and any(p != 1 for p in weights):
            raise InadmissiblePresetError("the ambient-round metric has <T|T> = 1 only for unit weights")

    @property
    def unweighted(self) -> bool:
        return all(p == 1 for p in self.weights)

    @cached_property
    def strata(self) -> StratumInfo:
        return StratumInfo(self.weights)

    # --- periods and strata ---

    def period(self, x) -> float:
        """2 pi / q with q the gcd of the weights on the support of x."""
        return 2.0 * math.pi / self.strata.period_index(x)

    def stratum_of(self, x) -> int:
        return self.strata.stratum_of(x)

    def delta_bound(self) -> float:
        p = self.strata.p_list
        # half the shortest period, and the gaps between consecutive periods
        bound = math.pi / p[-1]
        for r in range(len(p) - 1):
            bound = min(bound, abs(2 * math.pi / p[r] - 2 * math.pi / p[r + 1]))
        return bound

    def check_delta(self, delta: float) -> float:
        bound = self.delta_bound()
        if not 0 < delta < bound:
            raise InvalidDeltaError(f"delta must lie in (0, {bound:.6g}), got {delta}")
        return delta

    def distance_to_stratum(self, x, r: Optional[int] = None) -> float:
        """Great-circle distance from x to X^r_sing (0 when that set is empty)."""
        x = _as_point(x)
        r = self.stratum_of(x) if r is None else r
        subsets = self.strata.singular_subsets(r)
        if not subsets:
            return 0.0
        a = x.array
        # distance to the subsphere on I is acos of the mass of x on I
        best = math.pi / 2
        for subset in subsets:
            norm = min(1.0, math.sqrt(math.fsum(abs(a[i]) ** 2 for i in subset)))
            best = min(best, math.acos(norm))
        return best

    def d_hat(self, x, r: Optional[int] = None, delta: Optional[float] = None) -> float:
        """inf over theta in [delta, 2 pi / p_r - delta] of d(x, e^{-i theta} x)."""
        x = _as_point(x)
        r = self.stratum_of(x) if r is None else r
        if delta is None:
            delta = 0.5 * self.delta_bound()
        self.check_delta(delta)
        if not self.strata.singular_subsets(r):
            return 0.0
        p_r = self.strata.p_list[r - 1]
        lo, hi = delta, 2 * math.pi / p_r - delta
        if lo >= hi:
            raise InvalidDeltaError(f"delta {delta} leaves an empty window for p_r = {p_r}")
        moduli = np.abs(x.array) ** 2
        weights = np.array(self.weights, dtype=float)

        def distance(theta):
            overlap = np.sum(moduli * np.cos(np.multiply.outer(np.atleast_1d(theta), weights)), axis=-1)
            return np.arccos(np.clip(overlap, -1.0, 1.0))

        # Coarse grid first, then refine around the best node
        grid = np.linspace(lo, hi, D_HAT_GRID)
        values = distance(grid)
        i = int(np.argmin(values))
        a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
        best = float(values[i])
        if b > a:
            refined = minimize_scalar(lambda t: float(distance(t)[0]), bounds=(a, b), method='bounded',
                                      options={'xatol': 1e-12})
            best = min(best, float(refined.fun))
        return best

    # --- charts ---

    def chart_coordinates(self, x) -> Tuple[int, Tuple[complex, ...], float]:
        """(pivot k, chart point w0, theta0) of x for the chart with z_k as pivot."""
        z = _as_point(x).array
        # pivot on the largest coordinate, rotated onto the positive axis
        pivot = int(np.argmax(np.abs(z)))
        p_k = self.weights[pivot]
        theta0 = cmath.phase(z[pivot]) / p_k
        t0 = abs(z[pivot]) ** (1.0 / p_k)
        w0 = tuple(z[j] * cmath.exp(-1j * self.weights[j] * theta0) / t0 ** self.weights[j]
                   for j in range(self.n + 1) if j != pivot)
        return pivot, w0, theta0

    def _others(self, pivot: int) -> List[int]:
        return [j for j in range(self.n + 1) if j != pivot]

    def radial_solve(self, pivot: int, ws: Sequence[Jet], wbs: Sequence[Jet]) -> Jet:
        """u = t^2 with sum_{j != k} u^{p_j} |w_j|^2 + u^{p_k} = 1."""
        others = [self.weights[j] for j in self._others(pivot)]
        p_k = self.weights[pivot]

        def equation(u, ws_, wbs_):
            total = u ** p_k - 1.0
            for p, w, wb in zip(others, ws_, wbs_):
                total = total + u ** p * (w * wb)
            return total

        return newton_jet_solve(equation, 1.0, ws, wbs)

    def embedding_jets(self, pivot: int, ws: Sequence[Jet], wbs: Sequence[Jet]) -> Tuple[Jet, Jet, List[Jet]]:
        """(u, phi, ambient coordinates z_l at theta = 0)."""
        u = self.radial_solve(pivot, ws, wbs)
        phi = -0.5 * u.log()
        zs, others = [], iter(ws)
        for l in range(self.n + 1):
            radial = u ** (self.weights[l] / 2.0)
            zs.append(radial if l == pivot else radial * next(others))
        return u, phi, zs

    def _frame_on_coordinates(self, phi: Jet, zs: Sequence[Jet], j: int, conjugate: bool) -> List[Jet]:
        """Z_j applied to z_l (or to conj z_l) for every l, at theta = 0."""
        phi_j = phi.derivative(j)
        result = []
        for l, z in enumerate(zs):
            p = self.weights[l]
            if conjugate:
                zb = z.conj()
                result.append(zb.derivative(j) + p * phi_j * zb)
            else:
                result.append(z.derivative(j) - p * phi_j * z)
        return result

    def brt_chart_at(self, x, radius: float = math.inf) -> BRTChart:
        pivot, w0, theta0 = self.chart_coordinates(x)

        def potential(ws, wbs):
            return -0.5 * self.radial_solve(pivot, ws, wbs).log()

        metric_gram = None
        if self.metric_preset == 'ambient-round':
            def metric_gram(ws, wbs):
                _, phi, zs = self.embedding_jets(pivot, ws, wbs)
                columns = [self._frame_on_coordinates(phi, zs, j, conjugate=False) for j in range(self.n)]
                return [[0.5 * sum((columns[j][l] * columns[k][l].conj() for l in range(1, self.n + 1)),
                                   columns[j][0] * columns[k][0].conj())
                         for k in range(self.n)] for j in range(self.n)]

        label = f"S{2 * self.n + 1}{list(self.weights)}@z{pivot + 1}"
        logger.debug("chart %s at w0=%s theta0=%.6g", label, w0, theta0)
        return BRTChart(n=self.n, potential=potential, center=w0, radius=radius, metric_gram=metric_gram,
                        label=label, meta={'pivot': pivot, 'theta0': theta0, 'sphere': self})

    def tangency_residual(self, chart: BRTChart, w: Sequence[complex]) -> float:
        """max |Z_j conj(z_l)|: the frames must annihilate every conjugate coordinate."""
        context = get_context(self.n, chart.order)
        ws, wbs = variables(context, w)
        _, phi, zs = self.embedding_jets(chart.meta['pivot'], ws, wbs)
        return max(abs(v.value) for j in range(self.n)
                   for v in self._frame_on_coordinates(phi, zs, j, conjugate=True))

    # --- volume forms ---

    def levi_volume_density(self, x) -> float:
        t = np.abs(_as_point(x).array) ** 2
        q = float(np.dot(self.weights, t))
        return 1.0 / (math.pi ** self.n * q ** (self.n + 1))

    def chart_density_ratio(self, x) -> float:
        """Levi density a(w) divided by the round density of the chart embedding at x."""
        chart = self.brt_chart_at(x)
        pivot, w0 = chart.meta['pivot'], chart.center
        context = get_context(self.n, 2)
        ws, wbs = variables(context, w0)
        _, _, zs = self.embedding_jets(pivot, ws, wbs)
        n = self.n
        columns = []
        for j in range(n):
            dz = np.array([z.derivative(j).value for z in zs])
            dzb = np.array([z.derivative(n + j).value for z in zs])
            columns.append(dz + dzb)
            columns.append(1j * (dz - dzb))
        columns.append(1j * np.array(self.weights) * np.array([z.value for z in zs]))
        real = np.array([np.concatenate([c.real, c.imag]) for c in columns]).T
        # induced round volume from the Gram determinant of the real frame
        sigma = math.sqrt(np.linalg.det(real.T @ real))
        a = np.linalg.det(levi_matrix(chart, w0)).real / math.pi ** n
        return a / sigma

    def _density_on_simplex(self, t: np.ndarray) -> np.ndarray:
        q = np.tensordot(np.array(self.weights, dtype=float), t, axes=1)
        return 1.0 / (math.pi ** self.n * q ** (self.n + 1))

    def log_norm(self, alpha: Sequence[int]) -> float:
        """log of the squared L^2 norm of z^alpha under the preset volume form."""
        alpha = tuple(int(a) for a in alpha)
        log_round = (math.log(2.0) + (self.n + 1) * math.log(math.pi)
                     + sum(gammaln(a + 1.0) for a in alpha) - gammaln(self.n + sum(alpha) + 1.0))
        if self.metric_preset == 'ambient-round':
            return log_round
        # unit weights: the Levi volume is the round one divided by pi^n
        if self.unweighted:
            return log_round - self.n * math.log(math.pi)
        return log_round + math.log(_levi_expectation(self, alpha))

    def volume(self) -> float:
        return math.exp(self.log_norm((0,) * (self.n + 1)))

    # --- monomial bases and kernels ---

    def monomial_norms(self, m: int) -> MonomialBasis:
        if m < 0:
            raise ModelError("negative Fourier index is not supported")
        return _basis(self, m)

    def _log_moduli(self, x) -> np.ndarray:
        with np.errstate(divide='ignore'):
            return np.log(np.abs(_as_point(x).array) ** 2)

    def szego_value(self, m: int, x) -> float:
        """S_m(x) = sum |z^alpha|^2 / ||z^alpha||^2, summed in exponent order."""
        basis = self.monomial_norms(m)
        logs = self._log_moduli(x)
        exps = basis.exponents
        with np.errstate(invalid='ignore'):
            powers = np.where(exps > 0, exps * logs, 0.0)
        # |z^alpha|^2 in log space, 0 log 0 taken as 0
        terms = np.exp(powers.sum(axis=1) - basis.log_norms)
        return math.fsum(terms.tolist())

    def szego_gradient(self, m: int, x) -> np.ndarray:
        """Ambient gradient of S_m as a complex vector, 2 dS/dzbar."""
        basis = self.monomial_norms(m)
        z = _as_point(x).array
        logs = self._log_moduli(x)
        exps = basis.exponents
        grad = np.zeros(self.n + 1, dtype=complex)
        for j in range(self.n + 1):
            mask = exps[:, j] > 0
            if not np.any(mask):
                continue
            lowered = exps[mask].copy()
            lowered[:, j] -= 1
            with np.errstate(invalid='ignore'):
                powers = np.where(lowered > 0, lowered * logs, 0.0)
            terms = exps[mask, j] * np.exp(powers.sum(axis=1) - basis.log_norms[mask])
            grad[j] = 2.0 * z[j] * math.fsum(terms.tolist())
        return grad

    def tangential_gradient_norm(self, m: int, x) -> float:
        z = _as_point(x).array
        grad = self.szego_gradient(m, x)
        # drop the normal component
        tangential = grad - np.real(np.vdot(z, grad)) * z
        return float(np.linalg.norm(tangential))

    # --- sample points ---

    def stratum_representatives(self) -> List[Tuple[int, SpherePoint]]:
        result = []
        for r in range(1, self.strata.t + 1):
            subset = self.strata.representative_subset(r)
            values = np.zeros(self.n + 1, dtype=complex)
            values[list(subset)] = 1.0
            result.append((r, SpherePoint.normalized(values)))
        return result

    def random_points(self, r: int, count: int, rng: np.random.Generator) -> Iterator[SpherePoint]:
        subset = list(self.strata.representative_subset(r))
        produced = 0
        while produced < count:
            values = np.zeros(self.n + 1, dtype=complex)
            values[subset] = rng.normal(size=len(subset)) + 1j * rng.normal(size=len(subset))
            point = SpherePoint.normalized(values)
            # stay clear of the smaller strata
            if np.min(np.abs(point.array[subset])) < 1e-3:
                continue
            produced += 1
            yield point


@lru_cache(maxsize=65536)
def _levi_expectation(sphere: WeightedSphere, alpha: Tuple[int, ...]) -> float:
    return checked_expectation(sphere._density_on_simplex, alpha, sphere.quadrature_order)


@lru_cache(maxsize=512)
def _basis(sphere: WeightedSphere, m: int) -> MonomialBasis:
    exponents = weighted_exponents(sphere.weights, m)
    if sphere.threads > 1 and len(exponents) > 1:
        with ThreadPoolExecutor(max_workers=sphere.threads) as executor:
            futures = [executor.submit(sphere.log_norm, alpha) for alpha in exponents]
            log_norms = [future.result() for future in futures]
    else:
        log_norms = [sphere.log_norm(alpha) for alpha in exponents]
    logger.debug("basis m=%d for weights %s: %d monomials", m, sphere.weights, len(exponents))
    return MonomialBasis(m=m, exponents=np.array(exponents, dtype=int).reshape(len(exponents), sphere.n + 1),
                         log_norms=np.array(log_norms, dtype=float))
