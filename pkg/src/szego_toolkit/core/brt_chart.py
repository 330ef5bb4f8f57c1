"""BRT charts: canonical coordinates (z, theta) with a rigid potential phi.

In a chart the CR frames are Z_j = d/dz_j + i phi_{z_j} d/dtheta, the generator of the
circle action is T = d/dtheta and the contact form is
omega0 = -dtheta + i d phi - i dbar phi.
"""
import math
import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import jet_engine
from .errors import GeometryError, NotPseudoconvexError, OverlapError
from .field_parser import compile_field, compile_matrix
from .jet_engine import Jet, as_jet, get_context, newton_jet_solve, variables

logger = logging.getLogger(__name__)

Point = Sequence[complex]
GramFunction = Callable[[Sequence, Sequence], List[List]]


@dataclass(frozen=True)
class BRTChart:
    """Immutable chart description.

    ``potential`` and the optional ``metric_gram`` (H_jk = <Z_j|Z_k> of the rigid metric)
    are callables ``(zs, zbs)`` or text descriptions.
    """
    n: int
    potential: Union[str, Callable]
    center: Tuple[complex, ...] = ()
    radius: float = math.inf
    metric_gram: Optional[Union[Sequence[Sequence[str]], GramFunction]] = None
    label: str = 'chart'
    order: int = jet_engine.DEFAULT_ORDER
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        # compile text descriptions once, at construction
        if isinstance(self.potential, str):
            object.__setattr__(self, 'potential', compile_field(self.potential, self.n))
        if self.metric_gram is not None and not callable(self.metric_gram):
            object.__setattr__(self, 'metric_gram', compile_matrix(self.metric_gram, self.n))
        # an empty center means the origin
        center = tuple(complex(c) for c in self.center) if self.center else (0j,) * self.n
        if len(center) != self.n:
            raise GeometryError(f"chart '{self.label}' has center of dimension {len(center)}, expected {self.n}")
        object.__setattr__(self, 'center', center)

    def contains(self, z: Point) -> bool:
        return max(abs(complex(a) - b) for a, b in zip(z, self.center)) < self.radius

    def _variables(self, z: Point):
        if len(z) != self.n:
            raise GeometryError(f"point {z} has wrong dimension for chart '{self.label}'")
        if not self.contains(z):
            raise GeometryError(f"point {z} outside the domain of chart '{self.label}'")
        return variables(get_context(self.n, self.order), z)

    def potential_jet(self, z: Point) -> Jet:
        zs, zbs = self._variables(z)
        return as_jet(self.potential(zs, zbs), zs[0].context)

    def gram_jets(self, z: Point) -> Optional[List[List[Jet]]]:
        if self.metric_gram is None:
            return None
        zs, zbs = self._variables(z)
        context = zs[0].context
        return [[as_jet(entry, context) for entry in row] for row in self.metric_gram(zs, zbs)]


def levi_jets(phi: Jet) -> List[List[Jet]]:
    """Jets of g_{jk} = 2 d_j dbar_k phi (valid two orders below phi)."""
    n = phi.context.n_pairs
    first = [phi.derivative(j) for j in range(n)]
    return [[2.0 * first[j].derivative(n + k) for k in range(n)] for j in range(n)]


def require_positive(matrix: np.ndarray, what: str, error=NotPseudoconvexError) -> np.ndarray:
    """Cholesky factor of a Hermitian matrix, raising ``error`` when it is not positive definite."""
    try:
        return np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError:
        raise error(f"{what} is not positive definite: eigenvalues {np.linalg.eigvalsh(matrix)}") from None


def levi_matrix(chart: BRTChart, z: Point) -> np.ndarray:
    """Levi matrix g = 2 d dbar phi at z; the Levi-metric Gram matrix is g / (2 pi)."""
    g = np.array([[entry.value for entry in row] for row in levi_jets(chart.potential_jet(z))])
    require_positive(0.5 * (g + g.conj().T), f"Levi matrix of chart '{chart.label}' at {tuple(z)}")
    return g


def dbar_b(chart: BRTChart, m: int, u_tilde: Union[str, Callable], z: Point) -> List[Jet]:
    """Coefficients on dzbar_j of e^{-im theta} dbar_b(e^{im theta} u_tilde)."""
    if isinstance(u_tilde, str):
        u_tilde = compile_field(u_tilde, chart.n)
    phi = chart.potential_jet(z)
    zs, zbs = variables(phi.context, z)
    u = as_jet(u_tilde(zs, zbs), phi.context)
    n = chart.n
    # conjugating by e^{im theta} turns the T-part of conj Z_j into m phi_{zbar_j}
    return [u.derivative(n + j) + m * phi.derivative(n + j) * u for j in range(n)]


@dataclass(frozen=True)
class ContactData:
    """omega0 = -dtheta + sum dz_j * dz[j] + sum dzbar_j * dzbar[j] at one point."""
    z: Tuple[complex, ...]
    dz: np.ndarray
    dzbar: np.ndarray
    dtheta: float = -1.0

    def pair(self, a: Sequence[complex], b: Sequence[complex], c: complex) -> complex:
        """omega0 on the vector sum a_j d/dz_j + b_j d/dzbar_j + c d/dtheta."""
        return complex(np.dot(self.dz, a) + np.dot(self.dzbar, b) + self.dtheta * c)

    def frame(self, j: int) -> Tuple[np.ndarray, np.ndarray, complex]:
        n = len(self.z)
        a = np.zeros(n, dtype=complex)
        a[j] = 1.0
        # dz[j] = i phi_{z_j}, which is also the theta-component of Z_j
        return a, np.zeros(n, dtype=complex), complex(self.dz[j])

    def conj_frame(self, j: int) -> Tuple[np.ndarray, np.ndarray, complex]:
        n = len(self.z)
        b = np.zeros(n, dtype=complex)
        b[j] = 1.0
        return np.zeros(n, dtype=complex), b, complex(self.dzbar[j])

    def generator(self) -> Tuple[np.ndarray, np.ndarray, complex]:
        n = len(self.z)
        return np.zeros(n, dtype=complex), np.zeros(n, dtype=complex), 1.0 + 0j


def contact_data(chart: BRTChart, z: Point) -> ContactData:
    phi = chart.potential_jet(z)
    n = chart.n
    # omega0 = -dtheta + i d phi - i dbar phi
    dz = np.array([1j * phi.derivative(j).value for j in range(n)])
    dzbar = np.array([-1j * phi.derivative(n + j).value for j in range(n)])
    return ContactData(tuple(complex(c) for c in z), dz, dzbar)


def contact_residuals(chart: BRTChart, z: Point) -> float:
    """max of |omega0(Z_j)|, |omega0(conj Z_j)|, |omega0(T) + 1|."""
    data = contact_data(chart, z)
    worst = abs(data.pair(*data.generator()) + 1.0)
    for j in range(chart.n):
        worst = max(worst, abs(data.pair(*data.frame(j))), abs(data.pair(*data.conj_frame(j))))
    return worst


@dataclass(frozen=True)
class Transition:
    """Holomorphic change of canonical coordinates w = H(z), gamma = theta + G(z).

    ``inverse`` (optional) maps w back to z; without it the inverse is solved for with
    :func:`newton_jet_solve`.
    """
    H_map: Callable
    G: Optional[Callable] = None
    inverse: Optional[Callable] = None
    label: str = 'transition'

    def image_jets(self, z: Point, order: int = jet_engine.DEFAULT_ORDER) -> List[Jet]:
        context = get_context(len(z), order)
        zs, zbs = variables(context, z)
        return [as_jet(h, context) for h in self.H_map(zs, zbs)]

    def apply(self, z: Point) -> np.ndarray:
        return np.array([h.value for h in self.image_jets(z, order=1)])

    def jacobian(self, z: Point) -> np.ndarray:
        jets = self.image_jets(z, order=1)
        n = len(z)
        return np.array([[h.derivative(k).value for k in range(n)] for h in jets])

    def holomorphy_residual(self, z: Point) -> float:
        """Largest coefficient of any dbar H_j jet."""
        n = len(z)
        return max(float(np.max(np.abs(h.derivative(n + k).coeffs)))
                   for h in self.image_jets(z) for k in range(n))

    def _inverse_jets(self, ws: Sequence[Jet], wbs: Sequence[Jet], seed: Sequence[complex]) -> List[Jet]:
        if self.inverse is not None:
            context = ws[0].context
            return [as_jet(u, context) for u in self.inverse(ws, wbs)]

        # solve H(u) = w order by order, seeded at the chart center
        def equation(us, ws_, wbs_):
            images = self.H_map(us, [u.conj() for u in us])
            return [h - w for h, w in zip(images, ws_)]

        return newton_jet_solve(equation, list(seed), ws, wbs)

    def pushforward(self, chart: BRTChart, radius: Optional[float] = None, label: Optional[str] = None) -> BRTChart:
        """Chart in the w coordinates carrying the same CR structure and rigid metric."""
        if self.G is not None:
            raise GeometryError("pushforward is only defined for transitions with G = 0")
        seed = chart.center

        def source_jets(field_fn, us):
            # expand in the source chart's own variables, then substitute z = H^{-1}(w)
            context = get_context(len(us), us[0].context.order)
            zs, zbs = variables(context, [u.value for u in us])
            return field_fn(zs, zbs), context

        def potential(ws, wbs):
            us = self._inverse_jets(ws, wbs, seed)
            ubs = [u.conj() for u in us]
            outer, context = source_jets(chart.potential, us)
            return jet_engine.compose(as_jet(outer, context), us, ubs)

        metric_gram = None
        if chart.metric_gram is not None:
            def metric_gram(ws, wbs):
                us = self._inverse_jets(ws, wbs, seed)
                ubs = [u.conj() for u in us]
                n = len(us)
                rows, context = source_jets(chart.metric_gram, us)
                gram = [[jet_engine.compose(as_jet(entry, context), us, ubs) for entry in row] for row in rows]
                # Z~_j = sum_k (dz_k/dw_j) Z_k
                du = [[us[k].derivative(j) for k in range(n)] for j in range(n)]
                return [[sum((du[j][k] * gram[k][l] * du[i][l].conj() for k in range(n) for l in range(n)),
                             0.0) for i in range(n)] for j in range(n)]

        # the new chart is centered at the image of the old center
        center = tuple(self.apply(chart.center))
        return BRTChart(n=chart.n, potential=potential, center=center,
                        radius=chart.radius if radius is None else radius, metric_gram=metric_gram,
                        label=label or f"{chart.label}->{self.label}", order=chart.order)


def transition_density_check(t: Transition, chart_a: BRTChart, chart_b: BRTChart, z: Point) -> float:
    """| a_b(H(z)) |det dH/dz|^2 - a_a(z) | with a = det g / pi^n."""
    w = t.apply(z)
    if not chart_a.contains(z) or not chart_b.contains(w):
        raise OverlapError(f"{tuple(z)} is not in the overlap of '{chart_a.label}' and '{chart_b.label}'")
    n = chart_a.n
    a_a = np.linalg.det(levi_matrix(chart_a, z)).real / math.pi ** n
    a_b = np.linalg.det(levi_matrix(chart_b, w)).real / math.pi ** n
    # a transforms as a density: |det dH|^2 a_b(H(z)) = a_a(z)
    jacobian_factor = abs(np.linalg.det(t.jacobian(z))) ** 2
    residual = abs(a_b * jacobian_factor - a_a)
    logger.debug("transition %s at %s: density residual %.3e", t.label, tuple(z), residual)
    return residual
