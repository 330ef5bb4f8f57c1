"""Rigid CR curvature of a BRT chart, evaluated at a point from potential jets.

Conventions (Z-frame indices, G[j, k] = g_{j kbar} = 2 d_j dbar_k phi):

* Levi metric Gram h = G / (2 pi); Laplacian Delta f = -4 pi tr(G^{-1} F), F[j, k] = d_j dbar_k f.
* Theta density b = 2^n det H for the rigid Gram H (H = h gives b = a = det G / pi^n).
* Chern curvature of h: Omega_{alpha beta} = -dbar_beta(d_alpha h h^{-1}) on dz_alpha ^ dzbar_beta;
  as an endomorphism it acts on Z-coordinates through its transpose.
* Norms are taken in an h-orthonormal frame E with E^T h conj(E) = I.
"""
import math
import time
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .brt_chart import BRTChart, levi_jets, require_positive
from .errors import SingularMetricError
from .jet_engine import Jet, wirtinger

logger = logging.getLogger(__name__)

JetMatrix = List[List[Jet]]


def jet_det(m: Sequence[Sequence]):
    """Determinant of a 1x1..3x3 matrix of jets (or numbers) by cofactor expansion."""
    n = len(m)
    if n == 1:
        return m[0][0]
    if n == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    if n == 3:
        return (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))
    raise ValueError(f"jet matrices are limited to 3x3, got {n}x{n}")


def jet_inverse(m: Sequence[Sequence[Jet]]) -> JetMatrix:
    n = len(m)
    det_inv = 1.0 / jet_det(m)
    if n == 1:
        return [[det_inv]]
    result = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [[m[r][c] for c in range(n) if c != j] for r in range(n) if r != i]
            cofactor = jet_det(minor) * (-1.0) ** (i + j)
            result[j][i] = cofactor * det_inv
    return result


def jet_matmul(a: Sequence[Sequence], b: Sequence[Sequence]) -> JetMatrix:
    n = len(a)
    return [[sum((a[i][k] * b[k][j] for k in range(1, n)), a[i][0] * b[0][j]) for j in range(n)]
            for i in range(n)]


def values(m: Sequence[Sequence]) -> np.ndarray:
    return np.array([[entry.value if isinstance(entry, Jet) else complex(entry) for entry in row] for row in m])


def hermitian_hessian(f: Jet) -> np.ndarray:
    """F[j, k] = d_j dbar_k f at the base point."""
    n = f.context.n_pairs
    eye = np.eye(n, dtype=int)
    return np.array([[wirtinger(f, eye[j], eye[k]) for k in range(n)] for j in range(n)])


def laplacian_levi(f_jet: Jet, g_at_z: np.ndarray) -> float:
    """Delta_L f = -2 sum <e_j|e_k>_L d_j dbar_k f, the Levi metric being g / (2 pi)."""
    g = np.asarray(g_at_z, dtype=complex)
    require_positive(0.5 * (g + g.conj().T), "metric", SingularMetricError)
    return float((-4.0 * math.pi * np.trace(np.linalg.solve(g, hermitian_hessian(f_jet)))).real)


def orthonormal_frame(h: np.ndarray) -> np.ndarray:
    """E with E^T h conj(E) = I (columns are the frame in Z-coordinates)."""
    lower = require_positive(h, "metric", SingularMetricError)
    return np.linalg.inv(lower).T


@dataclass(frozen=True)
class CurvatureReport:
    g: np.ndarray
    h: np.ndarray
    h_inv: np.ndarray
    a_density: float
    b_density: float
    S_L: float
    S_Theta_L: float
    lap_S_L: float
    lap_S_Theta_L: float
    Rdet_Theta: np.ndarray
    chern_curv: np.ndarray
    ricci: np.ndarray
    norms: Dict[str, float]
    Rdot: np.ndarray
    det_Rdot: float
    tw_scalar: float

    NORM_KEYS = ('Rdet', 'Ric', 'Ric_Rdet', 'RT')

    def row(self) -> Dict[str, float]:
        """Scalar columns in their fixed CSV order."""
        return {
            'S_L': self.S_L, 'S_Theta_L': self.S_Theta_L, 'lap_S_L': self.lap_S_L,
            'lap_S_Theta_L': self.lap_S_Theta_L, 'a_density': self.a_density, 'b_density': self.b_density,
            'det_Rdot': self.det_Rdot, 'tw_scalar': self.tw_scalar,
            'Rdet_norm2': self.norms['Rdet'], 'Ric_norm2': self.norms['Ric'],
            'Ric_Rdet_pairing': self.norms['Ric_Rdet'], 'RT_norm2': self.norms['RT'],
        }


class LocalGeometry:
    """Shared jet cache for one (chart, point); every quantity is computed lazily once."""

    def __init__(self, chart: BRTChart, z: Sequence[complex], use_gram: bool = True):
        self.chart = chart
        self.z = tuple(complex(c) for c in z)
        self.n = chart.n
        self.use_gram = use_gram and chart.metric_gram is not None

    @cached_property
    def phi(self) -> Jet:
        return self.chart.potential_jet(self.z)

    @cached_property
    def g_jets(self) -> JetMatrix:
        return levi_jets(self.phi)

    @cached_property
    def g(self) -> np.ndarray:
        g = values(self.g_jets)
        # Levi form must be positive definite at the point
        require_positive(0.5 * (g + g.conj().T), f"Levi matrix of chart '{self.chart.label}' at {self.z}")
        return g

    @cached_property
    def g_inv_jets(self) -> JetMatrix:
        self.g  # positivity check first
        return jet_inverse(self.g_jets)

    @cached_property
    def gram_jets(self) -> JetMatrix:
        # Levi Gram g / (2 pi) when the chart carries no rigid metric
        if self.use_gram:
            return self.chart.gram_jets(self.z)
        return [[entry / (2.0 * math.pi) for entry in row] for row in self.g_jets]

    @cached_property
    def gram(self) -> np.ndarray:
        gram = values(self.gram_jets)
        require_positive(0.5 * (gram + gram.conj().T), "rigid metric Gram matrix", SingularMetricError)
        return gram

    def laplacian_jet(self, f: Jet) -> Jet:
        n = self.n
        inv = self.g_inv_jets
        total = None
        for j in range(n):
            fj = f.derivative(j)
            for k in range(n):
                term = inv[k][j] * fj.derivative(n + k)
                total = term if total is None else total + term
        return -4.0 * math.pi * total

    # --- determinant line and Levi volume ---

    @cached_property
    def log_a(self) -> Jet:
        return (jet_det(self.g_jets) / math.pi ** self.n).log()

    @cached_property
    def S_L_jet(self) -> Jet:
        return self.laplacian_jet(self.log_a)

    @cached_property
    def log_b(self) -> Jet:
        self.gram
        return (2.0 ** self.n * jet_det(self.gram_jets)).log()

    @cached_property
    def S_Theta_jet(self) -> Jet:
        return self.laplacian_jet(self.log_b)

    @cached_property
    def Rdet(self) -> np.ndarray:
        r = hermitian_hessian(self.log_b)
        return 0.5 * (r + r.conj().T)

    # --- Chern curvature of the Levi metric ---

    @cached_property
    def chern_curv(self) -> np.ndarray:
        """R[j, k, alpha, beta] = -dbar_beta (d_alpha h h^{-1})_{jk}."""
        n = self.n
        curv = np.empty((n, n, n, n), dtype=complex)
        for alpha in range(n):
            # connection matrix d_alpha h h^{-1}, then its dbar derivatives
            d_g = [[entry.derivative(alpha) for entry in row] for row in self.g_jets]
            connection = jet_matmul(d_g, self.g_inv_jets)
            for beta in range(n):
                for j in range(n):
                    for k in range(n):
                        curv[j, k, alpha, beta] = -connection[j][k].derivative(n + beta).value
        return curv

    @cached_property
    def frame(self) -> np.ndarray:
        return orthonormal_frame(self.g / (2.0 * math.pi))

    @cached_property
    def chern_orthonormal(self) -> np.ndarray:
        """K[a, b, t, s] = <R(e_a, ebar_b) e_s | e_t>."""
        e = self.frame
        e_inv = np.linalg.inv(e)
        # evaluate the form on the frame, then conjugate the endomorphism into it
        forms = np.einsum('xa,yb,jkxy->abjk', e, e.conj(), self.chern_curv)
        return np.einsum('tk,abjk,js->abts', e_inv, forms, e)

    @cached_property
    def ricci_orthonormal(self) -> np.ndarray:
        return -np.einsum('jbja->ab', self.chern_orthonormal)

    @cached_property
    def ricci(self) -> np.ndarray:
        e_inv = np.linalg.inv(self.frame)
        return e_inv.T @ self.ricci_orthonormal @ e_inv.conj()

    @cached_property
    def norms(self) -> Dict[str, float]:
        e = self.frame
        # R^det in the same orthonormal frame
        rdet = e.T @ self.Rdet @ e.conj()
        ric = self.ricci_orthonormal
        return {
            'Rdet': float(np.sum(np.abs(rdet) ** 2)),
            'Ric': float(np.sum(np.abs(ric) ** 2)),
            'Ric_Rdet': float(np.sum(ric * rdet.conj()).real),
            'RT': float(np.sum(np.abs(self.chern_orthonormal) ** 2)),
        }

    # --- Rdot ---

    @cached_property
    def rdot(self) -> Tuple[np.ndarray, float]:
        # M^T H = g in the Z-frame
        matrix = np.linalg.solve(self.gram.T, self.g.T)
        det = float((np.linalg.det(self.g) / np.linalg.det(self.gram)).real)
        return matrix, det


class CurvatureEngine:
    """Curvature of one BRT chart, with the jets of every visited point kept in a cache."""

    def __init__(self, chart: BRTChart, use_gram: bool = True):
        self.chart = chart
        self.use_gram = use_gram
        self.geometry_cache: Dict[Tuple[complex, ...], LocalGeometry] = {}
        self.report_cache: Dict[Tuple[complex, ...], CurvatureReport] = {}
        self.last_report_stats = {
            'point': None,
            'time_taken': 0.0,
            'cached': False,
            'points_visited': 0,
        }

    def geometry(self, z: Sequence[complex]) -> LocalGeometry:
        key = tuple(complex(c) for c in z)
        # Check cache first
        geo = self.geometry_cache.get(key)
        if geo is None:
            geo = LocalGeometry(self.chart, key, self.use_gram)
            self.geometry_cache[key] = geo
        return geo

    def scalar_curvature(self, z: Sequence[complex]) -> float:
        """S_L = Delta_L log(det g / pi^n)."""
        return float(self.geometry(z).S_L_jet.value.real)

    def theta_quantities(self, z: Sequence[complex]) -> Tuple[float, float, np.ndarray]:
        """(b, S^Theta_L, R^det_Theta); without a chart Gram the Levi Gram is used."""
        geo = self.geometry(z)
        return float(geo.log_b.exp().value.real), float(geo.S_Theta_jet.value.real), geo.Rdet

    def chern_package(self, z: Sequence[complex]):
        """(chern_curv, ricci, norms) with the pairing taken against R^det_Theta."""
        geo = self.geometry(z)
        return geo.chern_curv, geo.ricci, geo.norms

    def rdot(self, z: Sequence[complex]) -> Tuple[np.ndarray, float]:
        return self.geometry(z).rdot

    def tw_scalar(self, z: Sequence[complex]) -> float:
        """Tanaka-Webster scalar curvature along the pseudohermitian path.

        Connection forms omega_alpha^beta = sum_j (d_j G G^{-1})[alpha, beta] dz_j, curvature
        R_alpha^beta_{j kbar} = -dbar_k of their coefficients, Ricci R_{alpha kbar} = sum_j R_alpha^j_{j kbar},
        scalar R = sum (G^{-1})[k, alpha] R_{alpha kbar}.
        """
        geo = self.geometry(z)
        n = geo.n
        g = geo.g  # positivity check
        ricci = np.zeros((n, n), dtype=complex)
        for j in range(n):
            d_g = [[entry.derivative(j) for entry in row] for row in geo.g_jets]
            omega = jet_matmul(d_g, geo.g_inv_jets)
            # contract the j-th row of the connection against dbar_k
            for alpha in range(n):
                for k in range(n):
                    ricci[alpha, k] -= omega[alpha][j].derivative(n + k).value
        return float(np.sum(np.linalg.inv(g).T * ricci).real)

    def report(self, z: Sequence[complex]) -> CurvatureReport:
        """Every curvature quantity at z, in one frozen record."""
        start_time = time.time()
        geo = self.geometry(z)

        # Check cache first
        cached = self.report_cache.get(geo.z)
        if cached is not None:
            self.last_report_stats.update({'point': geo.z, 'time_taken': 0.0, 'cached': True})
            return cached

        h = geo.g / (2.0 * math.pi)
        matrix, det = geo.rdot
        report = CurvatureReport(
            g=geo.g, h=h, h_inv=np.linalg.inv(h),
            a_density=float(geo.log_a.exp().value.real),
            b_density=float(geo.log_b.exp().value.real),
            S_L=float(geo.S_L_jet.value.real),
            S_Theta_L=float(geo.S_Theta_jet.value.real),
            lap_S_L=laplacian_levi(geo.S_L_jet, geo.g),
            lap_S_Theta_L=laplacian_levi(geo.S_Theta_jet, geo.g),
            Rdet_Theta=geo.Rdet, chern_curv=geo.chern_curv, ricci=geo.ricci, norms=geo.norms,
            Rdot=matrix, det_Rdot=det,
            tw_scalar=self.tw_scalar(geo.z),
        )

        # Update cache and stats
        self.report_cache[geo.z] = report
        self.last_report_stats.update({
            'point': geo.z,
            'time_taken': time.time() - start_time,
            'cached': False,
            'points_visited': len(self.report_cache),
        })
        logger.debug("curvature at %s in '%s': S_L=%.12g S_Theta=%.12g det_Rdot=%.12g",
                     geo.z, self.chart.label, report.S_L, report.S_Theta_L, report.det_Rdot)
        return report

    def clear_cache(self) -> None:
        self.geometry_cache.clear()
        self.report_cache.clear()


def rigid_scalar_curvature(chart: BRTChart, z: Sequence[complex]) -> float:
    return CurvatureEngine(chart).scalar_curvature(z)


def theta_quantities(chart: BRTChart, z: Sequence[complex], use_gram: bool = True) -> Tuple[float, float, np.ndarray]:
    return CurvatureEngine(chart, use_gram).theta_quantities(z)


def chern_package(chart: BRTChart, z: Sequence[complex], use_gram: bool = True):
    return CurvatureEngine(chart, use_gram).chern_package(z)


def rdot(chart: BRTChart, z: Sequence[complex], use_gram: bool = True) -> Tuple[np.ndarray, float]:
    return CurvatureEngine(chart, use_gram).rdot(z)


def tw_scalar(chart: BRTChart, z: Sequence[complex]) -> float:
    return CurvatureEngine(chart).tw_scalar(z)


def curvature_report(chart: BRTChart, z: Sequence[complex], use_gram: bool = True) -> CurvatureReport:
    return CurvatureEngine(chart, use_gram).report(z)
