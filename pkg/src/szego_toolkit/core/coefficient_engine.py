"""Expansion coefficients b0, b1, b2 and their chart-local Bergman counterparts."""
import math
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .brt_chart import BRTChart, levi_jets
from .curvature_engine import CurvatureEngine, CurvatureReport, jet_det, jet_inverse, orthonormal_frame, values
from .errors import InadmissiblePresetError, SingularMetricError, UnsupportedTruncationError
from .jet_engine import Jet

logger = logging.getLogger(__name__)

METRIC_PRESETS = ('levi', 'ambient-round')
MAX_TRUNCATION = 3


@dataclass(frozen=True)
class CoefficientSet:
    b0: float
    b1: float
    b2: float
    n: int
    provenance: str = ''

    def as_tuple(self) -> Tuple[float, float, float]:
        return self.b0, self.b1, self.b2


@dataclass(frozen=True)
class ExpansionPrediction:
    m: int
    r: int
    p_r: int
    terms: Tuple[float, ...]
    sum_factor: int
    value: float


def assemble_coefficients(prefactor: float, S: float, S_theta: float, lap_S: float, lap_S_theta: float,
                          rdet2: float, ric_rdet: float, ric2: float, rt2: float) -> Tuple[float, float, float]:
    """(b0, b1, b2) from the leading factor and the nine curvature scalars."""
    pi2 = math.pi ** 2
    b1 = prefactor * (S_theta / (4 * math.pi) - S / (8 * math.pi))
    b2 = prefactor * (
        S ** 2 / (128 * pi2)
        - S * S_theta / (32 * pi2)
        + S_theta ** 2 / (32 * pi2)
        - lap_S_theta / (32 * pi2)
        - rdet2 / (8 * pi2)
        + ric_rdet / (8 * pi2)
        + lap_S / (96 * pi2)
        - ric2 / (24 * pi2)
        + rt2 / (96 * pi2)
    )
    return prefactor, b1, b2


def coefficients_from_report(report: CurvatureReport, provenance: str = '') -> CoefficientSet:
    n = report.g.shape[0]
    # leading term from the ratio of the two volume forms
    b0 = (2 * math.pi) ** (-n - 1) * report.det_Rdot
    norms = report.norms
    b = assemble_coefficients(b0, report.S_L, report.S_Theta_L, report.lap_S_L, report.lap_S_Theta_L,
                              norms['Rdet'], norms['Ric_Rdet'], norms['Ric'], norms['RT'])
    return CoefficientSet(*b, n=n, provenance=provenance)


def coefficients_at(chart: BRTChart, z: Sequence[complex], metric_preset: str = 'levi',
                    engine: Optional[CurvatureEngine] = None) -> CoefficientSet:
    """b0, b1, b2 at z for the rigid metric selected by ``metric_preset``.

    ``levi`` uses the Levi metric; any other preset uses the chart's rigid Gram field.
    A matching ``engine`` (same chart and metric) is reused along with its cached reports.
    """
    if metric_preset not in METRIC_PRESETS:
        raise InadmissiblePresetError(f"unknown metric preset '{metric_preset}'")
    use_gram = metric_preset != 'levi'
    if use_gram and chart.metric_gram is None:
        raise InadmissiblePresetError(f"chart '{chart.label}' carries no Gram field for preset '{metric_preset}'")
    # reuse the caller's engine only when it matches
    if engine is None or engine.chart is not chart or engine.use_gram != use_gram:
        engine = CurvatureEngine(chart, use_gram)
    report = engine.report(z)
    return coefficients_from_report(report, provenance=f"{metric_preset}:{chart.label}")


@dataclass(frozen=True)
class LocalBergmanData:
    """Kahler-side quantities of a chart with weight e^{-2 phi}."""
    det_Rdot: float
    r: float
    r_hat: float
    lap_r: float
    lap_r_hat: float
    Rdet: np.ndarray
    norms: Dict[str, float] = field(default_factory=dict)
    coefficients: Tuple[float, float, float] = (0.0, 0.0, 0.0)


def _kahler_laplacian_jet(f: Jet, h_k_inv: List[List[Jet]]) -> Jet:
    """Delta_omega f = -2 sum h_K^{jk} d_j dbar_k f."""
    n = f.context.n_pairs
    terms = [h_k_inv[j][k] * f.derivative(j).derivative(n + k) for j in range(n) for k in range(n)]
    return -2.0 * sum(terms[1:], terms[0])


def local_bergman_data(chart: BRTChart, z: Sequence[complex], use_gram: bool = True) -> LocalBergmanData:
    """Kahler-side data: omega = g / (2 pi), V_omega = det omega, V_Theta = det H."""
    phi = chart.potential_jet(z)
    n = chart.n
    g_jets = levi_jets(phi)
    omega = [[entry / (2.0 * math.pi) for entry in row] for row in g_jets]
    omega_val = values(omega)
    try:
        np.linalg.cholesky(0.5 * (omega_val + omega_val.conj().T))
    except np.linalg.LinAlgError:
        raise SingularMetricError(f"omega is not positive at {tuple(z)} in chart '{chart.label}'") from None

    # h_K = omega^T
    h_k = [[omega[k][j] for k in range(n)] for j in range(n)]
    h_k_inv = jet_inverse(h_k)
    # rigid volume: the chart Gram when present, else the Kahler form itself
    if use_gram and chart.metric_gram is not None:
        theta = chart.gram_jets(z)
    else:
        theta = omega
    log_v_omega = jet_det(omega).log()
    log_v_theta = jet_det(theta).log()
    # scalar curvatures as Laplacians of the log volumes
    r_jet = _kahler_laplacian_jet(log_v_omega, h_k_inv)
    r_hat_jet = _kahler_laplacian_jet(log_v_theta, h_k_inv)
    h_k_inv_val = values(h_k_inv)

    def laplacian_value(f: Jet) -> float:
        hess = np.array([[f.derivative(j).derivative(n + k).value for k in range(n)] for j in range(n)])
        return float((-2.0 * np.sum(h_k_inv_val * hess)).real)

    rdet = np.array([[log_v_theta.derivative(j).derivative(n + k).value for k in range(n)] for j in range(n)])

    # R^{TU} = dbar(h_K^{-1} d h_K), acting on column vectors
    curv = np.empty((n, n, n, n), dtype=complex)
    for alpha in range(n):
        d_h = [[entry.derivative(alpha) for entry in row] for row in h_k]
        conn = [[sum((h_k_inv[i][l] * d_h[l][j] for l in range(1, n)), h_k_inv[i][0] * d_h[0][j])
                 for j in range(n)] for i in range(n)]
        for beta in range(n):
            for i in range(n):
                for j in range(n):
                    # dbar(a_alpha dz_alpha) = -dbar_beta(a_alpha) dz_alpha ^ dzbar_beta
                    curv[alpha, beta, i, j] = -conn[i][j].derivative(n + beta).value

    # <xi|eta> = eta^H h_K xi; orthonormal frame f with f^H h_K f = I
    h_k_val = omega_val.T
    lower = np.linalg.cholesky(0.5 * (h_k_val + h_k_val.conj().T))
    f = np.linalg.inv(lower).conj().T
    f_inv = np.linalg.inv(f)
    k_tensor = np.einsum('xa,yb,ti,xyij,js->abts', f, f.conj(), f_inv, curv, f)
    ricci = -np.einsum('ajbj->ab', k_tensor)
    rdet_on = f.T @ rdet @ f.conj()
    # squared norms in the orthonormal frame
    norms = {
        'Rdet': float(np.sum(np.abs(rdet_on) ** 2)),
        'Ric': float(np.sum(np.abs(ricci) ** 2)),
        'Ric_Rdet': float(np.sum(ricci * rdet_on.conj()).real),
        'RT': float(np.sum(np.abs(k_tensor) ** 2)),
    }
    g_val = values(g_jets)
    det_rdot = float((np.linalg.det(g_val) / np.linalg.det(values(theta))).real)
    r = float(r_jet.value.real)
    r_hat = float(r_hat_jet.value.real)
    lap_r = laplacian_value(r_jet)
    lap_r_hat = laplacian_value(r_hat_jet)
    # one power of 2 pi less than on the CR side
    coefficients = assemble_coefficients((2 * math.pi) ** (-n) * det_rdot, r, r_hat, lap_r, lap_r_hat,
                                         norms['Rdet'], norms['Ric_Rdet'], norms['Ric'], norms['RT'])
    return LocalBergmanData(det_Rdot=det_rdot, r=r, r_hat=r_hat, lap_r=lap_r, lap_r_hat=lap_r_hat,
                            Rdet=0.5 * (rdet + rdet.conj().T), norms=norms, coefficients=coefficients)


def local_bergman_coefficients(chart: BRTChart, z: Sequence[complex], use_gram: bool = True) -> Tuple[float, float, float]:
    """(b_B0, b_B1, b_B2) of the chart-local Bergman kernel on the diagonal."""
    return local_bergman_data(chart, z, use_gram).coefficients


def sum_factor(m: int, p_r: int) -> int:
    """sum_{s=1}^{p_r} exp(2 pi i (s-1) m / p_r), computed by divisibility."""
    if p_r < 1:
        raise ValueError(f"p_r must be positive, got {p_r}")
    return p_r if m % p_r == 0 else 0


def expansion_prediction(coeffs: CoefficientSet, m: int, p_r: int = 1, N: int = 3, r: int = 1) -> ExpansionPrediction:
    """sum_factor(m, p_r) * sum_{j<N} b_j m^{n-j}."""
    if not 1 <= N <= MAX_TRUNCATION:
        raise UnsupportedTruncationError(f"truncation N={N} unsupported; only b0, b1, b2 are available")
    if m < 1:
        raise ValueError(f"m must be positive, got {m}")
    n = coeffs.n
    # b_j m^{n-j} for the first N coefficients
    terms = tuple(b * float(m) ** (n - j) for j, b in enumerate(coeffs.as_tuple()[:N]))
    factor = sum_factor(m, p_r)
    return ExpansionPrediction(m=m, r=r, p_r=p_r, terms=terms, sum_factor=factor,
                               value=factor * math.fsum(terms))
