"""Exact S_m against the truncated expansion, point by point and m by m."""
import math
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from ..core.coefficient_engine import CoefficientSet, coefficients_at, expansion_prediction
from ..core.errors import RankDeficiencyError
from ..models.weighted_sphere import SpherePoint, WeightedSphere
from .config_loader import EXPANSION_M_VALUES, ExperimentConfig
from .fitting import fit_coefficients, fit_decay_rate
from .sampling import LabeledPoint, ordered_map, resolve_points

logger = logging.getLogger(__name__)

FLOOR_FACTOR = 10.0

EXPANSION_COLUMNS = (
    'point', 'x', 'r', 'p_r', 'm', 'sum_factor', 'exact', 'prediction', 'residual', 'distance',
    'regime', 'poly_envelope', 'exp_envelope', 'within_envelope',
)


@dataclass
class ExpansionRow:
    point: str
    x: SpherePoint
    r: int
    p_r: int
    m: int
    sum_factor: int
    exact: float
    prediction: float
    distance: float
    regime: str = 'floor'
    poly_envelope: float = 0.0
    exp_envelope: float = 0.0
    within_envelope: bool = True

    @property
    def residual(self) -> float:
        return self.exact - self.prediction

    def row(self) -> Dict[str, object]:
        return {
            'point': self.point, 'x': self.x, 'r': self.r, 'p_r': self.p_r, 'm': self.m,
            'sum_factor': self.sum_factor, 'exact': self.exact, 'prediction': self.prediction,
            'residual': self.residual, 'distance': self.distance, 'regime': self.regime,
            'poly_envelope': self.poly_envelope, 'exp_envelope': self.exp_envelope,
            'within_envelope': int(self.within_envelope),
        }


@dataclass
class ExpansionReport:
    n: int
    N: int
    rows: List[ExpansionRow]
    coefficients: Dict[str, CoefficientSet]
    fitted: Dict[str, Optional[Tuple[float, ...]]]
    decay: Optional[Tuple[float, float]] = None
    envelope_constant: Dict[str, float] = field(default_factory=dict)
    flags: Dict[str, bool] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.flags.values())

    @property
    def epsilon(self) -> Optional[float]:
        return None if self.decay is None else self.decay[1]

    def rows_for(self, point: str) -> List[ExpansionRow]:
        return [row for row in self.rows if row.point == point]

    def table(self) -> List[Dict[str, object]]:
        return [row.row() for row in self.rows]


def point_coefficients(sphere: WeightedSphere, x: SpherePoint, metric_preset: str) -> CoefficientSet:
    """b0, b1, b2 at x, computed in the chart pivoted on the largest coordinate of x."""
    chart = sphere.brt_chart_at(x)
    return coefficients_at(chart, chart.center, metric_preset)


def polynomial_floor(coeffs: CoefficientSet, m: int, N: int) -> float:
    return max(abs(b) for b in coeffs.as_tuple()) * float(m) ** (coeffs.n - N)


def _envelope_shape(n: int, N: int, m: int, distance: float, epsilon: Optional[float],
                    has_stratum: bool) -> Tuple[float, float]:
    poly = float(m) ** (n - N)
    if not has_stratum or epsilon is None:
        return poly, 0.0
    return poly, float(m) ** n * math.exp(-0.5 * max(epsilon, 0.0) * m * distance ** 2)


def check_envelope(rows: Sequence[ExpansionRow], n: int, N: int, epsilon: Optional[float],
                   has_stratum: Dict[str, bool], tolerance: float, slack: float) -> Dict[str, float]:
    """Fill the envelope columns; returns the fitted constant C per point.

    C is ``slack`` times the sup of |residual| / envelope over the lower half of the
    m values of a point; every row must then satisfy |residual| <= C * envelope + tolerance * m^n.
    """
    constants = {}
    # Group rows by point
    by_point: Dict[str, List[ExpansionRow]] = {}
    for row in rows:
        by_point.setdefault(row.point, []).append(row)
    for point, point_rows in by_point.items():
        point_rows = sorted(point_rows, key=lambda row: row.m)
        shapes = [_envelope_shape(n, N, row.m, row.distance, epsilon, has_stratum[point]) for row in point_rows]
        # fit the constant on the lower half of the m range only
        low = point_rows[:max(1, len(point_rows) // 2)]
        constant = slack * max(abs(row.residual) / sum(shape) for row, shape in zip(low, shapes))
        constants[point] = constant
        for row, (poly, exponential) in zip(point_rows, shapes):
            row.poly_envelope = constant * poly
            row.exp_envelope = constant * exponential
            bound = row.poly_envelope + row.exp_envelope + tolerance * float(row.m) ** n
            row.within_envelope = abs(row.residual) <= bound
    return constants


def _exact_value(sphere: WeightedSphere):
    def compute(item):
        x, m = item
        return sphere.szego_value(m, x)
    return compute


def run_expansion(config: ExperimentConfig, points: Optional[List[LabeledPoint]] = None) -> ExpansionReport:
    sphere = config.sphere()
    strata = sphere.strata
    points = points if points is not None else resolve_points(config, sphere)
    ms = config.m_list(EXPANSION_M_VALUES)
    n, N = sphere.n, config.N
    logger.info("expansion on weights %s: %d points, %d m values, N=%d",
                sphere.weights, len(points), len(ms), N)

    # Locate every point and compute its coefficients once
    coefficients, fitted, has_stratum = {}, {}, {}
    located = []
    for label, x in points:
        r = strata.stratum_of(x)
        p_r = strata.p_list[r - 1]
        coefficients[label] = point_coefficients(sphere, x, config.metric_preset)
        has_stratum[label] = bool(strata.singular_subsets(r))
        located.append((label, x, r, p_r, sphere.distance_to_stratum(x, r)))

    # Exact kernels for all (point, m) pairs, in parallel
    items = [(x, m) for _, x, _, _, _ in located for m in ms]
    exact = iter(ordered_map(_exact_value(sphere), items, config.threads))

    rows = []
    for label, x, r, p_r, distance in located:
        coeffs = coefficients[label]
        for m in ms:
            prediction = expansion_prediction(coeffs, m, p_r=p_r, N=N, r=r)
            row = ExpansionRow(point=label, x=x, r=r, p_r=p_r, m=m, sum_factor=prediction.sum_factor,
                               exact=next(exact), prediction=prediction.value, distance=distance)
            # residuals well above the polynomial floor belong to the exponential regime
            floor = FLOOR_FACTOR * polynomial_floor(coeffs, m, N)
            if has_stratum[label] and distance > 0 and abs(row.residual) > floor:
                row.regime = 'exp'
            rows.append(row)
        # Refit b0, b1, b2 from the exact values of this point
        point_rows = [row for row in rows if row.point == label]
        try:
            fitted[label] = fit_coefficients([row.m for row in point_rows], [row.exact for row in point_rows],
                                             [row.sum_factor for row in point_rows], n)
        except RankDeficiencyError as e:
            logger.debug("no coefficient fit at %s: %s", label, e)
            fitted[label] = None

    # Decay rate from the exponential-regime rows
    decaying = [row for row in rows if row.regime == 'exp']
    decay = fit_decay_rate([row.m for row in decaying], [row.distance for row in decaying],
                           [row.residual for row in decaying], n)
    tolerances = config.tolerances
    constants = check_envelope(rows, n, N, None if decay is None else decay[1], has_stratum,
                               tolerances['residual'], tolerances['slack'])

    # Update pass/fail flags
    flags = {
        'residual_envelope': all(row.within_envelope for row in rows),
        'cancellation': all(abs(row.exact) <= tolerances['cancellation'] * float(row.m) ** n
                            for row in rows if row.sum_factor == 0),
    }
    if decay is not None:
        flags['decay_rate_positive'] = decay[1] > 0
    for name, ok in flags.items():
        (logger.info if ok else logger.warning)("expansion check %s: %s", name, 'pass' if ok else 'FAIL')
    return ExpansionReport(n=n, N=N, rows=rows, coefficients=coefficients, fitted=fitted, decay=decay,
                           envelope_constant=constants, flags=flags)
