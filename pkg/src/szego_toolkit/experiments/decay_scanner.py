"""Exponential decay of the expansion residual near the singular strata.

Rows live at points off X^r_sing; the residual |S_m - prediction| is fitted against
C m^n exp(-eps m d^2) and then checked against the halved-rate envelope.
"""
import math
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from ..core.coefficient_engine import expansion_prediction
from ..core.errors import EmptyStratumError
from ..models.weighted_sphere import SpherePoint, WeightedSphere
from .config_loader import DECAY_M_VALUES, ExperimentConfig
from .expansion_runner import FLOOR_FACTOR, point_coefficients, polynomial_floor
from .fitting import fit_decay_rate
from .sampling import LabeledPoint, grid_points, ordered_map, resolve_points

logger = logging.getLogger(__name__)

DECAY_COLUMNS = ('point', 'x', 'r', 'm', 'distance', 'd_hat', 'exact', 'prediction', 'residual',
                 'normalized', 'regime')
GRADIENT_COLUMNS = ('point', 'm', 'distance', 'gradient', 'envelope', 'normalized')
EQUIVALENCE_COLUMNS = ('point', 'r', 'distance', 'd_hat', 'ratio')


@dataclass
class DecayRow:
    point: str
    x: SpherePoint
    r: int
    m: int
    distance: float
    d_hat: float
    exact: float
    prediction: float
    regime: str = 'floor'
    normalized: float = 0.0

    @property
    def residual(self) -> float:
        return self.exact - self.prediction

    def row(self) -> Dict[str, object]:
        return {'point': self.point, 'x': self.x, 'r': self.r, 'm': self.m, 'distance': self.distance,
                'd_hat': self.d_hat, 'exact': self.exact, 'prediction': self.prediction,
                'residual': self.residual, 'normalized': self.normalized, 'regime': self.regime}


@dataclass(frozen=True)
class GradientRow:
    point: str
    m: int
    distance: float
    gradient: float
    envelope: float

    @property
    def normalized(self) -> float:
        return self.gradient / self.envelope

    def row(self) -> Dict[str, object]:
        return {'point': self.point, 'm': self.m, 'distance': self.distance, 'gradient': self.gradient,
                'envelope': self.envelope, 'normalized': self.normalized}


@dataclass
class DecayReport:
    n: int
    rows: List[DecayRow]
    decay: Optional[Tuple[float, float]]
    envelope_constant: float = math.nan
    skipped: List[str] = field(default_factory=list)
    gradient_rows: List[GradientRow] = field(default_factory=list)
    equivalence: List[Dict[str, object]] = field(default_factory=list)
    flags: Dict[str, bool] = field(default_factory=dict)

    @property
    def epsilon(self) -> Optional[float]:
        return None if self.decay is None else self.decay[1]

    @property
    def passed(self) -> bool:
        return all(self.flags.values())

    def table(self) -> List[Dict[str, object]]:
        return [row.row() for row in self.rows]


def _halves(rows: Sequence) -> Tuple[list, list]:
    """Rows with m in the lower half of the m values, then the rest."""
    ms = sorted({row.m for row in rows})
    # a single m value goes entirely to the low half
    cut = ms[len(ms) // 2] if len(ms) > 1 else ms[0] + 1
    return [row for row in rows if row.m < cut], [row for row in rows if row.m >= cut]


def bounded_in_m(values_low: Sequence[float], values_high: Sequence[float], slack: float) -> Tuple[bool, float]:
    """sup over the high half against ``slack`` times the sup over the low half."""
    if not values_low:
        return True, math.nan
    constant = slack * max(values_low)
    return all(v <= constant for v in values_high), constant


def distance_equivalence(sphere: WeightedSphere, points: Sequence[LabeledPoint], r: Optional[int] = None,
                         delta: Optional[float] = None) -> List[Dict[str, object]]:
    """d(x, X^r_sing) beside d_hat(x) for every point; their ratio shows the equivalence."""
    result = []
    for label, x in points:
        stratum = sphere.stratum_of(x) if r is None else r
        d = sphere.distance_to_stratum(x, stratum)
        d_hat = sphere.d_hat(x, stratum, delta)
        result.append({'point': label, 'r': stratum, 'distance': d, 'd_hat': d_hat,
                       'ratio': d_hat / d if d > 0 else math.nan})
    return result


def gradient_scan(sphere: WeightedSphere, points: Sequence[LabeledPoint], ms: Sequence[int],
                  epsilon: float, threads: int = 1) -> List[GradientRow]:
    """Tangential |grad S_m| against m^n + m^{n+1/2} exp(-(eps/2) m d^2)."""
    n = sphere.n
    items = [(label, x, sphere.distance_to_stratum(x), m) for label, x in points for m in ms]

    def compute(item):
        label, x, d, m = item
        envelope = float(m) ** n + float(m) ** (n + 0.5) * math.exp(-0.5 * max(epsilon, 0.0) * m * d * d)
        return GradientRow(point=label, m=m, distance=d, gradient=sphere.tangential_gradient_norm(m, x),
                           envelope=envelope)

    return ordered_map(compute, items, threads)


def scan_points(config: ExperimentConfig, sphere: WeightedSphere) -> List[LabeledPoint]:
    if config.points == 'stratum':
        return grid_points(sphere, *config.grid)
    return resolve_points(config, sphere)


def decay_scan(config: ExperimentConfig, points: Optional[List[LabeledPoint]] = None,
               gradients: bool = True) -> DecayReport:
    sphere = config.sphere()
    strata = sphere.strata
    if strata.t < 2:
        raise EmptyStratumError(f"weights {sphere.weights} have no singular stratum")
    n, N = sphere.n, config.N
    ms = config.m_list(DECAY_M_VALUES)
    delta = config.effective_delta
    tolerances = config.tolerances

    # Drop points that sit on their own stratum
    kept, skipped = [], []
    for label, x in (points if points is not None else scan_points(config, sphere)):
        r = strata.stratum_of(x)
        d = sphere.distance_to_stratum(x, r)
        if d <= 0:
            skipped.append(label)
            continue
        kept.append((label, x, r, d))
    if skipped:
        logger.info("decay scan skips %d points on the stratum: %s", len(skipped), ', '.join(skipped))
    if not kept:
        raise EmptyStratumError("no scan point lies off the singular strata")

    # Exact values and predictions per point
    rows = []
    for label, x, r, d in kept:
        coeffs = point_coefficients(sphere, x, config.metric_preset)
        d_hat = sphere.d_hat(x, r, delta)
        p_r = strata.p_list[r - 1]
        exact = ordered_map(lambda m: sphere.szego_value(m, x), ms, config.threads)
        for m, value in zip(ms, exact):
            prediction = expansion_prediction(coeffs, m, p_r=p_r, N=N, r=r).value
            row = DecayRow(point=label, x=x, r=r, m=m, distance=d, d_hat=d_hat, exact=value,
                           prediction=prediction)
            if abs(row.residual) > FLOOR_FACTOR * polynomial_floor(coeffs, m, N):
                row.regime = 'exp'
            rows.append(row)

    # Fit the rate, then strip it from every residual
    decaying = [row for row in rows if row.regime == 'exp']
    decay = fit_decay_rate([row.m for row in decaying], [row.distance for row in decaying],
                           [row.residual for row in decaying], n)
    epsilon = 0.0 if decay is None else decay[1]
    for row in rows:
        row.normalized = abs(row.residual) * float(row.m) ** (-n) * math.exp(0.5 * epsilon * row.m * row.distance ** 2)

    # the normalized residual must stay bounded as m grows
    flags = {'decay_rate_positive': decay is not None and decay[1] > 0}
    low, high = _halves(decaying) if decaying else ([], [])
    flags['decay_envelope'], constant = bounded_in_m([row.normalized for row in low],
                                                     [row.normalized for row in high], tolerances['slack'])
    report = DecayReport(n=n, rows=rows, decay=decay, envelope_constant=constant, skipped=skipped, flags=flags)
    logger.info("decay scan: %d rows, %d in the exponential regime, eps=%s", len(rows), len(decaying),
                'n/a' if decay is None else f"{decay[1]:.6g}")

    if gradients:
        # Gradient envelope and distance equivalence on the same points
        labeled = [(label, x) for label, x, _, _ in kept]
        report.gradient_rows = gradient_scan(sphere, labeled, ms, epsilon, config.threads)
        low, high = _halves(report.gradient_rows)
        flags['gradient_envelope'], _ = bounded_in_m([row.normalized for row in low],
                                                     [row.normalized for row in high], tolerances['slack'])
        report.equivalence = distance_equivalence(sphere, labeled, delta=delta)
    for name, ok in flags.items():
        (logger.info if ok else logger.warning)("decay check %s: %s", name, 'pass' if ok else 'FAIL')
    return report
