"""Self-consistency suite run by ``szego checks``.

Every check compares two independently computed quantities over a set of charts and
points and records the worst discrepancy.
"""
import math
import logging
from dataclasses import dataclass
from functools import partial
from itertools import combinations
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..core.brt_chart import BRTChart, Transition, contact_residuals, transition_density_check
from ..core.coefficient_engine import coefficients_at, local_bergman_data, sum_factor
from ..core.curvature_engine import CurvatureEngine
from ..core.errors import SzegoError
from ..core.field_parser import compile_field
from ..core.jet_engine import evaluate_field, finite_difference_derivative, jet_lift, wirtinger
from ..models.flat_model import bargmann_fock_chart
from ..models.weighted_sphere import SpherePoint, WeightedSphere
from .config_loader import ExperimentConfig

logger = logging.getLogger(__name__)

CURVATURE_TOLERANCE = 1e-8
CONTACT_TOLERANCE = 1e-12
DERIVATIVE_TOLERANCE = 1e-6
KERNEL_TOLERANCE = 1e-10
FD_FIELDS = ('log(1 + z1*zb1)', '1/(2 + z1 + zb1*zb1)', 'exp(z1*zb1)*sqrt(3 + z1 + zb1)')

ChartPoint = Tuple[BRTChart, Tuple[complex, ...]]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    worst: float
    count: int
    detail: str = ''

    def line(self) -> str:
        status = 'PASS' if self.passed else 'FAIL'
        text = f"{status} {self.name}: worst {self.worst:.3e} over {self.count} samples"
        return f"{text} ({self.detail})" if self.detail else text


def relative_gap(a: complex, b: complex) -> float:
    return abs(a - b) / max(1.0, abs(a), abs(b))


def _summarize(name: str, gaps: Iterable[float], tolerance: float, detail: str = '') -> CheckResult:
    gaps = list(gaps)
    worst = max(gaps) if gaps else 0.0
    return CheckResult(name=name, passed=bool(gaps) and worst <= tolerance, worst=worst, count=len(gaps),
                       detail=detail or f"tolerance {tolerance:.0e}")


def random_sphere_points(sphere: WeightedSphere, count: int, rng: np.random.Generator) -> List[SpherePoint]:
    points = []
    for _ in range(count):
        values = rng.normal(size=sphere.n + 1) + 1j * rng.normal(size=sphere.n + 1)
        points.append(SpherePoint.normalized(values))
    return points


def sphere_chart_points(sphere: WeightedSphere, points: Sequence[SpherePoint]) -> List[ChartPoint]:
    result = []
    for x in points:
        chart = sphere.brt_chart_at(x)
        result.append((chart, chart.center))
    return result


def sample_charts(config: ExperimentConfig, rng: np.random.Generator) -> List[ChartPoint]:
    """Hopf charts, charts of the configured sphere at random and stratum points,
    the flat chart and the user chart when one is configured."""
    count = max(1, config.samples)
    charts: List[ChartPoint] = []
    # Hopf charts of the round sphere
    hopf = WeightedSphere(n=config.n, weights=(1,) * (config.n + 1), metric_preset='ambient-round')
    charts += sphere_chart_points(hopf, random_sphere_points(hopf, count, rng))
    sphere = config.sphere()
    if not sphere.unweighted or sphere.metric_preset != 'ambient-round':
        charts += sphere_chart_points(sphere, random_sphere_points(sphere, count, rng))
    charts += sphere_chart_points(sphere, [x for _, x in sphere.stratum_representatives()])
    # flat chart at a few random points
    flat = bargmann_fock_chart(config.n)
    for _ in range(count):
        z = rng.normal(size=config.n) + 1j * rng.normal(size=config.n)
        charts.append((flat, tuple(0.5 * z)))
    user = config.user_chart
    if user is not None:
        charts.append((user, user.center))
    return charts


def check_scalar_curvature(charts: Sequence[ChartPoint]) -> CheckResult:
    """S_L against 4 pi times the Tanaka-Webster scalar curvature."""
    gaps = []
    for chart, z in charts:
        # both sides share the Levi jets of the point
        engine = CurvatureEngine(chart)
        gaps.append(relative_gap(engine.scalar_curvature(z), 4.0 * math.pi * engine.tw_scalar(z)))
    return _summarize('S_L=4πR', gaps, CURVATURE_TOLERANCE)


def check_correspondence(charts: Sequence[ChartPoint], metric_preset: str) -> CheckResult:
    """Kahler-side quantities of the local Bergman kernel against the CR-side ones."""
    gaps = []
    for chart, z in charts:
        use_gram = metric_preset != 'levi' and chart.metric_gram is not None
        engine = CurvatureEngine(chart, use_gram)
        report = engine.report(z)
        local = local_bergman_data(chart, z, use_gram=use_gram)
        # CR side against the Kahler side, one scalar at a time
        pairs = [(local.r, report.S_L), (local.r_hat, report.S_Theta_L), (local.lap_r, report.lap_S_L),
                 (local.lap_r_hat, report.lap_S_Theta_L), (local.det_Rdot, report.det_Rdot)]
        pairs += [(local.norms[key], report.norms[key]) for key in report.NORM_KEYS]
        gaps += [relative_gap(a, c) for a, c in pairs]
        gaps.append(float(np.max(np.abs(local.Rdet - report.Rdet_Theta))))
        from_report = coefficients_at(chart, z, metric_preset if use_gram else 'levi', engine=engine).as_tuple()
        gaps += [relative_gap(bb, 2.0 * math.pi * bc) for bb, bc in zip(local.coefficients, from_report)]
    return _summarize('correspondence', gaps, CURVATURE_TOLERANCE)


def cubic_transition(n: int) -> Transition:
    def h_map(zs, zbs):
        return [z + z * z * z for z in zs]
    return Transition(H_map=h_map, label='w=z+z^3')


def check_chart_invariance(charts: Sequence[ChartPoint], metric_preset: str) -> CheckResult:
    """Scalars and coefficients agree after the change of coordinates w = z + z^3."""
    gaps = []
    for chart, z in charts:
        # skip points where w = z + z^3 is close to singular
        if min(abs(1.0 + 3.0 * c * c) for c in z) < 0.1:
            continue
        preset = metric_preset if chart.metric_gram is not None else 'levi'
        source = BRTChart(n=chart.n, potential=chart.potential, center=z, metric_gram=chart.metric_gram,
                          label=chart.label, order=chart.order)
        t = cubic_transition(chart.n)
        target = t.pushforward(source)
        w = target.center
        before_engine = CurvatureEngine(source, preset != 'levi')
        after_engine = CurvatureEngine(target, preset != 'levi')
        before, after = before_engine.report(z), after_engine.report(w)
        gaps += [relative_gap(before.S_L, after.S_L), relative_gap(before.S_Theta_L, after.S_Theta_L)]
        # coefficients reuse the cached reports
        b_before = coefficients_at(source, z, preset, engine=before_engine).as_tuple()
        b_after = coefficients_at(target, w, preset, engine=after_engine).as_tuple()
        gaps += [relative_gap(a, b) for a, b in zip(b_before, b_after)]
        gaps.append(transition_density_check(t, source, target, z))
    return _summarize('chart invariance', gaps, CURVATURE_TOLERANCE)


def check_contact(charts: Sequence[ChartPoint]) -> CheckResult:
    return _summarize('contact form', (contact_residuals(chart, z) for chart, z in charts), CONTACT_TOLERANCE)


def check_sphere_charts(sphere: WeightedSphere, points: Sequence[SpherePoint]) -> List[CheckResult]:
    """Frames tangent to the embedded sphere and the chart density against the closed form."""
    tangency, density = [], []
    for x in points:
        chart = sphere.brt_chart_at(x)
        tangency.append(sphere.tangency_residual(chart, chart.center))
        density.append(relative_gap(sphere.chart_density_ratio(x), sphere.levi_volume_density(x)))
    return [_summarize('chart tangency', tangency, CURVATURE_TOLERANCE),
            _summarize('Levi volume density', density, CURVATURE_TOLERANCE)]


def _elementary_symmetric(n: int) -> List[float]:
    values = [1.0]
    for k in range(1, 3):
        values.append(float(sum(math.prod(c) for c in combinations(range(1, n + 1), k))))
    return values


def check_unweighted_kernel(sphere: WeightedSphere, points: Sequence[SpherePoint],
                            ms: Iterable[int]) -> List[CheckResult]:
    """S_m = (m+1)...(m+n) c_n on the unweighted sphere, and b_j read off that polynomial."""
    n = sphere.n
    scale = math.pi ** n if sphere.metric_preset == 'levi' else 1.0
    c_n = scale / (2.0 * math.pi ** (n + 1))
    kernel_gaps = []
    for m in ms:
        expected = c_n * math.prod(m + k for k in range(1, n + 1))
        kernel_gaps += [relative_gap(sphere.szego_value(m, x), expected) for x in points]
    # b_j are the coefficients of the same polynomial in m
    expected_b = [c_n * e for e in _elementary_symmetric(n)]
    coefficient_gaps = []
    for x in points:
        chart = sphere.brt_chart_at(x)
        found = coefficients_at(chart, chart.center, sphere.metric_preset).as_tuple()
        coefficient_gaps += [relative_gap(a, b) for a, b in zip(found, expected_b)]
    return [_summarize('exact kernel', kernel_gaps, KERNEL_TOLERANCE),
            _summarize('coefficients=exact kernel', coefficient_gaps, CURVATURE_TOLERANCE)]


def check_cancellation(sphere: WeightedSphere, m_max: int = 201) -> Optional[CheckResult]:
    """S_m vanishes exactly on the r-th stratum whenever p_r does not divide m."""
    values = []
    for r, x in sphere.stratum_representatives():
        p_r = sphere.strata.p_list[r - 1]
        # every m is divisible by 1
        if p_r == 1:
            continue
        values += [abs(sphere.szego_value(m, x)) for m in range(1, m_max + 1) if m % p_r]
    if not values:
        return None
    return _summarize('cancellation', values, 0.0, detail=f"m <= {m_max}, exact zero")


def check_sum_factor(p_max: int = 12, m_max: int = 500) -> CheckResult:
    """sum_factor against the direct sum of m-th powers of the p-th roots of unity."""
    gaps = []
    ms = np.arange(1, m_max + 1)
    for p in range(1, p_max + 1):
        # reduce s*m mod p before taking the phase
        roots = [np.exp(2j * math.pi * ((s * ms) % p) / p) for s in range(p)]
        direct = np.sum(roots, axis=0)
        gaps += [abs(direct[m - 1] - sum_factor(m, p)) for m in range(1, m_max + 1)]
    return _summarize('sum factor', gaps, 1e-12)


def check_jet_derivatives(n: int = 1, max_order: int = 4,
                          fields: Sequence[str] = FD_FIELDS) -> CheckResult:
    """Jet Taylor coefficients against Richardson-refined finite differences."""
    base = tuple(0.3 + 0.2j for _ in range(n))
    gaps = []
    for text in fields:
        compiled = compile_field(text, n)
        func = partial(evaluate_field, compiled)
        jet = jet_lift(text, base)
        for total in range(1, max_order + 1):
            for a in range(total + 1):
                alpha, beta = (a,) + (0,) * (n - 1), (total - a,) + (0,) * (n - 1)
                exact = wirtinger(jet, alpha, beta)
                approx = finite_difference_derivative(func, base, alpha, beta)
                gaps.append(abs(exact - approx) / max(1.0, abs(exact)))
    return _summarize('jet derivatives', gaps, DERIVATIVE_TOLERANCE)


def _guarded(name: str, check: Callable[[], object]) -> List[CheckResult]:
    try:
        result = check()
    except SzegoError as e:
        logger.warning("check %s raised %s: %s", name, type(e).__name__, e)
        return [CheckResult(name=name, passed=False, worst=math.inf, count=0, detail=str(e))]
    if result is None:
        return []
    return list(result) if isinstance(result, list) else [result]


def run_checks(config: ExperimentConfig, rng: Optional[np.random.Generator] = None) -> List[CheckResult]:
    rng = rng or np.random.default_rng(config.seed)
    sphere = config.sphere()
    charts = sample_charts(config, rng)
    sample = random_sphere_points(sphere, max(1, config.samples), rng)
    # Run every check; a raised error counts as a failure
    results: List[CheckResult] = []
    results += _guarded('S_L=4πR', lambda: check_scalar_curvature(charts))
    results += _guarded('correspondence', lambda: check_correspondence(charts, config.metric_preset))
    results += _guarded('chart invariance', lambda: check_chart_invariance(charts, config.metric_preset))
    results += _guarded('contact form', lambda: check_contact(charts))
    results += _guarded('sphere charts', lambda: check_sphere_charts(sphere, sample))
    if sphere.unweighted:
        ms = config.m_list(tuple(range(1, 101)))
        results += _guarded('exact kernel', lambda: check_unweighted_kernel(sphere, sample, ms))
    results += _guarded('cancellation', lambda: check_cancellation(sphere))
    results += _guarded('sum factor', check_sum_factor)
    results += _guarded('jet derivatives', check_jet_derivatives)
    for result in results:
        (logger.info if result.passed else logger.warning)(result.line())
    return results
