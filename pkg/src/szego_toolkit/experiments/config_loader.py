"""Flat ``key = value`` experiment configuration.

Example::

    # weighted sphere with weights (1, 2)
    model = weighted_sphere
    weights = 1, 2
    metric_preset = levi
    points = stratum
    m_range = 2:2:200
    N = 2
"""
import math
import logging
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Dict, Mapping, Optional, Tuple

from ..core.coefficient_engine import MAX_TRUNCATION, METRIC_PRESETS
from ..core.brt_chart import BRTChart
from ..core.errors import ConfigError, GeometryError, ModelError
from ..models.weighted_sphere import WeightedSphere

logger = logging.getLogger(__name__)

POINT_KINDS = ('stratum', 'regular', 'grid', 'random', 'explicit')
NAMED_MODELS = {'s3': (1, 1), 's5': (1, 1, 1)}
EXPANSION_M_VALUES = tuple(range(5, 101, 5))
DECAY_M_VALUES = tuple(range(11, 202, 2))
DEFAULT_TOLERANCES = {
    'residual': 1e-9,
    'cancellation': 0.0,
    'slack': 2.0,
    'aliasing': 1e-11,
}


def parse_config_text(text: str) -> Dict[str, str]:
    """Split ``key = value`` lines; ``#`` starts a comment."""
    values: Dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        # Strip comments and blank lines
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError(f"line {number}: expected 'key = value', got '{raw.strip()}'")
        key, value = (part.strip() for part in line.split('=', 1))
        if not key:
            raise ConfigError(f"line {number}: empty key")
        values[key] = value
    return values


def parse_int_list(text: str) -> Tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(',') if v.strip())
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of integers, got '{text}'") from None


def parse_m_range(text: str) -> Tuple[int, ...]:
    """``start:step:stop`` (inclusive) or a comma-separated list."""
    text = text.strip()
    if ':' in text:
        parts = text.split(':')
        try:
            if len(parts) == 2:
                start, step, stop = int(parts[0]), 1, int(parts[1])
            elif len(parts) == 3:
                start, step, stop = (int(p) for p in parts)
            else:
                raise ValueError
        except ValueError:
            raise ConfigError(f"bad m range '{text}'") from None
        if step < 1:
            raise ConfigError(f"m range step must be positive in '{text}'")
        # stop is inclusive
        values = tuple(range(start, stop + 1, step))
    else:
        values = parse_int_list(text)
    if not values:
        raise ConfigError(f"m range '{text}' is empty")
    if min(values) < 1:
        raise ConfigError(f"m values must be positive in '{text}'")
    return values


def parse_grid(text: str) -> Tuple[float, float, int]:
    try:
        lo, hi, count = text.split(':')
        grid = float(lo), float(hi), int(count)
    except ValueError:
        raise ConfigError(f"grid must read 'lo:hi:count', got '{text}'") from None
    if not 0 < grid[0] <= grid[1] < 1 or grid[2] < 1:
        raise ConfigError(f"grid '{text}' must satisfy 0 < lo <= hi < 1 and count >= 1")
    return grid


def parse_points(text: str) -> Tuple[Tuple[complex, ...], ...]:
    """``;``-separated points with comma-separated (possibly complex) coordinates."""
    points = []
    for chunk in text.split(';'):
        if not chunk.strip():
            continue
        try:
            points.append(tuple(complex(v.strip().replace(' ', '')) for v in chunk.split(',')))
        except ValueError:
            raise ConfigError(f"cannot read point '{chunk.strip()}'") from None
    if not points:
        raise ConfigError("point_list is empty")
    return tuple(points)


def parse_matrix(text: str) -> Tuple[Tuple[str, ...], ...]:
    """Rows separated by ``;``, entries by ``,``; entries are field expressions."""
    rows = tuple(tuple(entry.strip() for entry in row.split(',')) for row in text.split(';') if row.strip())
    if not rows or any(len(row) != len(rows) for row in rows):
        raise ConfigError(f"chart_gram must be a square matrix, got '{text}'")
    return rows


@dataclass(frozen=True)
class ExperimentConfig:
    manifold: str = 'weighted_sphere'
    weights: Tuple[int, ...] = (1, 1)
    metric_preset: str = 'levi'
    points: str = 'stratum'
    point_list: Tuple[Tuple[complex, ...], ...] = ()
    grid: Tuple[float, float, int] = (0.05, 0.4, 20)
    samples: int = 5
    seed: int = 12345
    m_values: Tuple[int, ...] = ()
    N: int = 3
    delta: Optional[float] = None
    out: Optional[str] = None
    svg: Optional[str] = None
    threads: int = 1
    chart_potential: Optional[str] = None
    chart_center: Tuple[complex, ...] = ()
    chart_radius: float = math.inf
    chart_gram: Optional[Tuple[Tuple[str, ...], ...]] = None
    tolerances: Dict[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    @property
    def n(self) -> int:
        return len(self.weights) - 1

    def sphere(self) -> WeightedSphere:
        try:
            return WeightedSphere(n=self.n, weights=self.weights, metric_preset=self.metric_preset,
                                  threads=self.threads)
        except ModelError as e:
            raise ConfigError(str(e)) from None

    def validate(self) -> 'ExperimentConfig':
        if self.manifold != 'weighted_sphere':
            raise ConfigError(f"unknown manifold '{self.manifold}'")
        if len(self.weights) < 2:
            raise ConfigError("at least two weights are required")
        if self.metric_preset not in METRIC_PRESETS:
            raise ConfigError(f"metric_preset must be one of {METRIC_PRESETS}")
        if self.points not in POINT_KINDS:
            raise ConfigError(f"points must be one of {POINT_KINDS}")
        if self.points == 'explicit' and not self.point_list:
            raise ConfigError("points = explicit needs point_list")
        if any(len(p) != len(self.weights) for p in self.point_list):
            raise ConfigError(f"every point needs {len(self.weights)} coordinates")
        if not 1 <= self.N <= MAX_TRUNCATION:
            raise ConfigError(f"N must lie in 1..{MAX_TRUNCATION}")
        if self.threads < 1:
            raise ConfigError("threads must be positive")
        if self.chart_center and len(self.chart_center) != self.n:
            raise ConfigError(f"chart_center needs {self.n} coordinates")
        if self.chart_gram is not None and len(self.chart_gram) != self.n:
            raise ConfigError(f"chart_gram must be {self.n} x {self.n}")
        # building the chart compiles its field descriptions
        chart = self.user_chart
        if chart is not None:
            logger.debug("user chart with potential '%s' centered at %s", self.chart_potential, chart.center)
        sphere = self.sphere()
        if self.delta is not None:
            bound = sphere.delta_bound()
            if not 0 < self.delta < bound:
                raise ConfigError(f"delta must lie in (0, {bound:.6g})")
        return self

    def m_list(self, default: Tuple[int, ...]) -> Tuple[int, ...]:
        """The configured m values, or ``default`` when no m range was given."""
        return self.m_values or default

    @property
    def user_chart(self) -> Optional[BRTChart]:
        if self.chart_potential is None:
            return None
        center = self.chart_center or (0j,) * self.n
        try:
            return BRTChart(n=self.n, potential=self.chart_potential, center=center, radius=self.chart_radius,
                            metric_gram=self.chart_gram, label='user')
        except GeometryError as e:
            raise ConfigError(str(e)) from None

    @property
    def effective_delta(self) -> float:
        return self.delta if self.delta is not None else 0.5 * self.sphere().delta_bound()


_SCALAR_KEYS = {
    'manifold': str, 'metric_preset': str, 'points': str, 'samples': int, 'seed': int,
    'N': int, 'delta': float, 'out': str, 'svg': str, 'threads': int,
    'chart_potential': str, 'chart_radius': float,
}


def build_config(values: Mapping[str, str], base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    """Apply raw string values on top of ``base`` (defaults when omitted)."""
    config = base or ExperimentConfig()
    updates = {}
    tolerances = dict(config.tolerances)
    for key, raw in values.items():
        if raw is None:
            continue
        raw = str(raw).strip()
        try:
            # named models fix the weights
            if key == 'model':
                if raw == 'weighted_sphere':
                    updates['manifold'] = raw
                elif raw.lower() in NAMED_MODELS:
                    updates['weights'] = NAMED_MODELS[raw.lower()]
                else:
                    raise ConfigError(f"unknown model '{raw}'")
            elif key == 'weights':
                updates['weights'] = parse_int_list(raw)
            elif key == 'n':
                updates['n'] = int(raw)
            elif key in ('m_range', 'm'):
                updates['m_values'] = parse_m_range(raw)
            elif key == 'grid':
                updates['grid'] = parse_grid(raw)
            elif key == 'point_list':
                updates['point_list'] = parse_points(raw)
            elif key == 'chart_center':
                updates['chart_center'] = parse_points(raw)[0]
            elif key == 'chart_gram':
                updates['chart_gram'] = parse_matrix(raw)
            elif key.startswith('tolerance_'):
                tolerances[key[len('tolerance_'):]] = float(raw)
            elif key in _SCALAR_KEYS:
                updates[key] = _SCALAR_KEYS[key](raw)
            else:
                raise ConfigError(f"unknown configuration key '{key}'")
        except ValueError:
            raise ConfigError(f"bad value '{raw}' for key '{key}'") from None
    # n alone means the round sphere of that dimension
    n = updates.pop('n', None)
    config = replace(config, tolerances=tolerances, **updates)
    if n is not None and n != config.n:
        if 'weights' in updates:
            raise ConfigError(f"n = {n} disagrees with {len(config.weights)} weights")
        config = replace(config, weights=(1,) * (n + 1))
    return config.validate()


def load_config(path: Path, overrides: Optional[Mapping[str, str]] = None) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding='utf-8')
    except OSError as e:
        raise ConfigError(f"cannot read config file '{path}': {e}") from None
    values = parse_config_text(text)
    # command-line flags win over the file
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    logger.info("loaded configuration from %s (%d keys)", path, len(values))
    return build_config(values)


def config_keys_help() -> str:
    names = [f.name for f in fields(ExperimentConfig) if f.name not in ('m_values', 'tolerances')]
    names += ['model', 'n', 'm_range', 'tolerance_<name>']
    return ', '.join(sorted(names))
