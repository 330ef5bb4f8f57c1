"""Point sets for experiments and the ordered parallel map shared by the runners."""
import math
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Tuple, TypeVar

import numpy as np

from ..core.errors import ConfigError, ModelError
from ..models.weighted_sphere import SpherePoint, WeightedSphere
from .config_loader import ExperimentConfig

logger = logging.getLogger(__name__)

T = TypeVar('T')
R = TypeVar('R')

LabeledPoint = Tuple[str, SpherePoint]


def ordered_map(func: Callable[[T], R], items: Iterable[T], threads: int = 1) -> List[R]:
    """map with results in submission order; a single thread runs inline."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    # submit all, then collect in order
    with ThreadPoolExecutor(max_workers=threads) as executor:
        futures = [executor.submit(func, item) for item in items]
        return [future.result() for future in futures]


def regular_point(sphere: WeightedSphere) -> SpherePoint:
    """A fixed point with full support, hence in the regular stratum."""
    return SpherePoint.normalized([math.sqrt(j + 1.0) * np.exp(0.3j * j) for j in range(sphere.n + 1)])


def grid_points(sphere: WeightedSphere, lo: float, hi: float, count: int) -> List[LabeledPoint]:
    """(r, 0, ..., 0, sqrt(1 - r^2)) for r evenly spaced in [lo, hi]."""
    result = []
    for r in np.linspace(lo, hi, count):
        values = np.zeros(sphere.n + 1, dtype=complex)
        values[0] = r
        values[-1] = math.sqrt(1.0 - r * r)
        result.append((f"grid|z1|={r:.6g}", SpherePoint.normalized(values)))
    return result


def resolve_points(config: ExperimentConfig, sphere: WeightedSphere) -> List[LabeledPoint]:
    kind = config.points
    if kind == 'explicit':
        try:
            return [(f"p{i + 1}", SpherePoint.normalized(p)) for i, p in enumerate(config.point_list)]
        except ModelError as e:
            raise ConfigError(str(e)) from None
    if kind == 'regular':
        return [('regular', regular_point(sphere))]
    if kind == 'grid':
        return grid_points(sphere, *config.grid)
    if kind == 'stratum':
        singular = [(f"stratum{r}", x) for r, x in sphere.stratum_representatives() if r > 1]
        return singular or [('regular', regular_point(sphere))]
    # random: the same number of samples from every stratum
    rng = np.random.default_rng(config.seed)
    points = []
    for r in range(1, sphere.strata.t + 1):
        for i, x in enumerate(sphere.random_points(r, config.samples, rng)):
            points.append((f"r{r}-{i + 1}", x))
    return points
