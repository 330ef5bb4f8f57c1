"""Least-squares fits of expansion coefficients and exponential decay rates."""
import logging
from typing import Optional, Sequence, Tuple

import numpy as np

from ..core.errors import RankDeficiencyError

logger = logging.getLogger(__name__)

MIN_FIT_ROWS = 6


def fit_coefficients(ms: Sequence[int], values: Sequence[float], sum_factors: Sequence[int], n: int,
                     terms: int = 3) -> Tuple[float, ...]:
    """Fit S_m / sum_factor = b0 m^n + b1 m^{n-1} + b2 m^{n-2}.

    Columns are scaled to unit norm before solving.
    """
    # vanishing sum factors carry no information on the coefficients
    rows = [(m, v / f) for m, v, f in zip(ms, values, sum_factors) if f != 0]
    distinct = {m for m, _ in rows}
    if len(distinct) < MIN_FIT_ROWS:
        raise RankDeficiencyError(
            f"need at least {MIN_FIT_ROWS} distinct m with nonzero sum factor, got {len(distinct)}")
    m = np.array([r[0] for r in rows], dtype=float)
    y = np.array([r[1] for r in rows], dtype=float)
    design = np.column_stack([m ** (n - j) for j in range(terms)])
    scale = np.linalg.norm(design, axis=0)
    scaled = design / scale
    solution, _, rank, singular = np.linalg.lstsq(scaled, y, rcond=None)
    if rank < terms or singular[-1] < 1e-12 * singular[0]:
        raise RankDeficiencyError(f"design matrix is rank deficient (singular values {singular})")
    return tuple(float(c) for c in solution / scale)


def fit_decay_rate(ms: Sequence[int], distances: Sequence[float], residuals: Sequence[float],
                   n: int) -> Optional[Tuple[float, float]]:
    """(log C, epsilon) from log(|residual| m^{-n}) = log C - epsilon m d^2; None without data."""
    m = np.asarray(ms, dtype=float)
    d = np.asarray(distances, dtype=float)
    r = np.abs(np.asarray(residuals, dtype=float))
    # log needs positive residuals; points on the stratum carry no rate
    keep = (r > 0) & (d > 0)
    if np.count_nonzero(keep) < 3:
        return None
    x = -m[keep] * d[keep] ** 2
    # a constant abscissa leaves the slope undetermined
    if np.ptp(x) == 0:
        return None
    y = np.log(r[keep]) - n * np.log(m[keep])
    design = np.column_stack([np.ones_like(x), x])
    (log_c, epsilon), *_ = np.linalg.lstsq(design, y, rcond=None)
    logger.debug("decay fit over %d rows: log C=%.6g epsilon=%.6g", len(x), log_c, epsilon)
    return float(log_c), float(epsilon)
