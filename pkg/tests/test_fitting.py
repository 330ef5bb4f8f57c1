import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from szego_toolkit.core.errors import RankDeficiencyError
from szego_toolkit.experiments.fitting import fit_coefficients, fit_decay_rate

coefficient = st.floats(min_value=-5, max_value=5, allow_nan=False)


@given(coefficient, coefficient, coefficient)
def test_exact_polynomials_are_recovered(b0, b1, b2):
    ms = list(range(10, 130, 10))
    values = [b0 * m ** 2 + b1 * m + b2 for m in ms]
    np.testing.assert_allclose(fit_coefficients(ms, values, [1] * len(ms), n=2), (b0, b1, b2), atol=1e-7)


def test_sum_factor_is_divided_out_and_zero_rows_skipped():
    ms = list(range(2, 40))
    factors = [2 if m % 2 == 0 else 0 for m in ms]
    values = [f * (0.5 * m + 0.25 + 1.0 / m) for m, f in zip(ms, factors)]
    np.testing.assert_allclose(fit_coefficients(ms, values, factors, n=1), (0.5, 0.25, 1.0), atol=1e-9)


def test_too_few_rows():
    with pytest.raises(RankDeficiencyError):
        fit_coefficients([10, 20, 30, 40, 50], [1.0] * 5, [1] * 5, n=1)
    with pytest.raises(RankDeficiencyError):
        fit_coefficients([10] * 8, [1.0] * 8, [1] * 8, n=1)


def test_decay_rate_of_a_clean_gaussian():
    ms, ds, residuals = [], [], []
    for d in (0.1, 0.2, 0.3):
        for m in range(11, 202, 10):
            ms.append(m)
            ds.append(d)
            residuals.append(3.0 * m * math.exp(-0.8 * m * d * d))
    log_c, epsilon = fit_decay_rate(ms, ds, residuals, n=1)
    assert epsilon == pytest.approx(0.8)
    assert log_c == pytest.approx(math.log(3.0))


def test_decay_rate_needs_data():
    assert fit_decay_rate([10, 20], [0.1, 0.1], [1.0, 0.5], n=1) is None
    assert fit_decay_rate([10, 20, 30], [0.0, 0.0, 0.0], [1.0, 0.5, 0.2], n=1) is None
    assert fit_decay_rate([10, 10, 10], [0.1, 0.1, 0.1], [1.0, 0.5, 0.2], n=1) is None
