import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_point
from szego_toolkit.core.brt_chart import BRTChart
from szego_toolkit.core.coefficient_engine import (CoefficientSet, assemble_coefficients, coefficients_at,
                                                   expansion_prediction, local_bergman_coefficients, sum_factor)
from szego_toolkit.core.errors import InadmissiblePresetError, UnsupportedTruncationError
from szego_toolkit.experiments.expansion_runner import point_coefficients
from szego_toolkit.models.flat_model import bargmann_fock_chart


def assert_coefficients(actual: CoefficientSet, expected):
    np.testing.assert_allclose(actual.as_tuple(), expected, rtol=1e-8, atol=1e-10)


def test_round_three_sphere(s3_round, rng):
    for _ in range(4):
        x = random_point(rng, 2)
        assert_coefficients(point_coefficients(s3_round, x, 'ambient-round'),
                            (1 / (2 * math.pi ** 2), 1 / (2 * math.pi ** 2), 0.0))


def test_round_five_sphere(s5_round, rng):
    for _ in range(3):
        x = random_point(rng, 3)
        assert_coefficients(point_coefficients(s5_round, x, 'ambient-round'),
                            tuple(c / (2 * math.pi ** 3) for c in (1.0, 3.0, 2.0)))


def test_levi_three_sphere(s3_levi, rng):
    x = random_point(rng, 2)
    assert_coefficients(point_coefficients(s3_levi, x, 'levi'), (1 / (2 * math.pi), 1 / (2 * math.pi), 0.0))


def test_flat_chart_has_only_a_leading_term():
    chart = bargmann_fock_chart(2)
    assert_coefficients(coefficients_at(chart, (0.2, 0.3j), 'levi'), (1 / (2 * math.pi), 0.0, 0.0))
    assert_coefficients(coefficients_at(chart, (0.2, 0.3j), 'ambient-round'), (1 / (2 * math.pi ** 3), 0.0, 0.0))


def test_presets_are_validated():
    chart = BRTChart(n=1, potential='log(1 + z1*zb1)')
    with pytest.raises(InadmissiblePresetError):
        coefficients_at(chart, (0.0,), 'ambient-round')
    with pytest.raises(InadmissiblePresetError):
        coefficients_at(chart, (0.0,), 'kahler')


def test_local_bergman_coefficients_differ_by_two_pi():
    chart = BRTChart(n=1, potential='log(1 + z1*zb1) + 0.2*(z1*zb1)**2')
    z = (0.3 - 0.2j,)
    local = local_bergman_coefficients(chart, z, use_gram=False)
    np.testing.assert_allclose(local, 2 * math.pi * np.array(coefficients_at(chart, z).as_tuple()),
                               rtol=1e-8, atol=1e-12)


def test_assemble_scales_with_the_prefactor():
    args = (4 * math.pi, 2 * math.pi, 0.5, -0.3, 1.2, 0.7, 2.0, 3.0)
    one = assemble_coefficients(1.0, *args)
    three = assemble_coefficients(3.0, *args)
    np.testing.assert_allclose(three, 3 * np.array(one))
    assert one[1] == pytest.approx(0.5 - 0.5)


@given(st.integers(1, 40), st.integers(1, 500))
def test_sum_factor_is_the_root_of_unity_sum(p, m):
    direct = sum(np.exp(2j * math.pi * (s - 1) * m / p) for s in range(1, p + 1))
    assert sum_factor(m, p) == pytest.approx(direct.real, abs=1e-9)
    assert abs(direct.imag) < 1e-9


def test_sum_factor_rejects_bad_periods():
    with pytest.raises(ValueError):
        sum_factor(3, 0)


def test_prediction_carries_the_sum_factor():
    coeffs = CoefficientSet(1.0, 0.5, 0.25, n=1)
    even = expansion_prediction(coeffs, 10, p_r=2, N=3)
    odd = expansion_prediction(coeffs, 11, p_r=2, N=3)
    assert even.sum_factor == 2
    assert even.value == pytest.approx(2 * (10 + 0.5 + 0.025))
    assert even.terms == pytest.approx((10.0, 0.5, 0.025))
    assert odd.value == 0.0
    assert expansion_prediction(coeffs, 10, N=1).value == pytest.approx(10.0)


def test_prediction_limits():
    coeffs = CoefficientSet(1.0, 0.0, 0.0, n=1)
    with pytest.raises(UnsupportedTruncationError):
        expansion_prediction(coeffs, 10, N=4)
    with pytest.raises(ValueError):
        expansion_prediction(coeffs, 0)
