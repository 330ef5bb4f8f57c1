import math

import numpy as np
import pytest

from szego_toolkit.core.errors import QuadratureToleranceError
from szego_toolkit.models.quadrature import checked_expectation, dirichlet_expectation


def test_moments_of_the_uniform_simplex():
    assert dirichlet_expectation(lambda t: np.ones(t.shape[1]), (0, 0)) == pytest.approx(1.0)
    assert dirichlet_expectation(lambda t: t[0], (0, 0)) == pytest.approx(0.5)
    assert dirichlet_expectation(lambda t: t[0] * t[1], (0, 0, 0), order=8) == pytest.approx(1 / 12)


def test_weights_shift_the_mean():
    # t ~ Dirichlet(3, 1): E[t_0] = 3 / 4
    assert dirichlet_expectation(lambda t: t[0], (2, 0)) == pytest.approx(0.75)


def test_smooth_density_against_closed_form():
    # E[(1 + t_1)^-2] for t uniform on the segment
    value = checked_expectation(lambda t: (t[0] + 2 * t[1]) ** -2.0, (0, 0))
    assert value == pytest.approx(0.5, rel=1e-13)
    # t_1 ~ Beta(4, 1): 4 * int s^3 / (1 + s) ds
    value = checked_expectation(lambda t: 1.0 / (t[0] + 2 * t[1]), (0, 3))
    assert value == pytest.approx(10 / 3 - 4 * math.log(2), rel=1e-13)


def test_single_coordinate_is_rejected():
    with pytest.raises(ValueError):
        dirichlet_expectation(lambda t: t[0], (3,))


def test_kinks_fail_the_doubling_check():
    with pytest.raises(QuadratureToleranceError):
        checked_expectation(lambda t: np.abs(t[0] - 0.5), (0, 0), order=4)
