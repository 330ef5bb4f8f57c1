import numpy as np
import pytest

from szego_toolkit.core.brt_chart import (BRTChart, Transition, contact_residuals, dbar_b, levi_matrix,
                                          transition_density_check)
from szego_toolkit.core.errors import GeometryError, NotPseudoconvexError, OverlapError


@pytest.fixture
def flat():
    return BRTChart(n=2, potential='z1*zb1 + z2*zb2', label='flat')


@pytest.fixture
def fubini():
    return BRTChart(n=1, potential='log(1 + z1*zb1)', label='fs')


def test_flat_levi_matrix_is_twice_identity(flat):
    np.testing.assert_allclose(levi_matrix(flat, (0.3, -0.2j)), 2 * np.eye(2), atol=1e-14)


def test_contact_form_annihilates_frames(fubini, flat):
    assert contact_residuals(fubini, (0.4 - 0.3j,)) <= 1e-12
    assert contact_residuals(flat, (0.1, 0.7j)) <= 1e-12


def test_dbar_b_of_a_holomorphic_section_vanishes():
    chart = BRTChart(n=1, potential='z1*zb1')
    components = dbar_b(chart, 2, 'exp(-2*z1*zb1)*(1 + z1)', (0.3 + 0.1j,))
    assert np.max(np.abs(components[0].coeffs)) <= 1e-12


def test_dbar_b_detects_non_cr_sections():
    chart = BRTChart(n=1, potential='z1*zb1')
    components = dbar_b(chart, 2, 'zb1', (0.3,))
    assert components[0].value == pytest.approx(1.0 + 2 * 0.3 * 0.3)


def test_negative_potential_is_not_pseudoconvex():
    with pytest.raises(NotPseudoconvexError):
        levi_matrix(BRTChart(n=1, potential='-z1*zb1'), (0.0,))


def test_points_outside_the_chart_are_rejected():
    chart = BRTChart(n=1, potential='z1*zb1', radius=0.5)
    with pytest.raises(GeometryError):
        chart.potential_jet((1.0,))
    with pytest.raises(GeometryError):
        BRTChart(n=2, potential='z1*zb1', center=(0.0,))


def test_pushforward_keeps_the_volume_density(fubini):
    scale = Transition(H_map=lambda zs, zbs: [2 * zs[0]], inverse=lambda ws, wbs: [0.5 * ws[0]], label='scale')
    pushed = scale.pushforward(fubini)
    assert pushed.center == (0j,)
    assert transition_density_check(scale, fubini, pushed, (0.3 + 0.2j,)) <= 1e-12
    assert scale.holomorphy_residual((0.3,)) == 0


def test_pushforward_solves_for_the_inverse_when_none_is_given():
    chart = BRTChart(n=1, potential='z1*zb1')
    bend = Transition(H_map=lambda zs, zbs: [zs[0] + zs[0] * zs[0]], label='bend')
    pushed = bend.pushforward(chart)
    np.testing.assert_allclose(bend.jacobian((0.1,)), [[1.2]])
    assert transition_density_check(bend, chart, pushed, (0.1,)) <= 1e-10


def test_density_check_requires_the_overlap(fubini):
    scale = Transition(H_map=lambda zs, zbs: [2 * zs[0]], inverse=lambda ws, wbs: [0.5 * ws[0]])
    pushed = scale.pushforward(fubini, radius=0.5)
    with pytest.raises(OverlapError):
        transition_density_check(scale, fubini, pushed, (0.4,))


def test_pushforward_rejects_theta_shifts(fubini):
    shifted = Transition(H_map=lambda zs, zbs: [zs[0]], G=lambda zs, zbs: zs[0])
    with pytest.raises(GeometryError):
        shifted.pushforward(fubini)
