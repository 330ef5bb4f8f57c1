import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_point
from szego_toolkit.core.brt_chart import BRTChart, Transition
from szego_toolkit.core.coefficient_engine import coefficients_at
from szego_toolkit.core.curvature_engine import (CurvatureEngine, chern_package, curvature_report, rdot,
                                                 rigid_scalar_curvature, theta_quantities, tw_scalar)
from szego_toolkit.models.flat_model import bargmann_fock_chart
from szego_toolkit.models.weighted_sphere import SpherePoint

FUBINI = BRTChart(n=1, potential='log(1 + z1*zb1)', label='fs')
FUBINI_2 = BRTChart(n=2, potential='log(1 + z1*zb1 + z2*zb2)', label='fs2')
small = st.complex_numbers(max_magnitude=0.9, allow_nan=False, allow_infinity=False)


@given(small)
def test_fubini_study_has_constant_scalar_curvature(z):
    assert rigid_scalar_curvature(FUBINI, (z,)) == pytest.approx(4 * math.pi, rel=1e-9)
    assert tw_scalar(FUBINI, (z,)) == pytest.approx(1.0, rel=1e-9)


def test_two_dimensional_fubini_study():
    # Ricci = (n + 1) g_FS in the normalisation g = 2 d dbar phi, so R = n(n + 1) / 2
    z = (0.2 + 0.1j, -0.3j)
    assert tw_scalar(FUBINI_2, z) == pytest.approx(3.0, rel=1e-9)
    assert rigid_scalar_curvature(FUBINI_2, z) == pytest.approx(12 * math.pi, rel=1e-9)


def test_flat_chart_has_no_curvature():
    chart = bargmann_fock_chart(2)
    report = curvature_report(chart, (0.3, 0.1j))
    assert report.S_L == pytest.approx(0.0, abs=1e-12)
    assert report.S_Theta_L == pytest.approx(0.0, abs=1e-12)
    assert report.lap_S_L == pytest.approx(0.0, abs=1e-12)
    assert all(value == pytest.approx(0.0, abs=1e-12) for value in report.norms.values())
    assert report.det_Rdot == pytest.approx(4.0)
    assert report.a_density == pytest.approx(4 / math.pi ** 2)
    assert report.b_density == pytest.approx(4.0)


def test_sphere_chart_scalar_curvature(s3_levi, rng):
    for _ in range(5):
        x = random_point(rng, 2)
        chart = s3_levi.brt_chart_at(x)
        assert rigid_scalar_curvature(chart, chart.center) == pytest.approx(8 * math.pi, rel=1e-8)


def test_scalar_curvature_matches_tanaka_webster(rng):
    chart = BRTChart(n=2, potential='z1*zb1 + z2*zb2 + 0.3*(z1*zb1)**2 + 0.1*z1*zb2 + 0.1*z2*zb1')
    for _ in range(5):
        z = tuple(0.3 * (rng.normal(size=2) + 1j * rng.normal(size=2)))
        assert rigid_scalar_curvature(chart, z) == pytest.approx(4 * math.pi * tw_scalar(chart, z), rel=1e-9)


def test_levi_theta_quantities_reduce_to_levi_ones():
    z = (0.25 - 0.4j,)
    b, s_theta, rdet = theta_quantities(FUBINI, z)
    report = curvature_report(FUBINI, z)
    assert b == pytest.approx(report.a_density)
    assert s_theta == pytest.approx(report.S_L, rel=1e-10)
    matrix, det = rdot(FUBINI, z)
    np.testing.assert_allclose(matrix, 2 * math.pi * np.eye(1), atol=1e-12)
    assert det == pytest.approx(2 * math.pi)
    assert rdet.shape == (1, 1)


def test_chern_package_on_fubini_study():
    curv, ricci, norms = chern_package(FUBINI, (0.1,))
    assert curv.shape == (1, 1, 1, 1)
    assert ricci.shape == (1, 1)
    # in dimension one every norm is the squared Gauss curvature in the Levi metric
    assert norms['RT'] == pytest.approx(norms['Ric'])
    assert norms['Ric'] > 0


def test_scalar_curvature_is_chart_invariant():
    bend = Transition(H_map=lambda zs, zbs: [2 * zs[0] + 0.5 * zs[0] * zs[0]], label="bend")
    pushed = bend.pushforward(FUBINI)
    z = (0.15 + 0.05j,)
    w = tuple(bend.apply(z))
    assert rigid_scalar_curvature(pushed, w) == pytest.approx(rigid_scalar_curvature(FUBINI, z), rel=1e-8)


def test_hopf_chart_closed_forms(s3_round):
    chart = s3_round.brt_chart_at((1.0, 0.0))
    assert chart.center == pytest.approx((0.0,))
    report = curvature_report(chart, chart.center)
    np.testing.assert_allclose(report.g, [[1.0]], atol=1e-12)
    assert report.tw_scalar == pytest.approx(2.0, rel=1e-10)
    assert report.det_Rdot == pytest.approx(2.0, rel=1e-10)
    assert report.S_Theta_L == pytest.approx(8 * math.pi, rel=1e-9)
    assert report.b_density == pytest.approx(1.0, rel=1e-12)
    for key in ('Ric', 'RT', 'Ric_Rdet'):
        assert report.norms[key] == pytest.approx(16 * math.pi ** 2, rel=1e-9), key


def test_hopf_chart_theta_density_off_center(s3_round):
    x = (0.6, 0.8j)
    chart = s3_round.brt_chart_at(x)
    w = chart.center
    b, s_theta, _ = theta_quantities(chart, w)
    assert b == pytest.approx((1 + abs(w[0]) ** 2) ** -2, rel=1e-10)
    assert s_theta == pytest.approx(8 * math.pi, rel=1e-9)


def test_five_sphere_chart(s5_round):
    chart = s5_round.brt_chart_at((0.6, 0.0, 0.8))
    report = curvature_report(chart, chart.center)
    assert report.S_L == pytest.approx(24 * math.pi, rel=1e-9)
    assert report.tw_scalar == pytest.approx(6.0, rel=1e-9)
    assert report.det_Rdot == pytest.approx(4.0, rel=1e-10)


def test_singular_chart_of_the_one_two_sphere(sphere_12):
    chart = sphere_12.brt_chart_at((0.0, 1.0))
    assert chart.meta['pivot'] == 1
    np.testing.assert_allclose(curvature_report(chart, chart.center).g, [[0.5]], atol=1e-12)


CUBIC = Transition(H_map=lambda zs, zbs: [z + z * z * z for z in zs], label="cubic")


@pytest.mark.parametrize('x', [(1.0, 0.4 + 0.2j, -0.3 + 0.1j), (0.5 - 0.2j, 1.0, 0.3j)])
def test_five_sphere_round_chart_survives_a_cubic_change_of_coordinates(s5_round, x):
    chart = s5_round.brt_chart_at(SpherePoint.normalized(x))
    pushed = CUBIC.pushforward(chart)
    before = curvature_report(chart, chart.center)
    after = curvature_report(pushed, pushed.center)
    assert after.det_Rdot == pytest.approx(4.0, rel=1e-8)
    assert after.S_Theta_L == pytest.approx(before.S_Theta_L, rel=1e-8)
    assert after.lap_S_Theta_L == pytest.approx(before.lap_S_Theta_L, abs=1e-7)
    np.testing.assert_allclose(coefficients_at(pushed, pushed.center, 'ambient-round').as_tuple(),
                               coefficients_at(chart, chart.center, 'ambient-round').as_tuple(), rtol=1e-8)


def test_weighted_levi_chart_survives_a_cubic_change_of_coordinates(sphere_12):
    chart = sphere_12.brt_chart_at(SpherePoint.normalized((0.7 + 0.2j, 0.5)))
    pushed = CUBIC.pushforward(chart)
    np.testing.assert_allclose(coefficients_at(pushed, pushed.center).as_tuple(),
                               coefficients_at(chart, chart.center).as_tuple(), rtol=1e-8)


def test_engine_caches_reports_per_point():
    engine = CurvatureEngine(FUBINI_2)
    z = (0.2 + 0.1j, -0.3j)
    first = engine.report(z)
    assert engine.last_report_stats['cached'] is False
    assert engine.last_report_stats['points_visited'] == 1

    second = engine.report([complex(c) for c in z])
    assert second is first
    assert engine.last_report_stats['cached'] is True

    engine.report((0.1, 0.1))
    assert engine.last_report_stats['points_visited'] == 2
    assert len(engine.geometry_cache) == 2

    engine.clear_cache()
    assert not engine.report_cache and not engine.geometry_cache


def test_engine_agrees_with_the_module_functions():
    engine = CurvatureEngine(FUBINI_2, use_gram=False)
    z = (0.3j, 0.1 - 0.2j)
    report = engine.report(z)
    assert engine.scalar_curvature(z) == pytest.approx(rigid_scalar_curvature(FUBINI_2, z), rel=1e-12)
    assert engine.tw_scalar(z) == pytest.approx(report.tw_scalar, rel=1e-12)
    np.testing.assert_allclose(engine.rdot(z)[0], rdot(FUBINI_2, z)[0], rtol=1e-12)
    # a matching engine is reused, so nothing new is cached
    assert coefficients_at(FUBINI_2, z, engine=engine).as_tuple() == \
        pytest.approx(coefficients_at(FUBINI_2, z).as_tuple(), rel=1e-12)
    assert len(engine.report_cache) == 1
