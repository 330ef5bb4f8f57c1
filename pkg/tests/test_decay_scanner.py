import math

import pytest

from conftest import grid_point
from szego_toolkit.core.errors import EmptyStratumError
from szego_toolkit.experiments.config_loader import build_config
from szego_toolkit.experiments.decay_scanner import (GradientRow, bounded_in_m, decay_scan, distance_equivalence,
                                                     gradient_scan)
from szego_toolkit.models.weighted_sphere import SpherePoint


@pytest.fixture(scope='module')
def decay_report():
    config = build_config({'weights': '1,2', 'points': 'grid', 'grid': '0.05:0.4:8', 'm': '11:10:201'})
    return decay_scan(config)


@pytest.mark.slow
def test_residual_decays_near_the_exceptional_orbit(decay_report):
    assert decay_report.epsilon is not None and decay_report.epsilon > 0
    assert decay_report.flags['decay_rate_positive']
    assert decay_report.flags['decay_envelope']
    assert not decay_report.skipped
    assert len(decay_report.rows) == 8 * 20
    assert any(row.regime == 'exp' for row in decay_report.rows)


@pytest.mark.slow
def test_scan_records_distances_and_gradients(decay_report):
    assert len(decay_report.gradient_rows) == len(decay_report.rows)
    for entry in decay_report.equivalence:
        assert entry['ratio'] == pytest.approx(2.0, rel=1e-6)
    table = decay_report.table()
    assert table[0]['m'] == 11
    assert table[0]['distance'] == pytest.approx(math.asin(0.05))


def test_unweighted_spheres_have_no_stratum():
    with pytest.raises(EmptyStratumError):
        decay_scan(build_config({'model': 's3'}))


def test_points_on_the_stratum_are_skipped():
    config = build_config({'weights': '1,2', 'm': '11:10:51'})
    with pytest.raises(EmptyStratumError):
        decay_scan(config, points=[('top', SpherePoint((0.0, 1.0)))])


def test_bounded_in_m():
    assert bounded_in_m([1.0, 2.0], [3.9], slack=2.0) == (True, 4.0)
    assert bounded_in_m([1.0, 2.0], [4.1], slack=2.0)[0] is False
    ok, constant = bounded_in_m([], [5.0], slack=2.0)
    assert ok and math.isnan(constant)


def test_distance_equivalence(sphere_12):
    entries = distance_equivalence(sphere_12, [('a', grid_point(0.2)), ('top', SpherePoint((0.0, 1.0)))])
    assert entries[0]['d_hat'] == pytest.approx(2 * entries[0]['distance'], rel=1e-8)
    assert entries[1]['distance'] == 0.0
    assert math.isnan(entries[1]['ratio'])


def test_gradient_scan_rows(sphere_12):
    rows = gradient_scan(sphere_12, [('a', grid_point(0.3))], [11, 21], epsilon=1.0)
    assert [row.m for row in rows] == [11, 21]
    assert all(isinstance(row, GradientRow) and row.envelope > 11 for row in rows)
    assert all(row.normalized == pytest.approx(row.gradient / row.envelope) for row in rows)
