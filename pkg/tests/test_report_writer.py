import numpy as np
import pytest

from szego_toolkit.experiments.report_writer import (ReportWriter, format_value, render_csv, residual_series,
                                                     write_outputs)
from szego_toolkit.experiments.expansion_runner import ExpansionRow
from szego_toolkit.models.weighted_sphere import SpherePoint

COLUMNS = ('point', 'm', 'value')
TABLE = [{'point': 'a', 'm': 1, 'value': 0.1}, {'point': 'a', 'm': 2, 'value': 1 / 3}]


@pytest.mark.parametrize('value, text', [
    (0.1, '0.10000000000000001'),
    (np.float64(2.0), '2'),
    (np.int64(7), '7'),
    (True, '1'),
    (1 - 2j, '1-2j'),
    (complex(0.5, 0.0), '0.5'),
    ('label', 'label'),
    (SpherePoint((0.6, 0.8j)), '0.59999999999999998 0+0.80000000000000004j'),
])
def test_format_value(value, text):
    assert format_value(value) == text


def test_render_csv_uses_crlf_and_fills_missing_cells():
    text = render_csv(COLUMNS, [{'point': 'a', 'm': 3}])
    assert text == 'point,m,value\r\na,3,\r\n'


def test_write_csv_is_deterministic(tmp_path):
    writer = ReportWriter()
    target = tmp_path / 'nested' / 'table.csv'
    ok, message = writer.write_csv(target, COLUMNS, TABLE)
    assert ok, message
    first = target.read_bytes()
    assert first.startswith(b'point,m,value\r\n')
    writer.write_csv(target, COLUMNS, TABLE)
    assert target.read_bytes() == first


def test_failed_validation_leaves_the_target_alone(tmp_path):
    target = tmp_path / 'table.csv'
    target.write_text('previous', encoding='utf-8')
    ok, message = ReportWriter()._write_atomic(target, 'new', lambda path: False)
    assert not ok and 'nothing written' in message
    assert target.read_text(encoding='utf-8') == 'previous'


def test_svg_plots(tmp_path):
    writer = ReportWriter()
    ok, _ = writer.write_svg(tmp_path / 'plot.svg', {'a': ([1, 10, 100], [1.0, 0.1, 0.01])}, title='residual')
    assert ok
    assert (tmp_path / 'plot.svg').read_text(encoding='utf-8').startswith('<svg')
    ok, message = writer.write_svg(tmp_path / 'empty.svg', {'a': ([1, 2], [0.0, -1.0])})
    assert not ok and message.startswith('Plot error')
    assert not (tmp_path / 'empty.svg').exists()


def test_residual_series_groups_by_point():
    x = SpherePoint((1.0, 0.0))
    rows = [ExpansionRow(point=p, x=x, r=1, p_r=1, m=m, sum_factor=1, exact=1.0, prediction=1.5, distance=0.0)
            for p in ('a', 'b') for m in (5, 10)]
    series = residual_series(rows)
    assert series == {'a': ([5, 10], [0.5, 0.5]), 'b': ([5, 10], [0.5, 0.5])}


def test_write_outputs(tmp_path):
    ok, messages = write_outputs(ReportWriter(), COLUMNS, TABLE, str(tmp_path / 'out.csv'),
                                 str(tmp_path / 'out.svg'), {'a': ([1, 2], [0.1, 1 / 3])})
    assert ok and len(messages) == 2
    assert write_outputs(ReportWriter(), COLUMNS, TABLE, None) == (True, [])
