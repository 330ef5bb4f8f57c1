import math

import pytest

from szego_toolkit.core.errors import ConfigError
from szego_toolkit.experiments.config_loader import (DEFAULT_TOLERANCES, EXPANSION_M_VALUES, ExperimentConfig,
                                                     build_config, load_config, parse_config_text, parse_grid,
                                                     parse_m_range, parse_matrix, parse_points)

EXAMPLE = """
# weighted sphere with weights (1, 2)
model = weighted_sphere
weights = 1, 2
metric_preset = levi
points = grid
grid = 0.05:0.4:8
m_range = 11:10:201   # odd m only
N = 2
tolerance_slack = 3
"""


def test_parse_config_text_strips_comments():
    values = parse_config_text(EXAMPLE)
    assert values['weights'] == '1, 2'
    assert values['m_range'] == '11:10:201'
    with pytest.raises(ConfigError):
        parse_config_text('weights 1, 2')
    with pytest.raises(ConfigError):
        parse_config_text('= 3')


def test_load_config_applies_overrides(tmp_path):
    path = tmp_path / 'decay.cfg'
    path.write_text(EXAMPLE, encoding='utf-8')
    config = load_config(path, {'N': '3', 'out': None})
    assert config.weights == (1, 2)
    assert config.n == 1
    assert config.N == 3
    assert config.grid == (0.05, 0.4, 8)
    assert config.m_values == tuple(range(11, 202, 10))
    assert config.tolerances['slack'] == 3.0
    assert config.tolerances['residual'] == DEFAULT_TOLERANCES['residual']


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / 'absent.cfg')


@pytest.mark.parametrize('text, expected', [
    ('5:5:20', (5, 10, 15, 20)),
    ('1:3', (1, 2, 3)),
    ('2, 4, 8', (2, 4, 8)),
])
def test_parse_m_range(text, expected):
    assert parse_m_range(text) == expected


@pytest.mark.parametrize('text', ['0:1:5', '5:0:10', '10:1:5', 'a:b', '1:2:3:4'])
def test_parse_m_range_rejects(text):
    with pytest.raises(ConfigError):
        parse_m_range(text)


def test_parse_grid_and_points():
    assert parse_grid('0.1:0.3:4') == (0.1, 0.3, 4)
    with pytest.raises(ConfigError):
        parse_grid('0:0.3:4')
    with pytest.raises(ConfigError):
        parse_grid('0.1:0.3')
    assert parse_points('1, 0; 0.6, 0.8j') == ((1, 0), (0.6, 0.8j))
    with pytest.raises(ConfigError):
        parse_points('1, x')


def test_parse_matrix():
    assert parse_matrix('1 + z1*zb1, 0; 0, 1') == (('1 + z1*zb1', '0'), ('0', '1'))
    with pytest.raises(ConfigError):
        parse_matrix('1, 0; 0')


def test_named_models_and_dimension():
    assert build_config({'model': 's5'}).weights == (1, 1, 1)
    assert build_config({'n': '2'}).weights == (1, 1, 1)
    with pytest.raises(ConfigError):
        build_config({'weights': '1,2', 'n': '2'})
    with pytest.raises(ConfigError):
        build_config({'model': 'torus'})


@pytest.mark.parametrize('values', [
    {'weights': '2,4'},
    {'weights': '1'},
    {'metric_preset': 'kahler'},
    {'points': 'everywhere'},
    {'points': 'explicit'},
    {'point_list': '1, 0, 0'},
    {'N': '4'},
    {'threads': '0'},
    {'delta': '2', 'weights': '1,2'},
    {'weights': '1,2', 'metric_preset': 'ambient-round'},
    {'samples': 'many'},
    {'colour': 'blue'},
])
def test_invalid_configurations(values):
    with pytest.raises(ConfigError):
        build_config(values)


def test_defaults():
    config = ExperimentConfig().validate()
    assert config.m_list(EXPANSION_M_VALUES) == EXPANSION_M_VALUES
    assert config.effective_delta == pytest.approx(math.pi / 2)
    assert config.user_chart is None
    assert build_config({'m': '3,4'}).m_list(EXPANSION_M_VALUES) == (3, 4)


def test_user_chart():
    config = build_config({'chart_potential': 'log(1 + z1*zb1)', 'chart_center': '0.1',
                           'chart_gram': '1/(1 + z1*zb1)**2'})
    chart = config.user_chart
    assert chart.label == 'user'
    assert chart.center == (0.1 + 0j,)
    assert chart.metric_gram is not None
    with pytest.raises(ConfigError):
        build_config({'chart_potential': 'log(1 + z1*zb1)', 'chart_center': '0.1, 0.2'})
    with pytest.raises(ConfigError):
        build_config({'chart_potential': 'z1 % 2'})
