import json

import pytest

from models import Prediction
from report import format_value, render, render_csv, render_table, to_rows


@pytest.mark.parametrize('value,text', [
    (1.23456789, '1.2346'),
    (2.0, '2'),
    (0.10, '0.1'),
    (None, 'N/A'),
    (True, 'true'),
    (['a', 1.5], 'a; 1.5'),
    (7, '7'),
])
def test_format_value(value, text):
    assert format_value(value) == text


def test_prediction_rows_flatten_extras():
    pred = Prediction('m', 1.0, 'u', baseline=2.0, extras={'b': 1, 'a': {'y': 2, 'x': 3}}, notes=('n',))
    row = to_rows(pred)[0]
    assert list(row)[:7] == ['metric', 'value', 'unit', 'bottleneck', 'baseline', 'ratio', 'extrapolated']
    assert list(row)[7:] == ['a.x', 'a.y', 'b', 'notes']
    assert row['ratio'] == 0.5


def test_csv_and_table():
    rows = [{'name': 'x', 'value': 1.5}, {'name': 'yy', 'value': None}]
    assert render_csv(rows) == 'name,value\nx,1.5\nyy,N/A\n'
    lines = render_table(rows).splitlines()
    assert lines[0].split() == ['name', 'value']
    assert lines[-1].split() == ['yy', 'N/A']


def test_json_envelope_is_deterministic():
    pred = Prediction('m', 1 / 3, 'u', extrapolated=True)
    text = render('json', 'predict x', {'gpu': 'B200'}, pred, extrapolated=True)
    assert text == render('json', 'predict x', {'gpu': 'B200'}, pred, extrapolated=True)
    payload = json.loads(text)
    assert payload['command'] == 'predict x'
    assert payload['extrapolated'] is True
    assert payload['errors'] == []
    assert payload['outputs'][0]['value'] == 0.3333
