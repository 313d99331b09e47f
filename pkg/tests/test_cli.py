import json

import pytest
from click.testing import CliRunner

from calibration.presets import builtin_path
from cli import cli
from perfmodel import chunk_profile, model_throughput
from perfmodel.decomp import DEFAULT_CONCURRENCIES


@pytest.fixture
def runner():
    return CliRunner(mix_stderr=False)


def _json(result):
    assert result.exit_code == 0, result.stderr
    return json.loads(result.stdout)


def test_predict_dgemm_json(runner):
    payload = _json(runner.invoke(cli, ['predict', 'dgemm', '--n', '32768', '--output', 'json']))
    assert payload['command'] == 'predict dgemm'
    assert payload['inputs'] == {'gpu': 'B200', 'n': 32768}
    out = payload['outputs'][0]
    assert out['value'] == pytest.approx(36.2988, abs=1e-3)
    assert out['extrapolated'] is False
    assert out['ratio'] == pytest.approx(1.92, rel=0.005)


def test_predict_stream_parses_sizes(runner):
    payload = _json(runner.invoke(cli, ['predict', 'stream', '--array-size', '128GB', '--output', 'json']))
    assert payload['inputs']['array_bytes'] == 128_000_000_000
    assert payload['outputs'][0]['value'] == pytest.approx(7.48)


def test_predict_latency_table(runner):
    result = runner.invoke(cli, ['predict', 'latency', '--batch', '8'])
    assert result.exit_code == 0
    header, rule, row = result.stdout.splitlines()
    assert header.split()[:3] == ['metric', 'value', 'unit']
    assert row.split()[:2] == ['llm_latency', '28.6']


def test_predict_mma_on_hopper(runner):
    payload = _json(runner.invoke(
        cli, ['predict', 'mma', '--gpu', 'H200', '--shape', 'm64n192k16', '--chain', '2', '--output', 'json']))
    metrics = {o['metric']: o['value'] for o in payload['outputs']}
    assert metrics['instr_latency'] == 96
    assert metrics['dependency_chain'] == 192
    assert 'instr_throughput' not in metrics


def test_predict_de_curve_csv(runner):
    result = runner.invoke(cli, ['predict', 'de', '--chunk', '32KB', '--curve', '--output', 'csv'])
    assert result.exit_code == 0
    lines = result.stdout.splitlines()
    assert lines[0] == 'concurrency,aggregate_gbps,efficiency'
    assert len(lines) == 1 + len(DEFAULT_CONCURRENCIES)
    assert lines[1] == '1,0.75,1'


def test_predict_de_recommend(runner):
    payload = _json(runner.invoke(cli, [
        'predict', 'de', '--recommend', '--object-size', '48KB', '--latency-budget', '1',
        '--kind', 'numeric', '--output', 'json']))
    rec = payload['outputs'][0]
    assert rec['format'] == 'bitcomp'
    assert rec['chunk_bytes'] == 32768
    assert rec['concurrency'] == 16


def test_predict_de_needs_a_mode(runner):
    result = runner.invoke(cli, ['predict', 'de'])
    assert result.exit_code == 2


def test_predict_tile(runner):
    payload = _json(runner.invoke(
        cli, ['predict', 'tile', '--m', '128', '--n', '128', '--k', '64', '--output', 'json']))
    out = payload['outputs'][0]
    assert out['efficiency'] == 1.0
    assert out['bytes_moved'] == 98304


def test_predict_tile_curve(runner):
    rows = _json(runner.invoke(cli, ['predict', 'tile', '--curve', '--output', 'json']))['outputs']
    assert [r['dim'] for r in rows] == [16, 32, 48, 64, 96, 128, 256]
    assert [r['efficiency'] for r in rows] == [0.45, 0.8, 0.917, 1.0, 1.0, 1.0, 0.7]


def test_predict_tile_needs_dimensions(runner):
    result = runner.invoke(cli, ['predict', 'tile', '--m', '64'])
    assert result.exit_code == 2


@pytest.mark.parametrize('args,code,kind', [
    (['predict', 'peak', '--gpu', 'H200', '--precision', 'fp4'], 3, 'missing_calibration'),
    (['predict', 'dgemm', '--gpu', 'A100', '--n', '1024'], 2, 'unknown_machine'),
    (['predict', 'de', '--gpu', 'H200', '--chunk', '32KB', '--concurrency', '4'], 3, 'missing_calibration'),
    (['predict', 'de', '--chunk', '48KB', '--concurrency', '4'], 3, 'unknown_chunk'),
    (['predict', 'mma', '--gpu', 'H200', '--isa', 'tcgen05', '--shape', 'm64n64k16'], 3, 'unsupported'),
    (['reproduce', 'T99'], 2, 'precondition'),
])
def test_errors_have_kind_and_exit_code(runner, args, code, kind):
    result = runner.invoke(cli, args)
    assert result.exit_code == code
    assert result.stderr.startswith(f'error[{kind}]: ')


def test_reproduce_one_table(runner):
    payload = _json(runner.invoke(cli, ['reproduce', 'T3', '--output', 'json']))
    assert payload['inputs'] == {'table': 'T3'}
    assert len(payload['outputs']) == 16
    assert all(cell['passed'] for cell in payload['outputs'])


def test_reproduce_all(runner):
    payload = _json(runner.invoke(cli, ['reproduce', '--all', '--output', 'json']))
    assert [row['table'] for row in payload['outputs']] == [f'T{i}' for i in range(1, 15)]
    assert all(row['passed'] for row in payload['outputs'])


def test_reproduce_failure_exit_code(runner, tmp_path):
    text = builtin_path('B200').read_text(encoding='utf-8').replace(
        'fp16_tflops = 1929.2', 'fp16_tflops = 1800.0')
    override = tmp_path / 'b200.spec'
    override.write_text(text, encoding='utf-8')
    result = runner.invoke(cli, ['reproduce', 'T7', '--spec', str(override)])
    assert result.exit_code == 4
    assert 'error[reproduction_failed]: T7 worst cell fp16/' in result.stderr


def test_quantize(runner, tmp_path, rng):
    vector = tmp_path / 'weights.txt'
    vector.write_text('\n'.join(f'{v:.6f}' for v in rng.normal(size=40)) + '\n', encoding='utf-8')
    payload = _json(runner.invoke(cli, ['quantize', str(vector), '--format', 'mxfp4', '--output', 'json']))
    stats = payload['outputs'][0]
    assert stats['padding'] == 24
    assert stats['sqnr_db'] > 0
    codes = (tmp_path / 'weights.txt.codes').read_text(encoding='utf-8').splitlines()
    assert len(codes) == 2


def test_quantize_zero_signal_reports_stats(runner, tmp_path):
    vector = tmp_path / 'zeros.txt'
    vector.write_text('0\n' * 20, encoding='utf-8')
    result = runner.invoke(cli, ['quantize', str(vector), '--format', 'nvfp4', '--output', 'json'])
    stats = _json(result)['outputs'][0]
    assert stats['mse'] == 0
    assert stats['sqnr_db'] is None
    assert stats['padding'] == 12
    assert stats['notes'] == ['signal power is zero; sqnr undefined']
    assert 'sqnr undefined' in result.stderr

    table = runner.invoke(cli, ['quantize', str(vector), '--format', 'e4m3'])
    assert table.exit_code == 0
    assert 'N/A' in table.stdout


def test_quantize_bad_vector(runner, tmp_path):
    vector = tmp_path / 'bad.txt'
    vector.write_text('1.0\nnope\n', encoding='utf-8')
    result = runner.invoke(cli, ['quantize', str(vector), '--format', 'e4m3'])
    assert result.exit_code == 2
    assert result.stderr.startswith('error[parse_error]: ')
    assert ':2:' in result.stderr


def test_fit_de_writes_fragment(runner, tmp_path, b200):
    truth = chunk_profile(b200, 131072)
    csv_path = tmp_path / 'de.csv'
    csv_path.write_text('concurrency,gbps\n' + ''.join(
        f'{b},{model_throughput(truth, b):.6f}\n' for b in DEFAULT_CONCURRENCIES), encoding='utf-8')
    fragment = tmp_path / 'chunk.spec'
    payload = _json(runner.invoke(cli, [
        'fit-de', str(csv_path), '--chunk', '128KB', '--write', str(fragment), '--output', 'json']))
    out = payload['outputs'][0]
    assert out['pipeline_depth'] == 8
    assert out['saturation_batch'] == 256
    assert fragment.read_text(encoding='utf-8').startswith('[decomp.chunk.131072]\n')


def test_fit_de_too_few_points(runner, tmp_path):
    csv_path = tmp_path / 'de.csv'
    csv_path.write_text('concurrency,gbps\n1,1.0\n2,2.0\n', encoding='utf-8')
    result = runner.invoke(cli, ['fit-de', str(csv_path), '--chunk', '32KB'])
    assert result.exit_code == 5
    assert result.stderr.startswith('error[ill_conditioned]: ')


def test_ledger(runner):
    payload = _json(runner.invoke(cli, ['ledger', '--output', 'json']))
    assert len(payload['outputs']) == 12
