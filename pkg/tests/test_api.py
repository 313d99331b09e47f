import pytest


def test_predict_dgemm(client):
    response = client.get('/api/predict/dgemm?n=32768')
    assert response.status_code == 200
    body = response.get_json()
    assert body['status'] == 'ok'
    assert body['gpu'] == 'B200'
    assert body['prediction']['value'] == pytest.approx(36.2988, abs=1e-3)
    assert body['prediction']['baseline'] == pytest.approx(18.904)


def test_predict_de(client):
    body = client.get('/api/predict/de?chunk=256KB&concurrency=4').get_json()
    assert body['prediction']['value'] == pytest.approx(12.84)
    assert body['prediction']['extras']['efficiency'] == pytest.approx(1.0)


def test_predict_tile(client):
    body = client.get('/api/predict/tile?m=16&n=16').get_json()
    assert body['prediction']['efficiency'] == 0.45


def test_predict_tile_curve(client):
    body = client.get('/api/predict/tile?curve=1').get_json()
    assert body['status'] == 'ok'
    assert [p['dim'] for p in body['prediction']][:2] == [16, 32]
    assert body['prediction'][-1]['efficiency'] == 0.7


@pytest.mark.parametrize('url,status,kind', [
    ('/api/predict/peak?gpu=H200&precision=fp4', 422, 'missing_calibration'),
    ('/api/predict/dgemm', 400, 'precondition'),
    ('/api/predict/dgemm?n=big', 400, 'precondition'),
    ('/api/predict/warp', 404, 'unknown_format'),
    ('/api/predict/llm?gpu=A100&model=mistral-7b&precision=fp8', 404, 'unknown_machine'),
    ('/api/reproduce/T42', 400, 'precondition'),
    ('/api/machines/a100', 404, 'unknown_machine'),
])
def test_errors(client, url, status, kind):
    response = client.get(url)
    assert response.status_code == status
    body = response.get_json()
    assert body['status'] == 'error'
    assert body['kind'] == kind


def test_reproduce(client):
    body = client.get('/api/reproduce/t03').get_json()
    assert body['report']['table'] == 'T3'
    assert body['report']['passed'] is True
    assert len(body['report']['cells']) == 16


def test_ledger(client):
    assert len(client.get('/api/ledger').get_json()['entries']) == 12


def test_machine(client):
    body = client.get('/api/machines/h200').get_json()
    machine = body['machine']
    assert machine['name'] == 'H200'
    assert machine['tmem'] is False
    assert machine['decompression_engine'] is False
    assert machine['unsupported'] == ['fp6', 'fp4']
    assert machine['optimal_tile_dim'] == 32
    assert machine['board_power_watts'] == pytest.approx(9240 / 15.6)
    assert 'tensor.peak' in body['provenance']


def test_unknown_route(client):
    response = client.get('/api/nowhere')
    assert response.status_code == 404
    assert response.get_json()['kind'] == 'not_found'
