import numpy as np
import pytest

from app import create_app
from calibration import CalibrationSet, builtin_spec


@pytest.fixture(autouse=True)
def _no_spec_dir(monkeypatch):
    monkeypatch.delenv('BLACKMODEL_SPEC_DIR', raising=False)


@pytest.fixture
def b200():
    return builtin_spec('B200')


@pytest.fixture
def h200():
    return builtin_spec('H200')


@pytest.fixture
def specs():
    return CalibrationSet.load()


@pytest.fixture
def rng():
    return np.random.default_rng(20250117)


@pytest.fixture
def client():
    app = create_app()
    app.config['TESTING'] = True
    with app.test_client() as client:
        yield client
