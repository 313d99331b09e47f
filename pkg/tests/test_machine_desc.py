import pytest

from calibration import (
    CalibrationSet, builtin_spec, derived_peaks, dump_machine_file, load_machine_file,
    parse_machine_file, peak_consistency, resolve_spec, validate_spec,
)
from calibration.presets import builtin_path
from utils.errors import MissingCalibration, ParseError, PreconditionError, UnknownMachine, ValidationError
from utils.units import parse_size

MINIMAL = '''\
[gpu]
name = "Tiny"
isa = "wgmma"
sm_count = 4

[tensor.peak]
fp16_tflops = 10.0
fp16_pct = 50

[memory]
hbm_capacity_gb = 16
hbm_peak_bw_tbps = 1.5
'''


def test_builtin_b200_units(b200):
    assert b200.name == 'B200'
    assert b200.isa == 'tcgen05'
    assert b200.sm_count == 148
    assert b200.hbm_capacity == pytest.approx(192e9)
    assert b200.hbm_peak_bw == pytest.approx(8e12)
    assert b200.tmem.capacity == 256 * 1024
    assert b200.peaks['fp64'].pct_of_peak == pytest.approx(0.996)
    assert b200.stream.threshold_bytes == pytest.approx(96e9)
    assert set(b200.de.chunk_profiles) == {32768, 65536, 131072, 262144}


def test_builtin_h200_has_no_blackwell_features(h200):
    assert h200.isa == 'wgmma'
    assert h200.tmem is None
    assert h200.de is None
    assert h200.unsupported == ('fp6', 'fp4')
    with pytest.raises(MissingCalibration, match='new-in-Blackwell'):
        h200.peak('fp4')


def test_builtins_validate_clean(b200, h200):
    assert validate_spec(b200) == []
    assert validate_spec(h200) == []


def test_fp64_peak_agrees_with_dgemm_table(b200):
    assert derived_peaks(b200)['fp64'] == pytest.approx(44.98, rel=1e-3)
    assert all(gap < 0.005 for gap in peak_consistency(b200).values())


@pytest.mark.parametrize('name', ['B200', 'H200'])
def test_dump_reloads_to_equal_spec(name):
    spec = builtin_spec(name)
    assert load_machine_file(dump_machine_file(spec)) == spec


def test_minimal_machine_file():
    spec = parse_machine_file(MINIMAL)
    assert spec.name == 'Tiny'
    assert spec.peaks['fp16'].theoretical_peak == pytest.approx(20.0)
    assert spec.de is None and spec.tmem is None
    assert spec.power == {'board_power_watts': None}


def test_board_power_comes_from_training_cells(b200, h200):
    assert b200.power['board_power_watts'] == pytest.approx(647.8, rel=1e-3)
    assert h200.power['board_power_watts'] == pytest.approx(9240 / 15.6)
    assert b200.memory.optimal_tile_dim == 64
    assert h200.memory.optimal_tile_dim == 32


def test_parse_error_reports_line():
    text = '[gpu]\nname = "X"\nisa = "tcgen05"\nsm_count = 1.5\n'
    with pytest.raises(ParseError) as exc:
        parse_machine_file(text, source='bad.spec')
    assert exc.value.line == 4
    assert 'expected an integer' in exc.value.detail
    assert exc.value.message.startswith('bad.spec:4:')


def test_missing_required_section():
    text = '[gpu]\nname = "X"\nisa = "wgmma"\nsm_count = 1\n'
    with pytest.raises(ParseError, match=r'tensor\.peak'):
        parse_machine_file(text)


@pytest.mark.parametrize('text,line', [
    ('[bogus]\nvalue = 1\n', 1),
    ('[gpu]\nname = "X"\nname = "Y"\n', 3),
    ('[gpu]\nname = "X\n', 2),
    ('sm_count = 1\n', 1),
])
def test_malformed_files(text, line):
    with pytest.raises(ParseError) as exc:
        parse_machine_file(text)
    assert exc.value.line == line


def test_validation_collects_violations(b200):
    text = builtin_path('B200').read_text(encoding='utf-8').replace(
        'capacity_kib = 256', 'capacity_kib = 128')
    with pytest.raises(ValidationError) as exc:
        load_machine_file(text)
    assert any('capacity' in v.rule for v in exc.value.violations)


def test_resolve_spec_lookup(tmp_path):
    assert resolve_spec('b200').name == 'B200'
    with pytest.raises(UnknownMachine):
        resolve_spec('A100')

    override = builtin_path('H200').read_text(encoding='utf-8').replace('sm_count = 132', 'sm_count = 100')
    (tmp_path / 'h200.spec').write_text(override, encoding='utf-8')
    assert resolve_spec('H200', spec_dir=str(tmp_path)).sm_count == 100
    assert resolve_spec('B200', spec_dir=str(tmp_path)).sm_count == 148


def test_calibration_set(specs):
    assert specs.names() == ['B200', 'H200']
    assert specs['h200'].name == 'H200'
    with pytest.raises(UnknownMachine):
        specs['gb200']
    assert 'decomp.chunk' in specs.provenance


@pytest.mark.parametrize('text,base,expected', [
    ('4GB', 1000, 4_000_000_000),
    ('32KB', 1024, 32768),
    ('32KiB', 1000, 32768),
    ('1.5TB', 1000, 1_500_000_000_000),
    ('512', 1000, 512),
])
def test_parse_size(text, base, expected):
    assert parse_size(text, base=base) == expected


def test_parse_size_rejects_garbage():
    with pytest.raises(PreconditionError):
        parse_size('lots')
