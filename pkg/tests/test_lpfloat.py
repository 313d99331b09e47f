import math

import numpy as np
import pytest

from lpfloat import (
    E2M1, E4M3, E5M2, E8M0, MXFP4, NVFP4, code_lines, decode, decode_array, encode, encode_array,
    enumerate_values, get_format, parse_vector, quant_error_stats, quantize_block,
    quantize_vector, dequantize_block, dequantize_vector, quantized_gemm, round_trip,
)
from utils.errors import (
    DegenerateSignal, InvalidCode, ParseError, PreconditionError, ShapeMismatch, UnknownFormat,
)

E2M1_GRID = [0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0]


def test_e2m1_value_set():
    values = enumerate_values('e2m1')
    assert values == sorted([-v for v in E2M1_GRID[1:]] + E2M1_GRID)
    assert len(values) == 15


@pytest.mark.parametrize('fmt,max_finite', [
    ('e2m1', 6.0),
    ('e3m2', 28.0),
    ('e2m3', 7.5),
    ('e4m3', 448.0),
    ('e5m2', 57344.0),
    ('e8m0', 2.0 ** 127),
])
def test_max_finite(fmt, max_finite):
    assert get_format(fmt).max_finite == max_finite


@pytest.mark.parametrize('x,expected', [
    (2.5, 2.0),
    (0.25, 0.0),
    (5.0, 4.0),
    (1.25, 1.0),
    (1.75, 2.0),
    (-2.9, -3.0),
])
def test_e2m1_round_to_nearest_even(x, expected):
    assert decode(E2M1, encode(E2M1, x)) == expected


def test_saturation_beyond_max():
    assert decode(E2M1, encode(E2M1, 100.0)) == 6.0
    assert decode(E2M1, encode(E2M1, -7.0)) == -6.0
    assert decode(E4M3, encode(E4M3, 1e6)) == 448.0


def test_special_values():
    assert math.isnan(decode(E4M3, 0x7F))
    assert decode(E5M2, 0x7C) == math.inf
    assert math.isnan(decode(E8M0, 0xFF))
    assert decode(E8M0, 127) == 1.0


def test_grid_values_round_trip_exactly():
    x = np.array(E2M1_GRID + [-v for v in E2M1_GRID])
    np.testing.assert_array_equal(round_trip(E2M1, x), x)


def test_invalid_codes():
    with pytest.raises(InvalidCode):
        decode(E2M1, 16)
    with pytest.raises(InvalidCode):
        decode_array(E2M1, np.array([1, 2, 99]))


def test_unsigned_scale_rejects_negatives():
    with pytest.raises(PreconditionError):
        encode_array(E8M0, np.array([-2.0]))


def test_unknown_format():
    with pytest.raises(UnknownFormat):
        get_format('fp5')
    assert get_format('fp4') is E2M1
    assert get_format('NVFP4') is NVFP4


@pytest.mark.parametrize('bf', [MXFP4, NVFP4])
def test_block_holds_grid_exactly(bf):
    v = np.resize(np.array(E2M1_GRID), bf.block_size)
    v[0] = 6.0
    block = quantize_block(bf, v)
    assert decode(bf.scale_format, block.scale_code) == 1.0
    np.testing.assert_array_equal(decode_array(bf.elem, block.codes), v)


def test_block_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        quantize_block(NVFP4, np.ones(32))


def test_scale_keeps_block_in_range(rng):
    v = rng.normal(scale=300.0, size=NVFP4.block_size)
    block = quantize_block(NVFP4, v)
    scale = decode(E4M3, block.scale_code)
    assert np.max(np.abs(v)) / scale <= E2M1.max_finite


def test_vector_padding(rng):
    v = rng.normal(size=40)
    qv = quantize_vector(MXFP4, v)
    assert qv.padding == 24
    assert qv.codes.shape == (2, 32)
    assert dequantize_vector(MXFP4, qv).shape == (40,)


def test_nvfp4_beats_mxfp4_on_gaussian(rng):
    v = rng.normal(size=4096)
    nv = quant_error_stats(NVFP4, v)
    mx = quant_error_stats(MXFP4, v)
    assert nv.mse < mx.mse
    assert nv.sqnr_db > mx.sqnr_db
    assert nv.overflow_count == 0


def test_zero_vector_is_degenerate():
    with pytest.raises(DegenerateSignal) as exc:
        quant_error_stats(MXFP4, np.zeros(32))
    assert exc.value.stats.mse == 0.0


def test_exact_quantization_has_infinite_sqnr():
    stats = quant_error_stats(E2M1, np.array(E2M1_GRID[1:]))
    assert stats.mse == 0.0
    assert stats.sqnr_db == math.inf


def test_gemm_exact_on_grid_values():
    a = np.array([[1.0, 2.0], [0.5, 6.0]])
    b = np.array([[3.0, -1.5], [4.0, 1.0]])
    np.testing.assert_array_equal(quantized_gemm(a, b, 'e2m1', accum='exact'), a @ b)
    np.testing.assert_array_equal(quantized_gemm(a, b, 'e2m1', accum='fp32'), a @ b)


def test_fp16_accumulator_stalls_at_2048():
    a = np.ones((1, 4096))
    b = np.ones((4096, 1))
    assert quantized_gemm(a, b, 'e2m1', accum='fp16')[0, 0] == 2048.0
    assert quantized_gemm(a, b, 'e2m1', accum='exact')[0, 0] == 4096.0


def test_gemm_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        quantized_gemm(np.ones((2, 3)), np.ones((2, 2)), 'e4m3')


def test_parse_vector():
    v = parse_vector('# header\n1.5\n\n-2  # trailing\n')
    np.testing.assert_array_equal(v, [1.5, -2.0])
    with pytest.raises(ParseError) as exc:
        parse_vector('1.0\nabc\n', source='v.txt')
    assert exc.value.line == 2


def test_code_lines():
    assert code_lines('e2m1', np.array([1.0, -6.0])) == ['2', 'f']
    lines = code_lines('nvfp4', np.ones(20))
    assert len(lines) == 2
    assert all(len(line.split()) == 17 for line in lines)


def test_dequantize_block_applies_scale():
    codes = np.full(NVFP4.block_size, encode(E2M1, 3.0))
    scale_code = encode(E4M3, 0.5)
    np.testing.assert_array_equal(dequantize_block(NVFP4, scale_code, codes), np.full(16, 1.5))
    with pytest.raises(ShapeMismatch):
        dequantize_block(NVFP4, scale_code, codes[:8])


SCALAR_FORMATS = ['e2m1', 'e3m2', 'e2m3', 'e4m3', 'e5m2', 'e8m0']
SIGNED_FORMATS = ['e2m1', 'e3m2', 'e2m3', 'e4m3', 'e5m2']


@pytest.mark.parametrize('name', SCALAR_FORMATS)
def test_every_finite_code_round_trips(name):
    fmt = get_format(name)
    codes = np.arange(1 << fmt.bits)
    values = decode_array(fmt, codes)
    finite = np.isfinite(values)
    np.testing.assert_array_equal(encode_array(fmt, values[finite]), codes[finite])
    if np.isnan(values).any():
        assert np.isnan(round_trip(fmt, np.array([math.nan])))[0]


def test_infinity_saturates():
    assert decode(E5M2, encode(E5M2, math.inf)) == E5M2.max_finite
    assert decode(E5M2, encode(E5M2, -math.inf)) == -E5M2.max_finite


def test_e8m0_has_255_finite_scales():
    values = enumerate_values(E8M0)
    assert len(values) == 255
    assert values[0] == 2.0 ** -127
    assert values[-1] == 2.0 ** 127


def _samples(fmt, rng):
    wide = rng.uniform(-1.5 * fmt.max_finite, 1.5 * fmt.max_finite, size=5_000)
    tiny = rng.normal(scale=4 * fmt.min_positive, size=5_000)
    return np.concatenate([wide, tiny])


@pytest.mark.parametrize('name', SIGNED_FORMATS)
def test_encode_is_monotone(name, rng):
    fmt = get_format(name)
    x = np.sort(_samples(fmt, rng))
    assert x.size >= 10_000
    assert np.all(np.diff(round_trip(fmt, x)) >= 0)


@pytest.mark.parametrize('name', SIGNED_FORMATS)
def test_encode_is_sign_symmetric(name, rng):
    fmt = get_format(name)
    x = _samples(fmt, rng)
    sign_bit = 1 << (fmt.exp_bits + fmt.man_bits)
    np.testing.assert_array_equal(encode_array(fmt, -x), encode_array(fmt, x) ^ sign_bit)


@pytest.mark.parametrize('name', SIGNED_FORMATS)
def test_scalar_requantization_is_exact(name, rng):
    fmt = get_format(name)
    once = round_trip(fmt, _samples(fmt, rng))
    np.testing.assert_array_equal(round_trip(fmt, once), once)


@pytest.mark.parametrize('bf', [MXFP4, NVFP4])
def test_block_requantization_is_exact(bf, rng):
    for _ in range(50):
        first = quantize_block(bf, rng.normal(size=bf.block_size))
        values = dequantize_block(bf, first.scale_code, first.codes)
        second = quantize_block(bf, values)
        np.testing.assert_array_equal(dequantize_block(bf, second.scale_code, second.codes), values)


def test_mxfp4_scale_is_smallest_power_of_two():
    v = np.zeros(MXFP4.block_size)
    v[0] = 96.0
    block = quantize_block(MXFP4, v)
    assert decode(E8M0, block.scale_code) == 16.0
    assert decode(E2M1, block.codes[0]) == 6.0
    assert not decode_array(E2M1, block.codes[1:]).any()


def test_nvfp4_scale_moves_up_instead_of_clipping():
    v = np.zeros(NVFP4.block_size)
    v[0] = 6.36
    # 6.36 / 6 = 1.06 rounds to the e4m3 scale 1.0, which would clip 6.36
    assert decode(E4M3, encode(E4M3, 6.36 / 6)) == 1.0
    block = quantize_block(NVFP4, v)
    assert decode(E4M3, block.scale_code) == 1.125
    assert 6.36 / 1.125 <= E2M1.max_finite


def test_e4m3_beats_e2m1_on_gaussian(rng):
    v = rng.normal(size=4096)
    assert quant_error_stats(E4M3, v).sqnr_db > quant_error_stats(E2M1, v).sqnr_db


def _grid_matrix(rng, shape):
    grid = np.array(E2M1_GRID)
    return rng.choice(grid, size=shape) * rng.choice([-1.0, 1.0], size=shape)


@pytest.mark.parametrize('fmt', ['e2m1', 'mxfp4'])
def test_gemm_identity(fmt, rng):
    b = _grid_matrix(rng, (4, 5))
    np.testing.assert_array_equal(quantized_gemm(np.eye(4), b, fmt, accum='exact'), b)


def test_mxfp4_gemm_matches_brute_force():
    a = np.array([[1.0, -0.5, 2.0, 0.0],
                  [6.0, 3.0, -1.5, 0.5],
                  [-4.0, 1.0, 1.0, 1.0],
                  [0.5, 0.5, -0.5, 6.0]])
    b = np.array([[2.0, 0.0, -1.0, 3.0],
                  [1.5, -6.0, 0.5, 1.0],
                  [0.0, 4.0, 2.0, -0.5],
                  [-3.0, 1.0, 1.5, 6.0]])
    expected = np.array([[sum(a[i, t] * b[t, j] for t in range(4)) for j in range(4)]
                         for i in range(4)])
    np.testing.assert_array_equal(quantized_gemm(a, b, 'mxfp4', accum='exact'), expected)
    np.testing.assert_array_equal(quantized_gemm(a, b, 'mxfp4', accum='fp32'), expected)


def test_fp16_accumulation_error_is_bounded(rng):
    k = 64
    a = rng.normal(size=(64, k))
    b = rng.normal(size=(k, 64))
    d16 = quantized_gemm(a, b, 'e4m3', accum='fp16').astype(np.float64)
    d32 = quantized_gemm(a, b, 'e4m3', accum='fp32').astype(np.float64)
    qa = round_trip(E4M3, a)
    qb = round_trip(E4M3, b)
    magnitude = np.abs(qa) @ np.abs(qb)
    ulp16 = np.spacing(magnitude.astype(np.float16)).astype(np.float64)
    assert np.all(np.abs(d16 - d32) <= 2 * k * ulp16)
    assert np.any(d16 != d32)


@pytest.mark.parametrize('text', ['1.0\nnan\n', '1.0\ninf\n', '1.0\n-Infinity\n'])
def test_parse_vector_rejects_non_finite(text):
    with pytest.raises(ParseError) as exc:
        parse_vector(text, source='v.txt')
    assert exc.value.line == 2
