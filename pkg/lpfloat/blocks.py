"""Block-scaled formats (one shared scale per ``block_size`` elements)."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from utils.errors import DegenerateSignal, PreconditionError, ShapeMismatch
from .formats import E2M1, E4M3, E8M0, FloatFormat, decode, decode_array, encode, encode_array, get_format


@dataclass(frozen=True)
class BlockFormat:
    name: str
    elem: FloatFormat
    block_size: int
    scale_format: FloatFormat

    def __post_init__(self):
        if self.block_size <= 0:
            raise PreconditionError('block_size must be positive')

    def __str__(self):
        return self.name


MXFP4 = BlockFormat('mxfp4', E2M1, 32, E8M0)
NVFP4 = BlockFormat('nvfp4', E2M1, 16, E4M3)

BLOCK_FORMATS = {bf.name: bf for bf in (MXFP4, NVFP4)}


@dataclass(frozen=True)
class QuantizedBlock:
    scale_code: int
    codes: np.ndarray


@dataclass(frozen=True)
class QuantizedVector:
    scale_codes: np.ndarray
    codes: np.ndarray
    padding: int


@dataclass(frozen=True)
class QuantStats:
    mse: float
    max_abs_err: float
    sqnr_db: float
    overflow_count: int
    padding: int = 0

    def to_dict(self):
        return {
            'mse': self.mse,
            'max_abs_err': self.max_abs_err,
            'sqnr_db': self.sqnr_db,
            'overflow_count': self.overflow_count,
            'padding': self.padding,
        }


def _pow2_scale_code(bf, amax):
    elem_max = bf.elem.max_finite
    exponent = math.ceil(math.log2(amax / elem_max))
    # log2 can land one off near exact powers of two
    while amax / 2.0 ** exponent > elem_max:
        exponent += 1
    while amax / 2.0 ** (exponent - 1) <= elem_max:
        exponent -= 1
    exponent = max(-bf.scale_format.bias, min(exponent, bf.scale_format.bias))
    return encode(bf.scale_format, 2.0 ** exponent)


def _float_scale_code(bf, amax):
    """``encode(scale_format, amax / elem_max)``, moved up while it would saturate.

    Round-to-nearest can land the scale just below ``amax / elem_max``; the
    next larger scale code is taken until ``amax / scale <= elem_max`` so the
    largest element never clips.
    """
    elem_max = bf.elem.max_finite
    code = encode(bf.scale_format, amax / elem_max)
    _, codes = bf.scale_format.positive_codes
    position = int(np.flatnonzero(codes == code)[0])
    # rounding the scale down would push max|v| past the element range
    while position + 1 < codes.size:
        scale = decode(bf.scale_format, code)
        if scale > 0 and amax / scale <= elem_max:
            break
        position += 1
        code = int(codes[position])
    return code


def choose_scale(bf, block):
    amax = float(np.max(np.abs(block))) if block.size else 0.0
    if amax == 0.0:
        return encode(bf.scale_format, 1.0)
    if bf.scale_format.man_bits == 0:
        return _pow2_scale_code(bf, amax)
    return _float_scale_code(bf, amax)


def quantize_block(bf, v):
    bf = get_format(bf)
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (bf.block_size,):
        raise ShapeMismatch(f'{bf.name} blocks hold {bf.block_size} values, got shape {v.shape}')
    scale_code = choose_scale(bf, v)
    scale = decode(bf.scale_format, scale_code)
    return QuantizedBlock(scale_code, encode_array(bf.elem, v / scale))


def dequantize_block(bf, scale_code, codes):
    bf = get_format(bf)
    codes = np.asarray(codes)
    if codes.shape != (bf.block_size,):
        raise ShapeMismatch(f'{bf.name} blocks hold {bf.block_size} codes, got shape {codes.shape}')
    return decode_array(bf.elem, codes) * decode(bf.scale_format, scale_code)


def quantize_vector(bf, v):
    """Quantize any-length vector; the final block is zero-padded"""
    bf = get_format(bf)
    v = np.asarray(v, dtype=np.float64).ravel()
    padding = (-v.size) % bf.block_size
    blocks = np.concatenate([v, np.zeros(padding)]).reshape(-1, bf.block_size)
    quantized = [quantize_block(bf, block) for block in blocks]
    return QuantizedVector(
        scale_codes=np.array([q.scale_code for q in quantized], dtype=np.int64),
        codes=np.array([q.codes for q in quantized], dtype=np.int64).reshape(-1, bf.block_size),
        padding=padding,
    )


def dequantize_vector(bf, qv):
    bf = get_format(bf)
    scales = decode_array(bf.scale_format, qv.scale_codes)
    values = (decode_array(bf.elem, qv.codes) * scales[:, None]).ravel()
    return values[:values.size - qv.padding]


def fake_quantize(fmt, v):
    """Quantize then dequantize, returning (values, overflow_count, padding)"""
    fmt = get_format(fmt)
    v = np.asarray(v, dtype=np.float64)
    if isinstance(fmt, BlockFormat):
        qv = quantize_vector(fmt, v.ravel())
        scales = decode_array(fmt.scale_format, qv.scale_codes)
        padded = np.concatenate([v.ravel(), np.zeros(qv.padding)]).reshape(-1, fmt.block_size)
        overflow = int(np.count_nonzero(np.abs(padded / scales[:, None]) > fmt.elem.max_finite))
        return dequantize_vector(fmt, qv).reshape(v.shape), overflow, qv.padding
    overflow = int(np.count_nonzero(np.abs(v) > fmt.max_finite))
    return decode_array(fmt, encode_array(fmt, v)), overflow, 0


def quant_error_stats(fmt, v):
    v = np.asarray(v, dtype=np.float64).ravel()
    if v.size == 0:
        raise PreconditionError('cannot compute quantization stats of an empty vector')
    q, overflow, padding = fake_quantize(fmt, v)
    err = q - v
    err_power = float(np.sum(err ** 2))
    signal_power = float(np.sum(v ** 2))
    mse = err_power / v.size
    max_abs = float(np.max(np.abs(err)))
    if signal_power == 0.0:
        raise DegenerateSignal(QuantStats(mse, max_abs, float('nan'), overflow, padding))
    sqnr = float('inf') if err_power == 0.0 else 10.0 * math.log10(signal_power / err_power)
    return QuantStats(mse, max_abs, sqnr, overflow, padding)
