"""Micro floating-point encodings.

Every format is decoded by building a table over all of its codes once; encoding
is a round-to-nearest-even search in the sorted table of non-negative finite
values.  Values beyond the largest finite value saturate.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from utils.errors import InvalidCode, PreconditionError, UnknownFormat

SPECIALS = ('none', 'single_nan', 'ieee', 'scale_nan')


@dataclass(frozen=True)
class FloatFormat:
    name: str
    exp_bits: int
    man_bits: int
    bias: Optional[int] = None
    sign_bits: int = 1
    specials: str = 'none'

    def __post_init__(self):
        if self.specials not in SPECIALS:
            raise PreconditionError(f'unknown special-value policy {self.specials!r}')
        if self.bias is None:
            object.__setattr__(self, 'bias', 2 ** (self.exp_bits - 1) - 1)

    @property
    def bits(self):
        return self.sign_bits + self.exp_bits + self.man_bits

    @property
    def finite_only(self):
        return self.specials == 'none'

    @property
    def has_subnormals(self):
        return self.specials != 'scale_nan'

    @property
    def max_finite(self):
        return float(_positive_table(self)[0][-1])

    @property
    def min_positive(self):
        values = _positive_table(self)[0]
        return float(values[values > 0][0])

    @property
    def positive_codes(self):
        """(values, codes) of the non-negative finite encodings, ascending"""
        return _positive_table(self)

    def __str__(self):
        return self.name


E2M1 = FloatFormat('e2m1', 2, 1)
E3M2 = FloatFormat('e3m2', 3, 2)
E2M3 = FloatFormat('e2m3', 2, 3)
E4M3 = FloatFormat('e4m3', 4, 3, specials='single_nan')
E5M2 = FloatFormat('e5m2', 5, 2, specials='ieee')
E8M0 = FloatFormat('e8m0', 8, 0, sign_bits=0, specials='scale_nan')

FORMATS = {f.name: f for f in (E2M1, E3M2, E2M3, E4M3, E5M2, E8M0)}
ALIASES = {'fp4': 'e2m1', 'fp8': 'e4m3'}


def _decode_scalar(fmt, code):
    e, m = fmt.exp_bits, fmt.man_bits
    sign = (code >> (e + m)) & 1 if fmt.sign_bits else 0
    exp = (code >> m) & ((1 << e) - 1)
    man = code & ((1 << m) - 1)
    exp_max = (1 << e) - 1
    if fmt.specials == 'scale_nan':
        return float('nan') if exp == exp_max else 2.0 ** (exp - fmt.bias)
    if fmt.specials == 'ieee' and exp == exp_max:
        value = float('inf') if man == 0 else float('nan')
    elif fmt.specials == 'single_nan' and exp == exp_max and man == (1 << m) - 1:
        value = float('nan')
    elif exp == 0:
        value = (man / (1 << m)) * 2.0 ** (1 - fmt.bias)
    else:
        value = (1.0 + man / (1 << m)) * 2.0 ** (exp - fmt.bias)
    return -value if sign else value


@lru_cache(maxsize=None)
def _code_table(fmt):
    table = np.array([_decode_scalar(fmt, c) for c in range(1 << fmt.bits)], dtype=np.float64)
    table.setflags(write=False)
    return table


@lru_cache(maxsize=None)
def _positive_table(fmt):
    table = _code_table(fmt)
    codes = np.arange(table.size)
    sign_bit = 1 << (fmt.exp_bits + fmt.man_bits)
    keep = np.isfinite(table) & (table >= 0)
    if fmt.sign_bits:
        keep &= (codes & sign_bit) == 0
    values, codes = table[keep], codes[keep]
    order = np.argsort(values, kind='stable')
    values, codes = values[order], codes[order]
    values.setflags(write=False)
    codes.setflags(write=False)
    return values, codes


def _nan_code(fmt):
    table = _code_table(fmt)
    nan_codes = np.flatnonzero(np.isnan(table))
    return int(nan_codes[-1]) if nan_codes.size else None


def get_format(name):
    """Look up a scalar or block format by name"""
    if not isinstance(name, str):
        return name
    key = ALIASES.get(name.lower(), name.lower())
    if key in FORMATS:
        return FORMATS[key]
    from .blocks import BLOCK_FORMATS
    if key in BLOCK_FORMATS:
        return BLOCK_FORMATS[key]
    raise UnknownFormat(f'unknown number format {name!r}')


def enumerate_values(fmt):
    """Sorted distinct finite values; +0 and -0 collapse to one 0"""
    table = _code_table(get_format(fmt))
    values = np.unique(table[np.isfinite(table)]) + 0.0
    return [float(v) for v in values]


def encode_array(fmt, x):
    """Round-to-nearest-even encode of an array; saturates beyond max"""
    fmt = get_format(fmt)
    x = np.asarray(x, dtype=np.float64)
    values, codes = _positive_table(fmt)

    nan = np.isnan(x)
    if nan.any():
        nan_code = _nan_code(fmt)
        if nan_code is None:
            raise PreconditionError(f'{fmt.name} cannot encode NaN')
    negative = np.signbit(x) & ~nan
    if not fmt.sign_bits and np.any(negative & (x != 0)):
        raise PreconditionError(f'{fmt.name} is unsigned; cannot encode negative values')

    mag = np.where(nan, 0.0, np.abs(x))
    idx = np.clip(np.searchsorted(values, mag, side='left'), 1, values.size - 1)
    lo, hi = values[idx - 1], values[idx]
    d_lo, d_hi = mag - lo, hi - mag
    take_hi = (d_hi < d_lo) | ((d_hi == d_lo) & (codes[idx] % 2 == 0))
    out = np.where(take_hi, codes[idx], codes[idx - 1]).astype(np.int64)

    if fmt.sign_bits:
        out = np.where(negative, out | (1 << (fmt.exp_bits + fmt.man_bits)), out)
    if nan.any():
        out = np.where(nan, nan_code, out)
    return out


def decode_array(fmt, codes):
    fmt = get_format(fmt)
    codes = np.asarray(codes)
    if codes.size and (codes.min() < 0 or codes.max() >= (1 << fmt.bits)):
        raise InvalidCode(f'code out of range for {fmt.bits}-bit {fmt.name}')
    return _code_table(fmt)[codes.astype(np.int64)]


def encode(fmt, x):
    return int(encode_array(fmt, np.array([x]))[0])


def decode(fmt, code):
    fmt = get_format(fmt)
    if isinstance(code, bool) or int(code) != code or not 0 <= int(code) < (1 << fmt.bits):
        raise InvalidCode(f'code {code!r} is not a {fmt.bits}-bit {fmt.name} code')
    return float(_code_table(fmt)[int(code)])


def round_trip(fmt, x):
    """decode(encode(x)) for an array"""
    return decode_array(fmt, encode_array(fmt, x))
