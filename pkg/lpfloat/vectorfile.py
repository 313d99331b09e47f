import math

import numpy as np

from utils.errors import ParseError
from .blocks import BlockFormat, quantize_vector
from .formats import encode_array, get_format


def parse_vector(text, source=None):
    """One decimal per line; blank lines and ``#`` comments are skipped"""
    values = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.split('#', 1)[0].strip()
        if not stripped:
            continue
        try:
            value = float(stripped)
        except ValueError:
            raise ParseError(f'not a number: {stripped!r}', line_no, 1, source) from None
        if not math.isfinite(value):
            raise ParseError(f'not a finite value: {stripped!r}', line_no, 1, source)
        values.append(value)
    if not values:
        raise ParseError('vector file holds no values', source=source)
    return np.array(values, dtype=np.float64)


def load_vector(path):
    with open(path, encoding='utf-8') as fh:
        return parse_vector(fh.read(), source=str(path))


def _hex(code, bits):
    return f'{int(code):0{(bits + 3) // 4}x}'


def code_lines(fmt, v):
    """Hex codes: one line per block (scale first) or one line per element"""
    fmt = get_format(fmt)
    if isinstance(fmt, BlockFormat):
        qv = quantize_vector(fmt, v)
        lines = []
        for scale, codes in zip(qv.scale_codes, qv.codes):
            elems = ' '.join(_hex(c, fmt.elem.bits) for c in codes)
            lines.append(f'{_hex(scale, fmt.scale_format.bits)} {elems}')
        return lines
    return [_hex(c, fmt.bits) for c in encode_array(fmt, v)]
