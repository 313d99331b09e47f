from __future__ import annotations

import logging
import math

import numpy as np

from utils.errors import PreconditionError, ShapeMismatch
from .blocks import BlockFormat, fake_quantize
from .formats import get_format

logger = logging.getLogger(__name__)

ACCUMULATORS = {
    'fp16': np.float16,
    'fp32': np.float32,
    'exact': np.float64,
    'int32': np.float64,
}


def quantize_operand(fmt, matrix, axis):
    """Quantize ``matrix`` with blocks running along ``axis``"""
    fmt = get_format(fmt)
    if not isinstance(fmt, BlockFormat):
        return fake_quantize(fmt, matrix)[0]
    lanes = np.moveaxis(matrix, axis, -1)
    rows = [fake_quantize(fmt, lane)[0] for lane in lanes.reshape(-1, lanes.shape[-1])]
    return np.moveaxis(np.array(rows).reshape(lanes.shape), -1, axis)


def quantized_gemm(a, b, fmt, accum='fp32'):
    """D = A x B with both operands quantized along k.

    fp16/fp32 accumulation rounds the running sum after every k step;
    ``exact`` (alias ``int32``) sums the exact products with ``math.fsum``.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeMismatch(f'cannot multiply {a.shape} by {b.shape}')
    if accum not in ACCUMULATORS:
        raise PreconditionError(f'accumulator must be one of {", ".join(ACCUMULATORS)}')

    qa = quantize_operand(fmt, a, axis=1)
    qb = quantize_operand(fmt, b, axis=0)
    m, k = qa.shape
    n = qb.shape[1]
    logger.debug('quantized gemm %dx%dx%d fmt=%s accum=%s', m, n, k, fmt, accum)

    if accum in ('exact', 'int32'):
        out = np.empty((m, n), dtype=np.float64)
        for i in range(m):
            for j in range(n):
                out[i, j] = math.fsum(qa[i, :] * qb[:, j])
        return out

    dtype = ACCUMULATORS[accum]
    acc = np.zeros((m, n), dtype=dtype)
    for t in range(k):
        # products of micro-float values are exact in float64
        acc = (acc.astype(np.float64) + np.outer(qa[:, t], qb[t, :])).astype(dtype)
    return acc
