from .formats import (
    FloatFormat,
    E2M1,
    E3M2,
    E2M3,
    E4M3,
    E5M2,
    E8M0,
    FORMATS,
    get_format,
    enumerate_values,
    encode,
    decode,
    encode_array,
    decode_array,
    round_trip
)
from .blocks import (
    BlockFormat,
    MXFP4,
    NVFP4,
    BLOCK_FORMATS,
    QuantizedBlock,
    QuantizedVector,
    QuantStats,
    quantize_block,
    dequantize_block,
    quantize_vector,
    dequantize_vector,
    fake_quantize,
    quant_error_stats
)
from .gemm import quantized_gemm, quantize_operand
from .vectorfile import parse_vector, load_vector, code_lines

__all__ = [
    'FloatFormat', 'E2M1', 'E3M2', 'E2M3', 'E4M3', 'E5M2', 'E8M0', 'FORMATS',
    'get_format', 'enumerate_values', 'encode', 'decode', 'encode_array', 'decode_array',
    'round_trip', 'BlockFormat', 'MXFP4', 'NVFP4', 'BLOCK_FORMATS', 'QuantizedBlock',
    'QuantizedVector', 'QuantStats', 'quantize_block', 'dequantize_block',
    'quantize_vector', 'dequantize_vector', 'fake_quantize', 'quant_error_stats',
    'quantized_gemm', 'quantize_operand', 'parse_vector', 'load_vector', 'code_lines',
]
