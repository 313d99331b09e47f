from __future__ import annotations

import math
from dataclasses import dataclass

from models import Prediction
from utils.errors import MissingCalibration, NoTmem, PreconditionError, TmemOverflow
from calibration.spec_types import TB

TIERS = ('tmem_miss', 'baseline_global_miss')
PATHS = ('tmem_mma', 'global_load')

SMALL_TILE_EFFICIENCY = 0.45
RAMP_START_EFFICIENCY = 0.80
LARGE_TILE_EFFICIENCY = 0.70
TILE_CURVE_DIMS = (16, 32, 48, 64, 96, 128, 256)

POWER_SMALL_DIM, POWER_SMALL_DELTA = 256, 0.04
POWER_LARGE_DIM, POWER_LARGE_DELTA = 2048, -0.15

TRIAD_BYTES_PER_ELEMENT = 24
ESTIMATED_SAVINGS_NOTE = 'an estimated 12 TB/s of data movement avoided at full SM utilization'

DEFAULT_LANES, DEFAULT_COLUMNS, DEFAULT_CELL_BITS = 128, 512, 32


@dataclass(frozen=True)
class TilePoint:
    dim: int
    efficiency: float


@dataclass(frozen=True)
class TrafficReport:
    bytes_moved: int
    bytes_saved_vs_baseline: int
    saved_rate_at_full_sm: float
    notes: tuple = ()

    def to_dict(self):
        return {
            'bytes_moved': self.bytes_moved,
            'bytes_saved_vs_baseline': self.bytes_saved_vs_baseline,
            'saved_rate_at_full_sm': self.saved_rate_at_full_sm,
            'notes': list(self.notes),
        }


@dataclass(frozen=True)
class TmemLayout:
    fits: bool
    bytes: int


def _tmem(spec):
    if spec.tmem is None:
        raise NoTmem(f'{spec.name} has no Tensor Memory')
    return spec.tmem


def access_latency(spec, tier):
    if tier not in TIERS:
        raise PreconditionError(f'tier must be one of {", ".join(TIERS)}')
    if tier == 'tmem_miss':
        return _tmem(spec).miss_latency
    if spec.tmem is not None:
        return spec.tmem.baseline_miss_latency
    if spec.memory.global_miss_latency is None:
        raise MissingCalibration(f'{spec.name} has no global miss latency')
    return spec.memory.global_miss_latency


def latency_reduction(spec):
    return 1.0 - access_latency(spec, 'tmem_miss') / access_latency(spec, 'baseline_global_miss')


def tile_efficiency(tile_m, tile_n):
    """Fraction of peak TMEM bandwidth reached by a tile; plateau at 64..128"""
    if tile_m < 1 or tile_n < 1:
        raise PreconditionError('tile dimensions must be >= 1')
    e = min(tile_m, tile_n)
    if e < 32:
        return SMALL_TILE_EFFICIENCY
    if e < 64:
        return RAMP_START_EFFICIENCY + (1.0 - RAMP_START_EFFICIENCY) * math.log2(e / 32)
    if e <= 128:
        return 1.0
    return LARGE_TILE_EFFICIENCY


def tile_curve(dims=TILE_CURVE_DIMS):
    """Efficiency of square tiles, one point per side length"""
    return [TilePoint(d, tile_efficiency(d, d)) for d in dims]


def operand_path_bw(spec, path):
    if path not in PATHS:
        raise PreconditionError(f'path must be one of {", ".join(PATHS)}')
    tmem = _tmem(spec)
    return tmem.sustained_mma_bw if path == 'tmem_mma' else tmem.global_path_bw


def operand_path_ratio(spec):
    return operand_path_bw(spec, 'tmem_mma') / operand_path_bw(spec, 'global_load')


def chained_gemm_traffic(spec, m, n, k, elem_bytes, intermediate_resident):
    """Traffic of (A x B) x C; a resident intermediate never leaves TMEM"""
    if min(m, n, k, elem_bytes) <= 0:
        raise PreconditionError('dimensions and element size must be positive')
    intermediate = m * n * elem_bytes
    if intermediate_resident:
        tmem = _tmem(spec)
        if intermediate > tmem.capacity:
            raise TmemOverflow(
                f'intermediate tile of {intermediate} bytes exceeds TMEM capacity {tmem.capacity}')
    operands = (m * k + k * n + n * n + m * n) * elem_bytes
    saved = 2 * intermediate if intermediate_resident else 0
    moved = operands if intermediate_resident else operands + 2 * intermediate
    rate = 0.0
    notes = ()
    if spec.tmem is not None:
        rate = spec.tmem.sustained_mma_bw * saved / moved
        notes = (ESTIMATED_SAVINGS_NOTE,)
    return TrafficReport(moved, saved, rate, notes)


def stream_triad(spec, array_bytes, baseline=None):
    """Triad bandwidth: two efficiency levels split at the working-set threshold"""
    if array_bytes <= 0:
        raise PreconditionError('array_bytes must be positive')
    if spec.stream is None:
        raise MissingCalibration(f'{spec.name} has no STREAM calibration')
    working_set = 3 * array_bytes
    small = working_set < spec.stream.threshold_bytes
    efficiency = spec.stream.small_fraction if small else spec.stream.large_fraction
    bandwidth = efficiency * spec.hbm_peak_bw
    base_value = None
    if baseline is not None:
        base_value = stream_triad(baseline, array_bytes).value
    return Prediction(
        metric='stream_triad',
        value=bandwidth / TB,
        unit='TB/s',
        bottleneck='memory_bw',
        baseline=base_value,
        extras={
            'efficiency': efficiency,
            'working_set_bytes': working_set,
            'regime': 'small' if small else 'large',
            'elements': array_bytes // 8,
            'time_s': (array_bytes // 8) * TRIAD_BYTES_PER_ELEMENT / bandwidth,
        },
    )


def tmem_power_delta(matrix_dim):
    """Board-power change from TMEM use, interpolated in log2 of matrix size"""
    if matrix_dim < 1:
        raise PreconditionError('matrix_dim must be >= 1')
    if matrix_dim >= POWER_LARGE_DIM:
        return POWER_LARGE_DELTA
    if matrix_dim <= POWER_SMALL_DIM:
        return POWER_SMALL_DELTA
    t = (math.log2(matrix_dim) - math.log2(POWER_SMALL_DIM)) / (
        math.log2(POWER_LARGE_DIM) - math.log2(POWER_SMALL_DIM))
    return POWER_SMALL_DELTA + t * (POWER_LARGE_DELTA - POWER_SMALL_DELTA)


def tmem_layout(rows, cols, cell_bits, tmem=None):
    if rows < 1 or cols < 1:
        raise PreconditionError('rows and cols must be >= 1')
    lanes = tmem.lanes if tmem else DEFAULT_LANES
    columns = tmem.columns if tmem else DEFAULT_COLUMNS
    cell = tmem.cell_bits if tmem else DEFAULT_CELL_BITS
    fits = rows <= lanes and cols <= columns and cell_bits == cell
    return TmemLayout(fits, rows * cols * cell_bits // 8)
