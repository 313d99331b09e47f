"""Immutable machine-description types.

Memory and TMEM bandwidths are bytes/s, capacities are bytes.  Decompression
Engine rates keep the GB/s unit their field names carry.  Percentages from
calibration files are stored as fractions.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping, Optional, Tuple

from utils.errors import MissingCalibration

KIB = 1024
GB = 1e9
TB = 1e12

PRECISIONS = ('fp64', 'fp32', 'tf32', 'bf16', 'fp16', 'fp8', 'fp6', 'fp4', 'int8', 'int4')
INTEGER_PRECISIONS = ('int8', 'int4', 'int32')
ISAS = ('tcgen05', 'wgmma')

_TILE_RE = re.compile(r'^m(\d+)n(\d+)k(\d+)$')


def parse_tile(shape):
    """'m64n256k16' -> (64, 256, 16)"""
    match = _TILE_RE.match(shape)
    if not match:
        raise ValueError(f'bad tile shape {shape!r}')
    return tuple(int(g) for g in match.groups())


def tile_name(m, n, k):
    return f'm{m}n{n}k{k}'


def throughput_unit(precision):
    return 'TOPS' if precision in INTEGER_PRECISIONS else 'TFLOPS'


@dataclass(frozen=True)
class PeakEntry:
    throughput: float
    unit: str = 'TFLOPS'
    pct_of_peak: Optional[float] = None

    @property
    def theoretical_peak(self):
        if self.pct_of_peak is None:
            return self.throughput
        return self.throughput / self.pct_of_peak


@dataclass(frozen=True)
class InstrEntry:
    in_prec: str
    accum_prec: str
    shape: str
    latency_cycles: float
    throughput: float
    unit: str = 'TFLOPS'


@dataclass(frozen=True)
class TensorLatency:
    tiles: Mapping[Tuple[str, str], float] = field(default_factory=dict)
    wgmma_base_cycles: Optional[float] = None
    wgmma_n_block: Optional[int] = None
    scheduler_stall_reduction_pct: Optional[Tuple[float, float]] = None

    def calibrated(self, isa):
        return {shape: cycles for (kind, shape), cycles in self.tiles.items() if kind == isa}


@dataclass(frozen=True)
class MemoryParams:
    hbm_capacity: float
    hbm_peak_bw: float
    global_miss_latency: Optional[float] = None
    l2_hit_rate_pct: Optional[Tuple[float, float]] = None
    optimal_tile_dim: Optional[int] = None


@dataclass(frozen=True)
class StreamEff:
    small_fraction: float
    large_fraction: float
    threshold_bytes: float


@dataclass(frozen=True)
class DgemmPoint:
    dim: int
    tflops: float
    fraction: float


@dataclass(frozen=True)
class TmemParams:
    capacity: int
    lanes: int
    columns: int
    cell_bits: int
    read_bw: float
    write_bw: float
    miss_latency: float
    baseline_miss_latency: float
    sustained_mma_bw: float
    global_path_bw: float


@dataclass(frozen=True)
class DeFormatProfile:
    name: str
    output_gbps: float
    latency_ms: float
    compression_ratio: Optional[float] = None
    input_gbps: Optional[float] = None
    use_case: str = ''

    def require_input(self):
        if self.input_gbps is None:
            raise MissingCalibration(f'{self.name}: input throughput not calibrated (N/A)')
        return self.input_gbps

    def require_ratio(self):
        if self.compression_ratio is None:
            raise MissingCalibration(f'{self.name}: compression ratio not calibrated (N/A)')
        return self.compression_ratio


@dataclass(frozen=True)
class ChunkProfile:
    chunk_bytes: int
    single_rate_gbps: float
    pipeline_depth: int
    saturation_batch: int
    peak_gbps: float
    max_speedup: float


@dataclass(frozen=True)
class PatternProfile:
    name: str
    compression_ratio: float
    output_gbps: float
    input_gbps: Optional[float] = None
    latency_ms: Optional[float] = None


@dataclass(frozen=True)
class DeParams:
    format_profiles: Mapping[str, DeFormatProfile] = field(default_factory=dict)
    chunk_profiles: Mapping[int, ChunkProfile] = field(default_factory=dict)
    patterns: Mapping[str, PatternProfile] = field(default_factory=dict)
    output_ceiling: Tuple[float, float] = (160.0, 220.0)
    nominal_ceiling_gbps: float = 200.0
    efficiency_threshold: float = 0.85
    saturation_margin: float = 0.05
    latency_overhead_ms: float = 0.02


@dataclass(frozen=True)
class LlmCell:
    model: str
    precision: str
    batch: int
    seq_len: int
    tokens_per_s: float
    bw_pct: Optional[float] = None
    perplexity: Optional[float] = None
    delta_ppl_pct: Optional[float] = None


@dataclass(frozen=True)
class LlmLatency:
    model: str
    precision: str
    seq_len: int
    points: Tuple[Tuple[int, float], ...]
    pipeline_stages: Optional[Tuple[float, float]] = None
    p99_median_ratio: Optional[Tuple[float, float]] = None


@dataclass(frozen=True)
class TrainingCell:
    model: str
    batch: int
    throughput: float
    unit: str
    time_to_accuracy_hrs: Optional[float] = None
    per_watt: Optional[float] = None


@dataclass(frozen=True)
class SpmvCell:
    matrix: str
    gflops: float
    sparsity_pct: Optional[float] = None
    speedup: Optional[float] = None
    time_ms: Optional[float] = None


@dataclass(frozen=True)
class Decomposition:
    kind: str
    factors: Tuple[float, ...]
    labels: Tuple[str, ...]
    measured: Tuple[float, float]


@dataclass(frozen=True)
class GpuSpec:
    name: str
    sm_count: int
    isa: str
    memory: MemoryParams
    peaks: Mapping[str, PeakEntry]
    generation: str = ''
    transistors: Optional[float] = None
    dies: Optional[int] = None
    unsupported: Tuple[str, ...] = ()
    latency: Optional[TensorLatency] = None
    instr: Mapping[Tuple[str, str], InstrEntry] = field(default_factory=dict)
    stream: Optional[StreamEff] = None
    dgemm: Tuple[DgemmPoint, ...] = ()
    tmem: Optional[TmemParams] = None
    de: Optional[DeParams] = None
    llm: Mapping[Tuple[str, str], LlmCell] = field(default_factory=dict)
    llm_latency: Optional[LlmLatency] = None
    training: Mapping[Tuple[str, int], TrainingCell] = field(default_factory=dict)
    spmv: Mapping[str, SpmvCell] = field(default_factory=dict)
    attention_block_us: Optional[float] = None
    decompositions: Mapping[str, Decomposition] = field(default_factory=dict)

    @property
    def hbm_capacity(self):
        return self.memory.hbm_capacity

    @property
    def hbm_peak_bw(self):
        return self.memory.hbm_peak_bw

    @property
    def dgemm_eff_points(self):
        return tuple((p.dim, p.fraction) for p in self.dgemm)

    @property
    def power(self):
        """Board power implied by the training cells (throughput / per-watt), averaged"""
        implied = [c.throughput / c.per_watt for c in self.training.values() if c.per_watt]
        return {'board_power_watts': sum(implied) / len(implied) if implied else None}

    def is_new_precision(self, precision):
        return precision in self.unsupported

    def peak(self, precision):
        """Peak entry for ``precision`` or MissingCalibration"""
        precision = precision.lower()
        if precision in self.peaks:
            return self.peaks[precision]
        if self.is_new_precision(precision):
            raise MissingCalibration(f'{precision}: new-in-Blackwell')
        raise MissingCalibration(f'{precision}: no peak calibration for {self.name}')
