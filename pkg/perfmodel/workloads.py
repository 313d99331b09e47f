"""Workload estimators built on the calibration tables and the sub-models."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.interpolate import PchipInterpolator

from calibration.spec_types import GB
from models import Prediction
from utils.errors import MissingCalibration, PreconditionError

from .memsys import stream_triad

logger = logging.getLogger(__name__)

DGEMM_RAMP_DIM = 1024
DEFAULT_INDEX_COMPRESSION = 8.2
DECOMPOSITION_KINDS = ('inference', 'training')
SUMMARY_STREAM_BYTES = 128 * GB
SUMMARY_DGEMM_DIM = 32768


@dataclass(frozen=True)
class AffineFit:
    intercept_ms: float
    slope_ms: float
    max_rel_residual: float


@dataclass(frozen=True)
class SpmvTraffic:
    baseline_bytes: float
    compressed_bytes: float
    reduction: float

    def to_dict(self):
        return dict(self.__dict__)


@dataclass(frozen=True)
class DecompositionResult:
    kind: str
    factors: Tuple[float, ...]
    labels: Tuple[str, ...]
    product: float
    measured_range: Tuple[float, float]
    consistent: bool

    def to_dict(self):
        return {
            'kind': self.kind,
            'factors': list(self.factors),
            'labels': list(self.labels),
            'product': self.product,
            'measured_range': list(self.measured_range),
            'consistent': self.consistent,
        }


@dataclass(frozen=True)
class SummaryRow:
    workload: str
    metric: str
    b200: Optional[float]
    h200: Optional[float]
    improvement: Optional[float]
    improvement_basis: str
    key_feature: str

    def to_dict(self):
        return dict(self.__dict__)


def _baseline_value(baseline, fn, notes):
    """Value of ``fn(baseline)`` or None with the reason appended to ``notes``"""
    if baseline is None:
        return None
    try:
        return fn(baseline)
    except MissingCalibration as e:
        notes.append(f'{baseline.name}: {e.message}')
        return None


# DGEMM

def dgemm_efficiency(spec, n):
    """Fraction of FP64 peak at square size ``n`` and whether it is extrapolated"""
    if n < 1:
        raise PreconditionError('n must be >= 1')
    points = sorted(spec.dgemm_eff_points)
    if not points:
        raise MissingCalibration(f'{spec.name} has no DGEMM calibration')
    dims = [d for d, _ in points]
    fracs = [f for _, f in points]
    smallest, largest = dims[0], dims[-1]
    if n < smallest:
        ramp = n / (n + DGEMM_RAMP_DIM) * (smallest + DGEMM_RAMP_DIM) / smallest
        return fracs[0] * ramp, True
    if n > largest:
        return fracs[-1], True
    if len(points) == 1:
        return fracs[0], False
    curve = PchipInterpolator(np.log2(dims), fracs)
    return float(curve(math.log2(n))), n not in dims


def dgemm_fp64(spec, n, baseline=None):
    efficiency, extrapolated = dgemm_efficiency(spec, n)
    peak = spec.peak('fp64').theoretical_peak
    notes = []
    base_value = _baseline_value(baseline, lambda b: dgemm_fp64(b, n).value, notes)
    return Prediction(
        metric='dgemm_fp64',
        value=peak * efficiency,
        unit='TFLOPS',
        bottleneck='compute',
        baseline=base_value,
        extrapolated=extrapolated,
        extras={'efficiency': efficiency, 'theoretical_peak': peak, 'n': n},
        notes=tuple(notes),
    )


# LLM inference

def _llm_cell(spec, model, precision):
    key = (model.lower(), precision.lower())
    if key in spec.llm:
        return spec.llm[key]
    if spec.is_new_precision(key[1]):
        raise MissingCalibration(f'{model} {precision}: new-in-Blackwell on {spec.name} (N/A)')
    raise MissingCalibration(f'{model} {precision}: no inference calibration for {spec.name} (N/A)')


def llm_throughput(spec, model, precision, batch=32, seq=2048, baseline=None):
    if batch < 1 or seq < 1:
        raise PreconditionError('batch and seq must be >= 1')
    cell = _llm_cell(spec, model, precision)
    notes = []
    extrapolated = (batch, seq) != (cell.batch, cell.seq_len)
    if extrapolated:
        notes.append(f'calibrated at batch {cell.batch}, seq {cell.seq_len}')
    if spec.memory.l2_hit_rate_pct:
        low, high = spec.memory.l2_hit_rate_pct
        notes.append(f'L2 hit rate {low:g}-{high:g}%')
    base_value = _baseline_value(
        baseline, lambda b: _llm_cell(b, model, precision).tokens_per_s, notes)
    return Prediction(
        metric='llm_throughput',
        value=cell.tokens_per_s,
        unit='tok/s',
        bottleneck='memory_bw',
        baseline=base_value,
        extrapolated=extrapolated,
        extras={
            'bw_utilization': cell.bw_pct,
            'perplexity': cell.perplexity,
            'delta_ppl_pct': cell.delta_ppl_pct,
            'batch': cell.batch,
            'seq_len': cell.seq_len,
        },
        notes=tuple(notes),
    )


def _latency_table(spec):
    if spec.llm_latency is None:
        raise MissingCalibration(f'{spec.name} has no batch latency calibration')
    return spec.llm_latency


def affine_latency_fit(spec):
    """Least-squares ``a + c * batch`` over the calibrated latency points"""
    table = _latency_table(spec)
    batches = np.array([b for b, _ in table.points], dtype=np.float64)
    latency = np.array([ms for _, ms in table.points], dtype=np.float64)
    slope, intercept = np.polyfit(batches, latency, 1)
    residual = np.abs(intercept + slope * batches - latency) / latency
    return AffineFit(float(intercept), float(slope), float(residual.max()))


def llm_latency(spec, batch, seq=2048, baseline=None):
    """Per-batch latency; monotone interpolation inside the calibrated range"""
    if batch < 1 or seq < 1:
        raise PreconditionError('batch and seq must be >= 1')
    table = _latency_table(spec)
    points = sorted(table.points)
    batches = [b for b, _ in points]
    latencies = [ms for _, ms in points]

    if batch in batches:
        ms = latencies[batches.index(batch)]
        extrapolated = False
    elif batch > batches[-1]:
        ms = latencies[-1] + affine_latency_fit(spec).slope_ms * (batch - batches[-1])
        extrapolated = True
    elif batch < batches[0]:
        ms = latencies[0]
        extrapolated = True
    else:
        ms = float(PchipInterpolator(batches, latencies)(batch))
        extrapolated = True
    extrapolated = extrapolated or seq != table.seq_len

    notes = []
    if batch <= 4 and table.pipeline_stages:
        notes.append('pipeline {:g}-{:g} stages'.format(*table.pipeline_stages))
    if table.p99_median_ratio:
        notes.append('P99/median {:g}-{:g}x'.format(*table.p99_median_ratio))
    base_value = _baseline_value(baseline, lambda b: llm_latency(b, batch, seq).value, notes)

    return Prediction(
        metric='llm_latency',
        value=ms,
        unit='ms',
        bottleneck='memory_bw',
        baseline=base_value,
        extrapolated=extrapolated,
        extras={
            'tokens_per_s': batch * seq / (ms / 1e3),
            'batch': batch,
            'model': table.model,
            'precision': table.precision,
        },
        notes=tuple(notes),
    )


# SpMV

def spmv_traffic(value_bytes, index_bytes, index_compression_ratio=DEFAULT_INDEX_COMPRESSION):
    if value_bytes < 0 or index_bytes < 0 or value_bytes + index_bytes <= 0:
        raise PreconditionError('traffic byte counts must be non-negative and not both zero')
    if index_compression_ratio < 1:
        raise PreconditionError('index_compression_ratio must be >= 1')
    baseline = value_bytes + index_bytes
    compressed = value_bytes + index_bytes / index_compression_ratio
    return SpmvTraffic(baseline, compressed, 1.0 - compressed / baseline)


def _profile_traffic(profile):
    rows, nnz = profile['rows'], profile['nnz']
    ratio = profile.get('index_compression_ratio', DEFAULT_INDEX_COMPRESSION)
    return spmv_traffic(8 * nnz, 4 * nnz + 4 * (rows + 1), ratio)


def _spmv_cell(spec, matrix):
    for name, cell in spec.spmv.items():
        if name.lower() == matrix.lower():
            return cell
    return None


def _spmv_rate(cell, compressed):
    if compressed or cell.speedup is None:
        return cell.gflops
    return cell.gflops / cell.speedup


def spmv(spec, matrix=None, compressed=True, profile=None, baseline=None):
    """SpMV GFLOPS for a calibrated matrix or, with ``profile``, an uncalibrated one.

    ``profile`` is a mapping with ``rows``, ``nnz`` and optionally
    ``sparsity`` and ``index_compression_ratio``.
    """
    if profile is not None:
        if min(profile.get('rows', 0), profile.get('nnz', 0)) <= 0:
            raise PreconditionError('matrix profile needs positive rows and nnz')
    cell = _spmv_cell(spec, matrix) if matrix else None
    notes = []
    extras = {'compressed': bool(compressed)}

    if cell is not None:
        gflops = _spmv_rate(cell, compressed)
        extrapolated = False
        if cell.time_ms is not None:
            time_ms = cell.time_ms if compressed or cell.speedup is None else cell.time_ms * cell.speedup
            extras['time_ms'] = time_ms
        extras['speedup'] = cell.speedup
        if cell.speedup is None and compressed:
            notes.append('software decompression path')
    elif profile is not None:
        if not spec.spmv:
            raise MissingCalibration(f'{spec.name} has no SpMV calibration')
        gflops = float(np.mean([_spmv_rate(c, compressed) for c in spec.spmv.values()]))
        extrapolated = True
        extras['time_ms'] = 2 * profile['nnz'] / (gflops * 1e9) * 1e3
        notes.append('mean of calibrated matrices')
    else:
        raise MissingCalibration(f'matrix {matrix!r}: no SpMV calibration and no profile')

    if profile is not None:
        extras['traffic'] = _profile_traffic(profile).to_dict()
    base_value = None
    if baseline is not None and matrix:
        base_cell = _spmv_cell(baseline, matrix)
        if base_cell is None:
            notes.append(f'{baseline.name}: no SpMV calibration for {matrix}')
        else:
            base_value = _spmv_rate(base_cell, compressed)

    return Prediction(
        metric='spmv',
        value=gflops,
        unit='GFLOPS',
        bottleneck='memory_bw',
        baseline=base_value,
        extrapolated=extrapolated,
        extras=extras,
        notes=tuple(notes),
    )


# Training and energy

def _training_cell(spec, model, batch):
    key = (model.lower(), int(batch))
    if key not in spec.training:
        raise MissingCalibration(f'{model} batch {batch}: no training calibration for {spec.name}')
    return spec.training[key]


def energy_efficiency(throughput, power_watts):
    if power_watts <= 0:
        raise PreconditionError('power must be positive')
    return throughput / power_watts


def training_throughput(spec, model, batch, baseline=None):
    if batch < 1:
        raise PreconditionError('batch must be >= 1')
    cell = _training_cell(spec, model, batch)
    notes = []
    base_value = _baseline_value(baseline, lambda b: _training_cell(b, model, batch).throughput, notes)
    implied_power = cell.throughput / cell.per_watt if cell.per_watt else None
    return Prediction(
        metric='training_throughput',
        value=cell.throughput,
        unit=cell.unit,
        bottleneck='compute',
        baseline=base_value,
        extras={
            'time_to_accuracy_hrs': cell.time_to_accuracy_hrs,
            'per_watt': cell.per_watt,
            'implied_power_w': implied_power,
        },
        notes=tuple(notes),
    )


# Speedup decompositions

def decompose(factors, measured_range, tolerance=0.05, kind='', labels=()):
    low, high = sorted(measured_range)
    product = math.prod(factors)
    consistent = low * (1.0 - tolerance) <= product <= high * (1.0 + tolerance)
    return DecompositionResult(kind, tuple(factors), tuple(labels), product, (low, high), consistent)


def speedup_decomposition(spec, kind, tolerance=0.05):
    if kind not in DECOMPOSITION_KINDS:
        raise PreconditionError(f'kind must be one of {", ".join(DECOMPOSITION_KINDS)}')
    if kind not in spec.decompositions:
        raise MissingCalibration(f'{spec.name} has no {kind} speedup decomposition')
    d = spec.decompositions[kind]
    return decompose(d.factors, d.measured, tolerance, kind=kind, labels=d.labels)


# Summary

def attention_block(spec):
    if spec.attention_block_us is None:
        raise MissingCalibration(f'{spec.name} has no attention block calibration')
    return Prediction(metric='attention_block', value=spec.attention_block_us, unit='us')


def _energy(spec):
    cell = _training_cell(spec, 'gpt-1.3b', 128)
    if not cell.per_watt:
        raise MissingCalibration(f'{spec.name} has no training energy calibration')
    return cell.per_watt


_SUMMARY_ROWS = (
    ('LLM Inf. (7B, FP4)', 'tok/s', 'vs_fp16', 'FP4 Tensor Cores',
     lambda s: llm_throughput(s, 'mistral-7b', 'fp4').value),
    ('LLM Inf. (8x7B, FP8)', 'tok/s', 'ratio', '5th Gen TC, TMEM',
     lambda s: llm_throughput(s, 'mixtral-8x7b', 'fp8').value),
    ('LLM Inf. (BS=1, FP8)', 'Latency (ms)', 'inverse', 'Latency pipeline',
     lambda s: llm_latency(s, 1).value),
    ('LLM Inf. (8x22B, FP8)', 'tok/s', 'ratio', 'HBM3e, compression',
     lambda s: llm_throughput(s, 'mixtral-8x22b', 'fp8').value),
    ('Attention Block', 'Latency (us)', 'inverse', 'TMEM',
     lambda s: attention_block(s).value),
    ('HPC DGEMM (FP64)', 'TFLOPS', 'ratio', 'Doubled FP64 units',
     lambda s: dgemm_fp64(s, SUMMARY_DGEMM_DIM).value),
    ('STREAM Triad', 'BW (TB/s)', 'ratio', 'HBM3e',
     lambda s: stream_triad(s, SUMMARY_STREAM_BYTES).value),
    ('SpMV (compressed)', 'GFLOPS', 'ratio', 'Decomp engine',
     lambda s: spmv(s, 'ldoor').value),
    ('GPT Training (1.3B)', 'tok/s', 'ratio', 'CTA pairs, TMEM, TC',
     lambda s: training_throughput(s, 'gpt-1.3b', 128).value),
    ('ResNet Training', 'img/s', 'ratio', '5th Gen TC, mem BW',
     lambda s: training_throughput(s, 'resnet-50', 1024).value),
    ('Energy Eff. (Training)', 'tok/s/W', 'ratio', 'Process, efficiency',
     _energy),
)


def _or_none(fn, spec):
    try:
        return fn(spec)
    except MissingCalibration as e:
        logger.debug('summary cell missing for %s: %s', spec.name, e.message)
        return None


def summary(spec_b, spec_h):
    """Headline comparison rows; missing cells are None and render as N/A"""
    rows = []
    for workload, metric, basis, feature, fn in _SUMMARY_ROWS:
        b_value, h_value = _or_none(fn, spec_b), _or_none(fn, spec_h)
        improvement = None
        if basis == 'vs_fp16':
            fp16 = _or_none(lambda s: llm_throughput(s, 'mistral-7b', 'fp16').value, spec_b)
            if b_value is not None and fp16:
                improvement = b_value / fp16
        elif b_value is not None and h_value:
            improvement = h_value / b_value if basis == 'inverse' else b_value / h_value
        rows.append(SummaryRow(workload, metric, b_value, h_value, improvement, basis, feature))
    return rows


# Batch evaluation

def evaluate(spec, workload, baseline=None):
    """Run one WorkloadSpec against ``spec``"""
    p = dict(workload.params)
    variant = workload.variant
    if variant == 'dgemm':
        return dgemm_fp64(spec, int(p['n']), baseline=baseline)
    if variant == 'llm_infer':
        return llm_throughput(spec, p['model'], p['precision'], p.get('batch', 32),
                              p.get('seq', 2048), baseline=baseline)
    if variant == 'llm_latency':
        return llm_latency(spec, p['batch'], p.get('seq', 2048), baseline=baseline)
    if variant == 'stream':
        return stream_triad(spec, p['array_bytes'], baseline=baseline)
    if variant == 'spmv':
        profile = {k: p[k] for k in ('rows', 'nnz', 'sparsity', 'index_compression_ratio') if k in p}
        return spmv(spec, p.get('matrix'), p.get('compressed', True),
                    profile=profile or None, baseline=baseline)
    return training_throughput(spec, p['model'], p['batch'], baseline=baseline)


def evaluate_many(spec, workloads, baseline=None, max_workers=4):
    """Evaluate concurrently; results keep the input order"""
    workloads = list(workloads)
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(lambda w: evaluate(spec, w, baseline), workloads))
