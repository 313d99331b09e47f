"""Recorded conflicts between published values.

Each entry puts two values side by side with where they come from.  Values
that follow from calibration data are recomputed so the ledger tracks the
machine files it is given.
"""
from dataclasses import dataclass
from typing import Optional

from calibration import CalibrationSet
from perfmodel.decomp import chunk_profile, model_throughput
from perfmodel.workloads import (
    affine_latency_fit, llm_latency, llm_throughput, speedup_decomposition, spmv_traffic,
)
from perfmodel.tensor_core import latency_spread

NARRATIVE = 'narrative'


@dataclass(frozen=True)
class LedgerEntry:
    topic: str
    first: str
    first_value: Optional[float]
    first_anchor: str
    second: str
    second_value: Optional[float]
    second_anchor: str
    note: str = ''

    def to_dict(self):
        return dict(self.__dict__)


def _accumulation(spec_b):
    instr = spec_b.instr[('fp16', 'fp16')].throughput
    peak = spec_b.peak('fp16').throughput
    return LedgerEntry(
        'fp16 throughput scale',
        'FP16/FP16 instruction throughput', instr, 'T6',
        'FP16 sustained peak', peak, 'T7',
        f'{peak / instr:.2f}x apart; instruction and peak tables kept in separate namespaces',
    )


def _token_scale(spec_b):
    throughput = llm_throughput(spec_b, 'mixtral-8x7b', 'fp8').value
    batch_32 = llm_latency(spec_b, 32).extras['tokens_per_s']
    return LedgerEntry(
        'token throughput scale',
        'Mixtral-8x7B FP8 tok/s at batch 32', throughput, 'T8',
        'batch x 2048 / latency at batch 32', batch_32, 'T9',
        f'{batch_32 / throughput:.1f}x apart; both reported as calibrated',
    )


def _decomposition(spec_b, kind, anchor):
    result = speedup_decomposition(spec_b, kind)
    low, high = result.measured_range
    labels = ' x '.join(f'{l} {f:g}' for l, f in zip(result.labels, result.factors))
    return LedgerEntry(
        f'{kind} speedup decomposition',
        f'product of factors ({labels})', result.product, NARRATIVE,
        f'measured end-to-end speedup {low:g}-{high:g}', high, anchor,
        'consistent within 5%' if result.consistent else 'not consistent within 5%',
    )


def _fp64_peak(spec_b):
    return LedgerEntry(
        'fp64 peak',
        'quoted FP64 peak', 40.0, NARRATIVE,
        'FP64 peak derived from sustained throughput and % of peak',
        spec_b.peak('fp64').theoretical_peak, 'T7/T12',
        'DGEMM percentages agree with the derived value',
    )


def _depth_one_chunk(spec_b):
    profile = chunk_profile(spec_b, 64 * 1024)
    return LedgerEntry(
        '64 KB chunk',
        'pipeline depth', profile.pipeline_depth, 'T3',
        'max speedup vs sequential', profile.max_speedup, 'T3',
        'depth 1 yet near-70x batching speedup; the power law between depth and saturation carries it',
    )


def _spmv_traffic(spec_b):
    traffic = spmv_traffic(57.0, 43.0)
    speedup = next(iter(spec_b.spmv.values())).speedup if spec_b.spmv else None
    return LedgerEntry(
        'spmv compression',
        'SpMV speedup with decompression', speedup, 'T14',
        'traffic reduction from 8.2x index compression at 43% index share',
        traffic.reduction, NARRATIVE,
        f'claimed 35% traffic reduction; traffic alone bounds speedup at {1 / (1 - traffic.reduction):.2f}x',
    )


def _affine_latency(spec_b):
    fit = affine_latency_fit(spec_b)
    return LedgerEntry(
        'batch latency law',
        'best affine fit max relative residual', fit.max_rel_residual, 'T9',
        'required residual bound', 0.02, NARRATIVE,
        f'least squares a={fit.intercept_ms:.2f} ms, c={fit.slope_ms:.3f} ms/batch; '
        'monotone interpolation used instead',
    )


def _small_file(spec_b):
    profile = chunk_profile(spec_b, 32 * 1024)
    rate = model_throughput(profile, 16)
    return LedgerEntry(
        'small-file decompression',
        'quoted rate for 32 KB chunks at 16 concurrent operations', profile.peak_gbps, NARRATIVE,
        'modelled rate at 16 concurrent operations', rate, 'T3',
        f'{profile.peak_gbps:g} GB/s is reached only at batch {profile.saturation_batch}',
    )


def _accumulation_text(spec_b):
    fp32 = spec_b.instr[('fp16', 'fp32')].throughput
    fp16 = spec_b.instr[('fp16', 'fp16')].throughput
    return LedgerEntry(
        'fp32 accumulation penalty',
        'quoted FP16 -> FP32 accumulation drop 1929.2 -> 964.6', 964.6, NARRATIVE,
        f'instruction table drop {fp16:g} -> {fp32:g}', fp32, 'T6',
        'same halving, different absolute scale',
    )


def _latency_range(spec_b):
    values = [e.latency_cycles for e in spec_b.instr.values()]
    return LedgerEntry(
        'latency range across precisions',
        'quoted spread 1.27x (11.2-14.2 cycles)', 1.27, NARRATIVE,
        f'instruction table range {min(values):g}-{max(values):g} cycles',
        latency_spread(spec_b), 'T6',
        '14.2 cycles appears in no calibrated row',
    )


def _training_power(spec_b, spec_h):
    b = spec_b.training[('gpt-1.3b', 128)]
    h = spec_h.training[('gpt-1.3b', 128)]
    implied = (b.throughput / b.per_watt) / (h.throughput / h.per_watt) - 1.0
    return LedgerEntry(
        'training board power',
        'quoted B200 power increase', 0.14, NARRATIVE,
        'implied by throughput / per-watt efficiency', implied, 'T11/T10',
        'per-watt ratio and throughput ratio imply a smaller power gap',
    )


def ledger_entries(specs=None):
    if specs is None:
        specs = CalibrationSet.load()
    spec_b, spec_h = specs['B200'], specs['H200']
    return [
        _accumulation(spec_b),
        _token_scale(spec_b),
        _decomposition(spec_b, 'inference', 'T8'),
        _decomposition(spec_b, 'training', 'T11'),
        _fp64_peak(spec_b),
        _depth_one_chunk(spec_b),
        _spmv_traffic(spec_b),
        _affine_latency(spec_b),
        _small_file(spec_b),
        _accumulation_text(spec_b),
        _latency_range(spec_b),
        _training_power(spec_b, spec_h),
    ]
