"""Recompute every reference table from the model and compare cell by cell.

Each reproducer returns ``{row_key: {column: value}}`` where a value is a
number, text, None for N/A, or a Prediction (its ``extrapolated`` flag is
carried into the report).  Tolerances are relative and declared per column
next to the reproducer.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Tuple

from calibration import CalibrationSet
from calibration.spec_types import GB, PRECISIONS
from models import Prediction
from perfmodel.decomp import curve_for_profile, de_params, pipeline_depth, saturation_point, sensitivity
from perfmodel.memsys import stream_triad
from perfmodel.tensor_core import SASS_OPCODES, MmaInstr, instr_latency, peak_throughput, sass_opcode
from perfmodel.workloads import (
    dgemm_fp64, llm_latency, llm_throughput, spmv, summary, training_throughput,
)
from utils.errors import MissingCalibration

from .reference import load_reference, normalize_table_id, parse_cell, table_ids

logger = logging.getLogger(__name__)

EXACT = 1e-9


@dataclass(frozen=True)
class Reproducer:
    table_id: str
    keys: Tuple[str, ...]
    fn: Callable
    tolerances: Mapping[str, float] = field(default_factory=dict)

    def tolerance(self, column):
        return self.tolerances.get(column, 0.0)


REPRODUCERS = {}


def reproducer(table_id, keys, tolerances=None):
    def register(fn):
        REPRODUCERS[table_id] = Reproducer(table_id, tuple(keys), fn, dict(tolerances or {}))
        return fn
    return register


@dataclass(frozen=True)
class CellComparison:
    row: str
    column: str
    model: object
    reference: object
    rel_error: Optional[float]
    tolerance: float
    passed: bool
    extrapolated: bool = False

    @property
    def label(self):
        return f'{self.row}/{self.column}'

    def to_dict(self):
        return {
            'row': self.row,
            'column': self.column,
            'model': self.model,
            'reference': self.reference,
            'rel_error': self.rel_error,
            'tolerance': self.tolerance,
            'passed': self.passed,
        }


@dataclass(frozen=True)
class ComparisonReport:
    table_id: str
    title: str
    cells: Tuple[CellComparison, ...]

    @property
    def max_rel_error(self):
        errors = [c.rel_error for c in self.cells if c.rel_error is not None]
        return max(errors) if errors else 0.0

    @property
    def passed(self):
        return all(c.passed for c in self.cells)

    @property
    def failures(self):
        return [c for c in self.cells if not c.passed]

    @property
    def extrapolated(self):
        return [c.label for c in self.cells if c.extrapolated]

    @property
    def worst(self):
        """The failing cell to name first: missing or text mismatches, then the largest error"""
        failures = self.failures
        if not failures:
            return None
        return max(failures, key=lambda c: math.inf if c.rel_error is None else c.rel_error)

    def rows(self):
        return [c.to_dict() for c in self.cells]

    def to_dict(self):
        worst = self.worst
        return {
            'table': self.table_id,
            'title': self.title,
            'passed': self.passed,
            'max_rel_error': self.max_rel_error,
            'cells': len(self.cells),
            'failures': [c.to_dict() for c in self.failures],
            'worst': worst.label if worst else None,
        }


def _na(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except MissingCalibration:
        return None


def _pct(fraction):
    return None if fraction is None else fraction * 100.0


# Decompression Engine

@reproducer('T1', keys=('format',))
def _formats(spec_b, spec_h):
    return {
        (name,): {
            'compression_ratio': p.compression_ratio,
            'input_gbps': p.input_gbps,
            'output_gbps': p.output_gbps,
            'latency_ms': p.latency_ms,
            'use_case': p.use_case,
        }
        for name, p in de_params(spec_b).format_profiles.items()
    }


@reproducer('T2', keys=('pattern',), tolerances={'input_gbps': 0.015, 'latency_ms': 0.03})
def _sensitivity(spec_b, spec_h):
    rows = {}
    for name, pattern in de_params(spec_b).patterns.items():
        pred = sensitivity(spec_b, pattern.compression_ratio, pattern.output_gbps)
        rows[(name,)] = {
            'compression_ratio': pattern.compression_ratio,
            'input_gbps': pred,
            'output_gbps': pattern.output_gbps,
            'latency_ms': pred.extras['latency_ms_per_100MB'],
        }
    return rows


@reproducer('T3', keys=('chunk_kb',),
            tolerances={'peak_gbps': 0.02, 'max_speedup': 0.02})
def _pipeline(spec_b, spec_h):
    de = de_params(spec_b)
    rows = {}
    for chunk, profile in de.chunk_profiles.items():
        curve = curve_for_profile(profile)
        saturation = saturation_point(curve, de.saturation_margin)
        peak = max(p.aggregate_gbps for p in curve.points)
        rows[(str(chunk // 1024),)] = {
            'peak_gbps': peak,
            'pipeline_depth': pipeline_depth(curve, de.efficiency_threshold),
            'saturation_batch': saturation.concurrency,
            'max_speedup': peak / profile.single_rate_gbps,
        }
    return rows


# Tensor Cores

@reproducer('T4', keys=('precision',))
def _sass(spec_b, spec_h):
    return {
        (prec,): {'tcgen05': _na(sass_opcode, 'tcgen05', prec), 'wgmma': _na(sass_opcode, 'wgmma', prec)}
        for prec in SASS_OPCODES
    }


@reproducer('T5', keys=('instruction', 'tile'))
def _mma_latency(spec_b, spec_h):
    rows = {}
    for spec, isa in ((spec_h, 'wgmma'), (spec_b, 'tcgen05')):
        for shape in spec.latency.calibrated(isa):
            pred = instr_latency(spec, MmaInstr.parse(isa, shape))
            rows[(isa, shape)] = {
                'scope': 'warp-group' if pred.extras['scope'] == 128 else 'warp',
                'latency_cycles': pred,
            }
    return rows


@reproducer('T6', keys=('input', 'accum'))
def _instr(spec_b, spec_h):
    return {
        (i, a): {'shape': e.shape, 'latency_cycles': e.latency_cycles, 'throughput': e.throughput}
        for (i, a), e in spec_b.instr.items()
    }


@reproducer('T7', keys=('precision',), tolerances={'speedup': 0.01})
def _peaks(spec_b, spec_h):
    rows = {}
    for prec in PRECISIONS:
        if prec not in spec_b.peaks:
            continue
        pred = peak_throughput(spec_b, prec, baseline=spec_h)
        rows[(prec,)] = {
            'b200': pred.value,
            'b200_pct_peak': _pct(pred.extras['pct_of_peak']),
            'h200': pred.baseline,
            'speedup': 'New' if spec_h.is_new_precision(prec) else pred.ratio,
        }
    return rows


# Workloads

@reproducer('T8', keys=('model', 'precision'), tolerances={'speedup': 0.01})
def _llm(spec_b, spec_h):
    rows = {}
    for (model, prec), cell in spec_b.llm.items():
        pred = llm_throughput(spec_b, model, prec, baseline=spec_h)
        h_cell = spec_h.llm.get((model, prec))
        rows[(model, prec)] = {
            'b200_tok_s': pred,
            'h200_tok_s': pred.baseline,
            'speedup': pred.ratio,
            'b200_bw_pct': _pct(cell.bw_pct),
            'h200_bw_pct': _pct(h_cell.bw_pct) if h_cell else None,
            'perplexity': cell.perplexity,
            'delta_ppl_pct': cell.delta_ppl_pct,
        }
    return rows


@reproducer('T9', keys=('batch',),
            tolerances={'b200_ms': 0.02, 'h200_ms': 0.02, 'ratio': 0.01, 'b200_tok_s': 0.01})
def _latency(spec_b, spec_h):
    rows = {}
    for batch, _ in spec_b.llm_latency.points:
        pred = llm_latency(spec_b, batch, baseline=spec_h)
        rows[(str(batch),)] = {
            'b200_ms': pred,
            'h200_ms': pred.baseline,
            'ratio': pred.baseline / pred.value,
            'b200_tok_s': pred.extras['tokens_per_s'],
        }
    return rows


@reproducer('T10', keys=('workload',),
            tolerances={'b200': 0.02, 'h200': 0.02, 'improvement': 0.01})
def _summary(spec_b, spec_h):
    return {
        (row.workload,): {
            'metric': row.metric,
            'b200': row.b200,
            'h200': row.h200,
            'improvement': row.improvement,
            'improvement_basis': row.improvement_basis,
            'key_feature': row.key_feature,
        }
        for row in summary(spec_b, spec_h)
    }


@reproducer('T11', keys=('model', 'batch'), tolerances={'ratio': 0.01})
def _training(spec_b, spec_h):
    rows = {}
    for (model, batch) in spec_b.training:
        pred = training_throughput(spec_b, model, batch, baseline=spec_h)
        h_cell = spec_h.training.get((model, batch))
        rows[(model, str(batch))] = {
            'unit': pred.unit,
            'b200': pred,
            'h200': pred.baseline,
            'ratio': pred.ratio,
            'b200_tta_hrs': pred.extras['time_to_accuracy_hrs'],
            'h200_tta_hrs': h_cell.time_to_accuracy_hrs if h_cell else None,
            'b200_per_watt': pred.extras['per_watt'],
        }
    return rows


@reproducer('T12', keys=('n',),
            tolerances={'b200_tflops': 0.02, 'h200_tflops': 0.02, 'ratio': 0.01,
                        'b200_pct_peak': 0.02, 'h200_pct_peak': 0.02})
def _dgemm(spec_b, spec_h):
    rows = {}
    for point in spec_b.dgemm:
        pred = dgemm_fp64(spec_b, point.dim, baseline=spec_h)
        rows[(str(point.dim),)] = {
            'b200_tflops': pred,
            'h200_tflops': pred.baseline,
            'ratio': pred.ratio,
            'b200_pct_peak': _pct(pred.extras['efficiency']),
            'h200_pct_peak': _pct(dgemm_fp64(spec_h, point.dim).extras['efficiency']),
        }
    return rows


STREAM_ARRAYS_GB = (4, 16, 64, 128)


@reproducer('T13', keys=('array_gb',),
            tolerances={'b200_tbps': 0.02, 'h200_tbps': 0.02, 'b200_pct': 0.02, 'h200_pct': 0.02})
def _stream(spec_b, spec_h):
    rows = {}
    for size in STREAM_ARRAYS_GB:
        b = stream_triad(spec_b, size * GB)
        h = stream_triad(spec_h, size * GB)
        rows[(str(size),)] = {
            'b200_tbps': b,
            'h200_tbps': h,
            'b200_pct': _pct(b.extras['efficiency']),
            'h200_pct': _pct(h.extras['efficiency']),
        }
    return rows


@reproducer('T14', keys=('matrix',))
def _spmv(spec_b, spec_h):
    rows = {}
    for name, cell in spec_b.spmv.items():
        pred = spmv(spec_b, name)
        rows[(name,)] = {
            'sparsity_pct': cell.sparsity_pct,
            'gflops': pred,
            'speedup': pred.extras['speedup'],
            'time_ms': pred.extras.get('time_ms'),
        }
    return rows


def _unwrap(value):
    if isinstance(value, Prediction):
        return value.value, value.extrapolated
    return value, False


def compare_cell(row, column, model, reference, tolerance, extrapolated=False):
    """Numbers within tolerance, text by equality, N/A only against N/A"""
    if reference is None or isinstance(reference, str):
        passed = model == reference
        return CellComparison(row, column, model, reference, None, tolerance, passed, extrapolated)
    if model is None or isinstance(model, str):
        return CellComparison(row, column, model, reference, None, tolerance, False, extrapolated)
    model = float(model)
    error = abs(model - reference) / abs(reference) if reference else abs(model)
    passed = error <= tolerance + EXACT
    return CellComparison(row, column, model, reference, error, tolerance, passed, extrapolated)


def compare(table, rep, model_rows):
    cells = []
    for ref_row in table.rows:
        key = table.key(ref_row, rep.keys)
        label = ' '.join(key)
        model_row = model_rows.get(key)
        for column in table.columns:
            if column in rep.keys:
                continue
            reference = parse_cell(ref_row[column])
            if model_row is None or column not in model_row:
                cells.append(CellComparison(label, column, None, reference, None,
                                            rep.tolerance(column), False))
                continue
            value, extrapolated = _unwrap(model_row[column])
            cells.append(compare_cell(label, column, value, reference, rep.tolerance(column), extrapolated))
    return cells


def _default_specs(specs):
    if specs is None:
        specs = CalibrationSet.load()
    return specs['B200'], specs['H200']


def reproduce(table_id, specs=None):
    table_id = normalize_table_id(table_id)
    spec_b, spec_h = _default_specs(specs)
    table = load_reference(table_id)
    rep = REPRODUCERS[table_id]
    report = ComparisonReport(table_id, table.title, tuple(compare(table, rep, rep.fn(spec_b, spec_h))))
    logger.debug('%s: %d cells, max error %.4g', table_id, len(report.cells), report.max_rel_error)
    return report


def reproduce_all(specs=None, max_workers=4):
    """Every table; evaluated concurrently, returned in table order"""
    if specs is None:
        specs = CalibrationSet.load()
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(lambda t: reproduce(t, specs), table_ids()))
