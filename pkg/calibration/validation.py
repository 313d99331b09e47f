from __future__ import annotations

from dataclasses import dataclass

PEAK_CONSISTENCY_TOLERANCE = 0.005
FORMAT_IDENTITY_TOLERANCE = 0.05
CHUNK_IDENTITY_TOLERANCE = 0.02


@dataclass(frozen=True)
class Violation:
    field: str
    rule: str

    def __str__(self):
        return f'{self.field}: {self.rule}'


def derived_peaks(spec):
    """Theoretical peak per precision: measured throughput / fraction of peak"""
    return {prec: entry.theoretical_peak for prec, entry in spec.peaks.items()}


def peak_consistency(spec):
    """Relative gap between the derived FP64 peak and each DGEMM anchor"""
    if 'fp64' not in spec.peaks or not spec.dgemm:
        return {}
    derived = spec.peaks['fp64'].theoretical_peak
    return {
        point.dim: abs(point.tflops / point.fraction - derived) / derived
        for point in spec.dgemm
        if point.fraction > 0
    }


def _positive(out, name, value):
    if value is not None and not value > 0:
        out.append(Violation(name, f'must be > 0 (got {value})'))


def _fraction(out, name, value):
    if value is not None and not 0 < value <= 1:
        out.append(Violation(name, f'fraction must be in (0, 1] (got {value})'))


def _check_tmem(out, tmem):
    for name in ('capacity', 'lanes', 'columns', 'cell_bits', 'read_bw', 'write_bw',
                 'miss_latency', 'baseline_miss_latency', 'sustained_mma_bw', 'global_path_bw'):
        _positive(out, f'tmem.{name}', getattr(tmem, name))
    if tmem.capacity != tmem.lanes * tmem.columns * tmem.cell_bits // 8:
        out.append(Violation('tmem.capacity', 'tmem capacity mismatch'))
    if tmem.read_bw < tmem.write_bw:
        out.append(Violation('tmem.read_bw', 'read bandwidth must be >= write bandwidth'))
    if tmem.miss_latency >= tmem.baseline_miss_latency:
        out.append(Violation('tmem.miss_latency', 'must be below the baseline miss latency'))


def _check_de(out, de):
    if not 0 < de.efficiency_threshold < 1:
        out.append(Violation('decomp.efficiency_threshold', 'must be in (0, 1)'))
    if not 0 < de.saturation_margin < 1:
        out.append(Violation('decomp.saturation_margin', 'must be in (0, 1)'))
    low, high = de.output_ceiling
    if not 0 < low <= high:
        out.append(Violation('decomp.output_ceiling', 'band must satisfy 0 < low <= high'))
    _positive(out, 'decomp.latency_overhead_ms', de.latency_overhead_ms)

    for name, p in de.format_profiles.items():
        prefix = f'decomp.format.{name}'
        _positive(out, f'{prefix}.output_gbps', p.output_gbps)
        _positive(out, f'{prefix}.latency_ms', p.latency_ms)
        _positive(out, f'{prefix}.input_gbps', p.input_gbps)
        _positive(out, f'{prefix}.compression_ratio', p.compression_ratio)
        if p.input_gbps and p.compression_ratio:
            gap = abs(p.input_gbps - p.output_gbps / p.compression_ratio) / p.input_gbps
            if gap > FORMAT_IDENTITY_TOLERANCE:
                out.append(Violation(prefix, f'input != output/ratio ({gap:.1%} apart)'))

    for size, c in de.chunk_profiles.items():
        prefix = f'decomp.chunk.{size}'
        for name in ('single_rate_gbps', 'pipeline_depth', 'saturation_batch', 'peak_gbps', 'max_speedup'):
            _positive(out, f'{prefix}.{name}', getattr(c, name))
        if c.peak_gbps > 0:
            gap = abs(c.peak_gbps - c.single_rate_gbps * c.max_speedup) / c.peak_gbps
            if gap > CHUNK_IDENTITY_TOLERANCE:
                out.append(Violation(prefix, f'peak != single_rate x max_speedup ({gap:.1%} apart)'))
        if c.pipeline_depth > c.saturation_batch:
            out.append(Violation(prefix, 'pipeline depth exceeds saturation batch'))

    for name, p in de.patterns.items():
        prefix = f'decomp.pattern.{name}'
        if p.compression_ratio < 1:
            out.append(Violation(f'{prefix}.compression_ratio', 'must be >= 1'))
        _positive(out, f'{prefix}.output_gbps', p.output_gbps)


def validate_spec(spec):
    """List every invariant the machine description breaks; empty when valid"""
    out = []
    _positive(out, 'gpu.sm_count', spec.sm_count)
    _positive(out, 'gpu.transistors', spec.transistors)

    for prec, entry in spec.peaks.items():
        _positive(out, f'tensor.peak.{prec}', entry.throughput)
        _fraction(out, f'tensor.peak.{prec}_pct', entry.pct_of_peak)
        if prec in spec.unsupported:
            out.append(Violation(f'tensor.peak.{prec}', 'listed as both calibrated and unsupported'))

    if spec.latency is not None:
        for (isa, shape), cycles in spec.latency.tiles.items():
            _positive(out, f'tensor.latency.{isa}_{shape}', cycles)
        _positive(out, 'tensor.latency.wgmma_base_cycles', spec.latency.wgmma_base_cycles)
        _positive(out, 'tensor.latency.wgmma_n_block', spec.latency.wgmma_n_block)

    for (in_prec, accum), entry in spec.instr.items():
        _positive(out, f'tensor.instr.{in_prec}.{accum}.latency_cycles', entry.latency_cycles)
        _positive(out, f'tensor.instr.{in_prec}.{accum}.throughput', entry.throughput)

    _positive(out, 'memory.hbm_capacity', spec.memory.hbm_capacity)
    _positive(out, 'memory.hbm_peak_bw', spec.memory.hbm_peak_bw)
    _positive(out, 'memory.global_miss_latency', spec.memory.global_miss_latency)

    if spec.stream is not None:
        _fraction(out, 'stream.small_fraction', spec.stream.small_fraction)
        _fraction(out, 'stream.large_fraction', spec.stream.large_fraction)
        _positive(out, 'stream.threshold_bytes', spec.stream.threshold_bytes)

    for point in spec.dgemm:
        _positive(out, f'dgemm.n_{point.dim}', point.tflops)
        _fraction(out, f'dgemm.n_{point.dim}_pct', point.fraction)

    for dim, gap in peak_consistency(spec).items():
        if gap > PEAK_CONSISTENCY_TOLERANCE:
            out.append(Violation(f'dgemm.n_{dim}', f'fp64 peak inconsistent with dgemm table ({gap:.2%})'))

    if spec.tmem is not None:
        _check_tmem(out, spec.tmem)
    if spec.de is not None:
        _check_de(out, spec.de)

    for (model, prec), cell in spec.llm.items():
        _positive(out, f'llm.{model}.{prec}.tokens_per_s', cell.tokens_per_s)
        _positive(out, f'llm.{model}.{prec}.batch', cell.batch)
        _fraction(out, f'llm.{model}.{prec}.bw_pct', cell.bw_pct)

    if spec.llm_latency is not None:
        for batch, ms in spec.llm_latency.points:
            _positive(out, f'llm_latency.batch_{batch}_ms', ms)

    for (model, batch), cell in spec.training.items():
        _positive(out, f'training.{model}.{batch}.throughput', cell.throughput)
        _positive(out, f'training.{model}.{batch}.per_watt', cell.per_watt)

    for matrix, cell in spec.spmv.items():
        _positive(out, f'spmv.{matrix}.gflops', cell.gflops)
        _positive(out, f'spmv.{matrix}.speedup', cell.speedup)

    _positive(out, 'attention.block_latency_us', spec.attention_block_us)
    return out
