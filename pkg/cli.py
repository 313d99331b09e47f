import logging
import sys
from pathlib import Path

import click

from calibration import CalibrationSet, dump_chunk_profile, resolve_spec
from config.config import Config
from lpfloat import code_lines, get_format, load_vector, quant_error_stats
from models import Prediction
from perfmodel import (
    MmaInstr, batch_curve, batch_throughput, chained_gemm_traffic, dgemm_fp64, fit_chunk_model,
    format_profile, instr_latency, instr_throughput, llm_latency, llm_throughput,
    load_measurements, peak_throughput, recommend_config, sensitivity, spmv, stream_triad,
    tile_curve, tile_efficiency, training_throughput,
)
from perfmodel.tensor_core import dependency_chain_cycles
from report import ledger_entries, render, reproduce, reproduce_all, table_ids
from utils.decorators import cli_errors, common_options
from utils.errors import DegenerateSignal, MissingCalibration
from utils.units import parse_size

logger = logging.getLogger(__name__)

REPRODUCTION_FAILED = 4


def _machine(gpu, spec_path):
    return resolve_spec(gpu, spec_path=spec_path)


def _baseline(spec):
    """The comparison machine, or None when ``spec`` is the baseline itself"""
    if spec.name.lower() == Config.BASELINE_GPU.lower():
        return None
    return resolve_spec(Config.BASELINE_GPU)


def _extrapolated(outputs):
    items = outputs if isinstance(outputs, (list, tuple)) else [outputs]
    return any(isinstance(o, Prediction) and o.extrapolated for o in items)


def _emit(output, command, inputs, outputs):
    extrapolated = _extrapolated(outputs)
    if extrapolated:
        logger.warning('%s: prediction is outside the calibrated range', command)
    click.echo(render(output, command, inputs, outputs, extrapolated), nl=False)


@click.group()
@click.option('--log-level', default=Config.LOG_LEVEL, show_default=True,
              type=click.Choice(['DEBUG', 'INFO', 'WARNING', 'ERROR'], case_sensitive=False))
def cli(log_level):
    """Calibrated performance model of Blackwell B200 against Hopper H200."""
    logging.basicConfig(level=log_level.upper(), stream=sys.stderr,
                        format='%(levelname)s %(name)s: %(message)s', force=True)


@cli.group()
def predict():
    """Predict one workload or component."""


@predict.command('dgemm')
@common_options
@click.option('--n', type=int, required=True, help='Square matrix dimension.')
@cli_errors
def predict_dgemm(gpu, output, spec_path, n):
    spec = _machine(gpu, spec_path)
    _emit(output, 'predict dgemm', {'gpu': spec.name, 'n': n},
          dgemm_fp64(spec, n, baseline=_baseline(spec)))


@predict.command('llm')
@common_options
@click.option('--model', required=True)
@click.option('--precision', required=True)
@click.option('--batch', type=int, default=32, show_default=True)
@click.option('--seq', type=int, default=2048, show_default=True)
@cli_errors
def predict_llm(gpu, output, spec_path, model, precision, batch, seq):
    spec = _machine(gpu, spec_path)
    pred = llm_throughput(spec, model, precision, batch, seq, baseline=_baseline(spec))
    _emit(output, 'predict llm',
          {'gpu': spec.name, 'model': model, 'precision': precision, 'batch': batch, 'seq': seq}, pred)


@predict.command('latency')
@common_options
@click.option('--batch', type=int, required=True)
@click.option('--seq', type=int, default=2048, show_default=True)
@cli_errors
def predict_latency(gpu, output, spec_path, batch, seq):
    spec = _machine(gpu, spec_path)
    _emit(output, 'predict latency', {'gpu': spec.name, 'batch': batch, 'seq': seq},
          llm_latency(spec, batch, seq, baseline=_baseline(spec)))


@predict.command('stream')
@common_options
@click.option('--array-size', required=True, help="Bytes per array, e.g. '4GB'.")
@cli_errors
def predict_stream(gpu, output, spec_path, array_size):
    spec = _machine(gpu, spec_path)
    size = parse_size(array_size)
    _emit(output, 'predict stream', {'gpu': spec.name, 'array_bytes': size},
          stream_triad(spec, size, baseline=_baseline(spec)))


@predict.command('spmv')
@common_options
@click.option('--matrix', default=None)
@click.option('--rows', type=int, default=None)
@click.option('--nnz', type=int, default=None)
@click.option('--sparsity', type=float, default=None)
@click.option('--index-ratio', type=float, default=8.2, show_default=True)
@click.option('--compressed/--uncompressed', default=True, show_default=True)
@cli_errors
def predict_spmv(gpu, output, spec_path, matrix, rows, nnz, sparsity, index_ratio, compressed):
    spec = _machine(gpu, spec_path)
    profile = None
    if rows is not None or nnz is not None:
        profile = {'rows': rows or 0, 'nnz': nnz or 0, 'index_compression_ratio': index_ratio}
        if sparsity is not None:
            profile['sparsity'] = sparsity
    pred = spmv(spec, matrix, compressed, profile=profile, baseline=_baseline(spec))
    _emit(output, 'predict spmv',
          {'gpu': spec.name, 'matrix': matrix, 'compressed': compressed, 'profile': profile}, pred)


@predict.command('training')
@common_options
@click.option('--model', required=True)
@click.option('--batch', type=int, required=True)
@cli_errors
def predict_training(gpu, output, spec_path, model, batch):
    spec = _machine(gpu, spec_path)
    _emit(output, 'predict training', {'gpu': spec.name, 'model': model, 'batch': batch},
          training_throughput(spec, model, batch, baseline=_baseline(spec)))


@predict.command('peak')
@common_options
@click.option('--precision', required=True)
@cli_errors
def predict_peak(gpu, output, spec_path, precision):
    spec = _machine(gpu, spec_path)
    _emit(output, 'predict peak', {'gpu': spec.name, 'precision': precision},
          peak_throughput(spec, precision, baseline=_baseline(spec)))


@predict.command('mma')
@common_options
@click.option('--isa', default=None, help='Defaults to the machine ISA.')
@click.option('--shape', required=True, help="Tile such as 'm64n128k16'.")
@click.option('--in-prec', default='fp16', show_default=True)
@click.option('--accum-prec', default='fp32', show_default=True)
@click.option('--chain', type=int, default=0, help='Dependent instructions in a chain.')
@cli_errors
def predict_mma(gpu, output, spec_path, isa, shape, in_prec, accum_prec, chain):
    spec = _machine(gpu, spec_path)
    instr = MmaInstr.parse(isa or spec.isa, shape, in_prec, accum_prec)
    outputs = [instr_latency(spec, instr)]
    try:
        outputs.append(instr_throughput(spec, instr))
    except MissingCalibration as e:
        logger.info('no throughput for %s: %s', shape, e.message)
    if chain:
        outputs.append(Prediction('dependency_chain', dependency_chain_cycles(spec, instr, chain),
                                  'cycles', bottleneck='compute', extras={'chain_len': chain}))
    _emit(output, 'predict mma',
          {'gpu': spec.name, 'isa': instr.isa, 'shape': instr.shape,
           'in_prec': instr.in_prec, 'accum_prec': instr.accum_prec, 'chain': chain}, outputs)


@predict.command('de')
@common_options
@click.option('--chunk', default=None, help="Chunk size, e.g. '32KB'.")
@click.option('--concurrency', type=int, default=None)
@click.option('--curve', is_flag=True, help='Aggregate throughput over powers of two.')
@click.option('--format', 'fmt', default=None, help='Show a compression format profile.')
@click.option('--ratio', type=float, default=None, help='Compression ratio for sensitivity.')
@click.option('--output-rate', type=float, default=None, help='Pattern output GB/s for sensitivity.')
@click.option('--recommend', is_flag=True)
@click.option('--object-size', default=None, help="Typical object size, e.g. '48KB'.")
@click.option('--latency-budget', type=float, default=None, help='Milliseconds.')
@click.option('--kind', default='generic', show_default=True)
@cli_errors
def predict_de(gpu, output, spec_path, chunk, concurrency, curve, fmt, ratio, output_rate,
               recommend, object_size, latency_budget, kind):
    """Decompression Engine: batching, formats, sensitivity, recommendations."""
    spec = _machine(gpu, spec_path)
    inputs = {'gpu': spec.name}
    if recommend:
        if object_size is None or latency_budget is None:
            raise click.UsageError('--recommend needs --object-size and --latency-budget')
        size = parse_size(object_size, base=1024)
        inputs.update(object_bytes=size, latency_budget_ms=latency_budget, kind=kind)
        outputs = recommend_config(spec, size, latency_budget, kind)
    elif fmt:
        inputs['format'] = fmt
        outputs = format_profile(spec, fmt).__dict__
    elif ratio is not None or output_rate is not None:
        if ratio is None or output_rate is None:
            raise click.UsageError('sensitivity needs both --ratio and --output-rate')
        inputs.update(compression_ratio=ratio, output_gbps=output_rate)
        outputs = sensitivity(spec, ratio, output_rate)
    elif chunk is None:
        raise click.UsageError('give --chunk, --format, --ratio/--output-rate or --recommend')
    elif curve:
        size = parse_size(chunk, base=1024)
        inputs['chunk_bytes'] = size
        outputs = [p.__dict__ for p in batch_curve(spec, size).points]
    else:
        if concurrency is None:
            raise click.UsageError('--chunk needs --concurrency or --curve')
        size = parse_size(chunk, base=1024)
        inputs.update(chunk_bytes=size, concurrency=concurrency)
        outputs = batch_throughput(spec, size, concurrency)
    _emit(output, 'predict de', inputs, outputs)


@predict.command('tile')
@common_options
@click.option('--m', 'tile_m', type=int, default=None)
@click.option('--n', 'tile_n', type=int, default=None)
@click.option('--k', 'tile_k', type=int, default=None, help='Also report chained GEMM traffic.')
@click.option('--elem-bytes', type=int, default=2, show_default=True)
@click.option('--resident/--spilled', default=True, show_default=True)
@click.option('--curve', is_flag=True, help='Efficiency of square tiles from 16 to 256.')
@cli_errors
def predict_tile(gpu, output, spec_path, tile_m, tile_n, tile_k, elem_bytes, resident, curve):
    """TMEM tile efficiency and chained GEMM traffic."""
    spec = _machine(gpu, spec_path)
    if curve:
        _emit(output, 'predict tile', {'gpu': spec.name, 'curve': True},
              [p.__dict__ for p in tile_curve()])
        return
    if tile_m is None or tile_n is None:
        raise click.UsageError('give --m and --n, or --curve')
    row = {'tile_m': tile_m, 'tile_n': tile_n, 'efficiency': tile_efficiency(tile_m, tile_n)}
    if tile_k is not None:
        traffic = chained_gemm_traffic(spec, tile_m, tile_n, tile_k, elem_bytes, resident)
        row.update(traffic.to_dict())
    _emit(output, 'predict tile',
          {'gpu': spec.name, 'm': tile_m, 'n': tile_n, 'k': tile_k, 'resident': resident}, row)


def _calibration_set(gpu, spec_path):
    specs = CalibrationSet.load()
    if not spec_path:
        return specs
    override = resolve_spec(gpu, spec_path=spec_path)
    merged = dict(specs.specs)
    merged[gpu.upper()] = override
    return CalibrationSet(merged)


def _summary_row(report):
    worst = report.worst
    return {
        'table': report.table_id,
        'title': report.title,
        'passed': report.passed,
        'max_rel_error': report.max_rel_error,
        'cells': len(report.cells),
        'worst': worst.label if worst else None,
    }


@cli.command('reproduce')
@common_options
@click.argument('table_id', required=False)
@click.option('--all', 'run_all', is_flag=True, help='Every table, in order.')
@cli_errors
def reproduce_cmd(gpu, output, spec_path, table_id, run_all):
    """Recompute a reference table and compare it cell by cell."""
    if not run_all and not table_id:
        raise click.UsageError('give a table id (T1..T14) or --all')
    specs = _calibration_set(gpu, spec_path)
    if run_all:
        reports = reproduce_all(specs)
        _emit(output, 'reproduce', {'tables': table_ids()}, [_summary_row(r) for r in reports])
    else:
        reports = [reproduce(table_id, specs)]
        report = reports[0]
        outputs = [dict(c.to_dict(), extrapolated=c.extrapolated) for c in report.cells]
        _emit(output, 'reproduce', {'table': report.table_id}, outputs)

    failed = [r for r in reports if not r.passed]
    for report in failed:
        worst = report.worst
        detail = f' (rel error {worst.rel_error:.4g})' if worst.rel_error is not None else ''
        click.echo(f'error[reproduction_failed]: {report.table_id} worst cell {worst.label}{detail}',
                   err=True)
    if failed:
        raise SystemExit(REPRODUCTION_FAILED)


@cli.command('quantize')
@common_options
@click.argument('vector_file', type=click.Path(exists=True, dir_okay=False))
@click.option('--format', 'fmt', required=True, help='e2m1, e4m3, mxfp4, nvfp4, ...')
@click.option('--codes-out', type=click.Path(dir_okay=False), default=None,
              help='Defaults to <vector_file>.codes')
@cli_errors
def quantize_cmd(gpu, output, spec_path, vector_file, fmt, codes_out):
    """Quantize a vector file and report error statistics."""
    fmt_obj = get_format(fmt)
    vector = load_vector(vector_file)
    codes_path = Path(codes_out or f'{vector_file}.codes')
    codes_path.write_text('\n'.join(code_lines(fmt_obj, vector)) + '\n', encoding='utf-8')
    try:
        row = quant_error_stats(fmt_obj, vector).to_dict()
    except DegenerateSignal as e:
        logger.warning('quantize: %s', e.message)
        row = dict(e.stats.to_dict(), sqnr_db=None, notes=[e.message])
    _emit(output, 'quantize',
          {'format': fmt_obj.name, 'values': int(vector.size), 'codes_out': str(codes_path)}, row)


@cli.command('fit-de')
@common_options
@click.argument('csv_path', type=click.Path(exists=True, dir_okay=False))
@click.option('--chunk', required=True, help="Chunk size, e.g. '256KB'.")
@click.option('--write', 'write_path', type=click.Path(dir_okay=False), default=None,
              help='Write a machine-file fragment.')
@cli_errors
def fit_de_cmd(gpu, output, spec_path, csv_path, chunk, write_path):
    """Fit the batching law to measured concurrency,gbps points."""
    size = parse_size(chunk, base=1024)
    fit = fit_chunk_model(load_measurements(csv_path), chunk_bytes=size)
    if write_path:
        Path(write_path).write_text(dump_chunk_profile(fit.profile) + '\n', encoding='utf-8')
    row = dict(fit.profile.__dict__, residual_rms=fit.residual_rms, points=fit.points)
    _emit(output, 'fit-de', {'csv': csv_path, 'chunk_bytes': size}, row)


@cli.command('ledger')
@common_options
@cli_errors
def ledger_cmd(gpu, output, spec_path):
    """List recorded conflicts between published values."""
    specs = _calibration_set(gpu, spec_path)
    _emit(output, 'ledger', {}, ledger_entries(specs))


@cli.command('serve')
@click.option('--host', default=Config.HOST, show_default=True)
@click.option('--port', type=int, default=Config.PORT, show_default=True)
def serve(host, port):
    """Serve the JSON API."""
    from app import create_app
    create_app().run(host=host, port=port)


if __name__ == '__main__':
    cli()
