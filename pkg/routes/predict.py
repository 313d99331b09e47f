from flask import Blueprint, current_app, jsonify, request

from calibration import resolve_spec
from perfmodel import (
    MmaInstr, batch_throughput, dgemm_fp64, instr_latency, llm_latency, llm_throughput,
    peak_throughput, spmv, stream_triad, tile_curve, tile_efficiency, training_throughput,
)
from utils.decorators import api_errors
from utils.errors import PreconditionError, UnknownFormat
from utils.units import parse_size

predict_bp = Blueprint('predict', __name__)

_REQUIRED = object()


def _arg(name, type=str, default=_REQUIRED):
    raw = request.args.get(name)
    if raw is None:
        if default is _REQUIRED:
            raise PreconditionError(f'missing query parameter {name!r}')
        return default
    try:
        return type(raw)
    except ValueError:
        raise PreconditionError(f'query parameter {name!r} is not a valid {type.__name__}') from None


def _flag(name, default=True):
    raw = request.args.get(name)
    if raw is None:
        return default
    return raw.lower() in ('1', 'true', 'yes')


def _baseline(spec):
    name = current_app.config['BASELINE_GPU']
    if spec.name.lower() == name.lower():
        return None
    return resolve_spec(name)


def _tile(spec, baseline):
    if _flag('curve', default=False):
        return [p.__dict__ for p in tile_curve()]
    m, n = _arg('m', int), _arg('n', int)
    return {'tile_m': m, 'tile_n': n, 'efficiency': tile_efficiency(m, n)}


PREDICTORS = {
    'dgemm': lambda s, b: dgemm_fp64(s, _arg('n', int), baseline=b),
    'llm': lambda s, b: llm_throughput(s, _arg('model'), _arg('precision'), _arg('batch', int, 32),
                                       _arg('seq', int, 2048), baseline=b),
    'latency': lambda s, b: llm_latency(s, _arg('batch', int), _arg('seq', int, 2048), baseline=b),
    'stream': lambda s, b: stream_triad(s, parse_size(_arg('array_size')), baseline=b),
    'spmv': lambda s, b: spmv(s, _arg('matrix'), _flag('compressed'), baseline=b),
    'training': lambda s, b: training_throughput(s, _arg('model'), _arg('batch', int), baseline=b),
    'peak': lambda s, b: peak_throughput(s, _arg('precision'), baseline=b),
    'mma': lambda s, b: instr_latency(s, MmaInstr.parse(_arg('isa', str, s.isa), _arg('shape'),
                                                       _arg('in_prec', str, 'fp16'),
                                                       _arg('accum_prec', str, 'fp32'))),
    'de': lambda s, b: batch_throughput(s, parse_size(_arg('chunk'), base=1024), _arg('concurrency', int)),
    'tile': _tile,
}


@predict_bp.route('/predict/<kind>')
@api_errors
def predict(kind):
    if kind not in PREDICTORS:
        raise UnknownFormat(f'unknown prediction kind {kind!r}; expected one of {", ".join(sorted(PREDICTORS))}')
    spec = resolve_spec(request.args.get('gpu', 'B200'))
    result = PREDICTORS[kind](spec, _baseline(spec))
    payload = result.to_dict() if hasattr(result, 'to_dict') else result
    return jsonify({'status': 'ok', 'kind': kind, 'gpu': spec.name, 'prediction': payload})
