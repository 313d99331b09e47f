from flask import Blueprint, jsonify

from calibration import derived_peaks, resolve_spec
from calibration.presets import PROVENANCE
from report import ledger_entries, reproduce
from utils.decorators import api_errors

reference_bp = Blueprint('reference', __name__)


@reference_bp.route('/reproduce/<table_id>')
@api_errors
def reproduce_table(table_id):
    report = reproduce(table_id)
    body = report.to_dict()
    body['cells'] = report.rows()
    return jsonify({'status': 'ok', 'report': body})


@reference_bp.route('/ledger')
@api_errors
def ledger():
    return jsonify({'status': 'ok', 'entries': [e.to_dict() for e in ledger_entries()]})


@reference_bp.route('/machines/<name>')
@api_errors
def machine(name):
    spec = resolve_spec(name)
    return jsonify({
        'status': 'ok',
        'machine': {
            'name': spec.name,
            'generation': spec.generation,
            'isa': spec.isa,
            'sm_count': spec.sm_count,
            'hbm_capacity_bytes': spec.hbm_capacity,
            'hbm_peak_bw_bytes_per_s': spec.hbm_peak_bw,
            'precisions': sorted(spec.peaks),
            'unsupported': list(spec.unsupported),
            'derived_peaks': derived_peaks(spec),
            'tmem': spec.tmem is not None,
            'decompression_engine': spec.de is not None,
            'optimal_tile_dim': spec.memory.optimal_tile_dim,
            'board_power_watts': spec.power['board_power_watts'],
        },
        'provenance': PROVENANCE,
    })
