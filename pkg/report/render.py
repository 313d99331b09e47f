"""Deterministic table, CSV and JSON output."""
import csv
import io
import json
import math

from models import Prediction

DECIMALS = 4
NA = 'N/A'


def format_value(value):
    if value is None:
        return NA
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        if not math.isfinite(value):
            return str(value)
        text = f'{round(value, DECIMALS):.{DECIMALS}f}'.rstrip('0').rstrip('.')
        return '0' if text == '-0' else text
    if isinstance(value, (list, tuple)):
        return '; '.join(format_value(v) for v in value)
    return str(value)


def _json_safe(value):
    if isinstance(value, float):
        if not math.isfinite(value):
            return str(value)
        return round(value, DECIMALS)
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if hasattr(value, 'to_dict'):
        return _json_safe(value.to_dict())
    return value


def prediction_row(pred):
    row = {
        'metric': pred.metric,
        'value': pred.value,
        'unit': pred.unit,
        'bottleneck': pred.bottleneck,
        'baseline': pred.baseline,
        'ratio': pred.ratio,
        'extrapolated': pred.extrapolated,
    }
    for key in sorted(pred.extras):
        value = pred.extras[key]
        if isinstance(value, dict):
            for sub in sorted(value):
                row[f'{key}.{sub}'] = value[sub]
        else:
            row[key] = value
    row['notes'] = list(pred.notes)
    return row


def to_rows(obj):
    """List of flat dicts from a Prediction, a result with ``to_dict`` or plain rows"""
    if isinstance(obj, Prediction):
        return [prediction_row(obj)]
    if isinstance(obj, dict):
        return [obj]
    if hasattr(obj, 'to_dict'):
        return [obj.to_dict()]
    rows = []
    for item in obj:
        rows.extend(to_rows(item))
    return rows


def _columns(rows):
    columns = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    return columns


def render_table(rows):
    rows = to_rows(rows)
    if not rows:
        return ''
    columns = _columns(rows)
    cells = [[format_value(row.get(c)) for c in columns] for row in rows]
    widths = [max(len(c), *(len(r[i]) for r in cells)) for i, c in enumerate(columns)]
    lines = ['  '.join(c.ljust(w) for c, w in zip(columns, widths)).rstrip()]
    lines.append('  '.join('-' * w for w in widths))
    for r in cells:
        lines.append('  '.join(v.ljust(w) for v, w in zip(r, widths)).rstrip())
    return '\n'.join(lines) + '\n'


def render_csv(rows):
    rows = to_rows(rows)
    if not rows:
        return ''
    columns = _columns(rows)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator='\n')
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row.get(c)) for c in columns])
    return out.getvalue()


def envelope(command, inputs, outputs, extrapolated=False, errors=()):
    return {
        'command': command,
        'inputs': inputs,
        'outputs': outputs,
        'extrapolated': extrapolated,
        'errors': list(errors),
    }


def render_json(command, inputs, outputs, extrapolated=False, errors=()):
    payload = _json_safe(envelope(command, inputs, to_rows(outputs) if outputs is not None else [],
                                  extrapolated, errors))
    return json.dumps(payload, sort_keys=True, indent=2) + '\n'


def render(fmt, command, inputs, outputs, extrapolated=False):
    if fmt == 'json':
        return render_json(command, inputs, outputs, extrapolated)
    if fmt == 'csv':
        return render_csv(outputs)
    return render_table(outputs)
