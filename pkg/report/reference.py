import csv
import io
import re
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Mapping, Tuple

from utils.errors import ParseError, PreconditionError

REFERENCE_DIR = Path(__file__).resolve().parent / 'reference'
NA = 'N/A'
TABLE_COUNT = 14

TITLES = {
    'T1': 'Decompression Engine format profiles',
    'T2': 'Compression ratio sensitivity (LZ4, 100 MB)',
    'T3': 'Decompression pipeline depth by chunk size',
    'T4': 'SASS opcode mapping',
    'T5': 'Single-instruction MMA latency, wgmma vs tcgen05',
    'T6': 'Tensor Core instruction characterisation (B200)',
    'T7': 'Tensor Core throughput by precision',
    'T8': 'LLM inference across precisions (batch 32, seq 2048)',
    'T9': 'Latency vs batch size (Mixtral-8x7B FP8)',
    'T10': 'Performance summary across workloads',
    'T11': 'End-to-end training',
    'T12': 'DGEMM FP64',
    'T13': 'STREAM Triad bandwidth',
    'T14': 'SpMV with hardware decompression',
}

_ID_RE = re.compile(r'^t?0*(\d+)$', re.IGNORECASE)


def normalize_table_id(table_id):
    """'t05', '5' and 'T5' all name table T5"""
    match = _ID_RE.match(str(table_id).strip())
    if not match or not 1 <= int(match.group(1)) <= TABLE_COUNT:
        raise PreconditionError(f'unknown table {table_id!r}; expected T1..T{TABLE_COUNT}')
    return f'T{int(match.group(1))}'


def table_ids():
    return [f'T{i}' for i in range(1, TABLE_COUNT + 1)]


def parse_cell(text):
    """N/A -> None, numbers -> float, anything else stays text"""
    text = text.strip()
    if text == NA:
        return None
    try:
        return float(text.replace(',', ''))
    except ValueError:
        return text


@dataclass(frozen=True)
class ReferenceTable:
    id: str
    title: str
    columns: Tuple[str, ...]
    rows: Tuple[Mapping[str, str], ...]

    def key(self, row, key_columns):
        return tuple(row[c].strip() for c in key_columns)

    def __len__(self):
        return len(self.rows)


def parse_reference(text, table_id, source=None):
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError('empty reference table', source=source) from None
    columns = tuple(h.strip() for h in header)
    rows = []
    for line_no, cells in enumerate(reader, start=2):
        if not cells:
            continue
        if len(cells) != len(columns):
            raise ParseError(f'expected {len(columns)} cells, got {len(cells)}', line_no, 1, source)
        rows.append(dict(zip(columns, cells)))
    return ReferenceTable(table_id, TITLES.get(table_id, ''), columns, tuple(rows))


@lru_cache(maxsize=None)
def load_reference(table_id):
    table_id = normalize_table_id(table_id)
    path = REFERENCE_DIR / f'T{int(table_id[1:]):02d}.csv'
    return parse_reference(path.read_text(encoding='utf-8'), table_id, source=path.name)
