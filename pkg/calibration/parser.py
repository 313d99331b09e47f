"""Machine-file reader and writer.

A machine file is line oriented: ``[section]`` headers, ``key = value``
entries and ``#`` comments.  Values are decimal numbers, double-quoted
strings or comma-separated lists of either.  Unit suffixes live in the key
names (``read_bw_tbps``, ``capacity_kib``), the loaded ``GpuSpec`` holds SI
units.
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from utils.errors import ParseError, ValidationError
from .spec_types import (
    GB, ISAS, KIB, PRECISIONS, TB,
    ChunkProfile, DeFormatProfile, DeParams, Decomposition, DgemmPoint, GpuSpec,
    InstrEntry, LlmCell, LlmLatency, MemoryParams, PatternProfile, PeakEntry,
    SpmvCell, StreamEff, TensorLatency, TmemParams, TrainingCell,
)

logger = logging.getLogger(__name__)

_HEADER_RE = re.compile(r'^\[([A-Za-z0-9_.\-]+)\]$')
_KEY_RE = re.compile(r'^[a-z][a-z0-9_]*$')
_NUMBER_RE = re.compile(r'[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?')

_PEAK_KEY_RE = re.compile(r'^([a-z0-9]+)_(tflops|tops|pct)$')
_LATENCY_KEY_RE = re.compile(r'^(tcgen05|wgmma)_(m\d+n\d+k\d+)_cycles$')
_DGEMM_KEY_RE = re.compile(r'^n_(\d+)$')
_BATCH_KEY_RE = re.compile(r'^batch_(\d+)_ms$')

REQUIRED_SECTIONS = ('gpu', 'tensor.peak', 'memory')


@dataclass(frozen=True)
class Entry:
    value: object
    line: int
    column: int


@dataclass
class Section:
    name: str
    line: int
    entries: dict


# --- lexing ---

def _strip_comment(line):
    in_string = False
    for i, ch in enumerate(line):
        if ch == '"':
            in_string = not in_string
        elif ch == '#' and not in_string:
            return line[:i]
    return line


def _parse_item(text, pos, line_no, source):
    if text[pos] == '"':
        end = text.find('"', pos + 1)
        if end < 0:
            raise ParseError('unterminated string', line_no, pos + 1, source)
        return text[pos + 1:end], end + 1
    match = _NUMBER_RE.match(text, pos)
    if not match:
        raise ParseError(f'expected a number or quoted string near {text[pos:pos + 12]!r}',
                         line_no, pos + 1, source)
    return float(match.group(0)), match.end()


def _parse_value(text, offset, line_no, source):
    """Parse the right-hand side of an entry starting at ``offset``"""
    items = []
    pos = offset
    while True:
        while pos < len(text) and text[pos] in ' \t':
            pos += 1
        if pos >= len(text):
            raise ParseError('missing value', line_no, pos + 1, source)
        item, pos = _parse_item(text, pos, line_no, source)
        items.append(item)
        while pos < len(text) and text[pos] in ' \t':
            pos += 1
        if pos >= len(text):
            break
        if text[pos] != ',':
            raise ParseError(f'unexpected {text[pos]!r}', line_no, pos + 1, source)
        pos += 1
    return items[0] if len(items) == 1 else tuple(items)


def tokenize(text, source=None):
    """Split a machine file into sections of raw entries"""
    sections = []
    seen = set()
    current = None
    for line_no, raw in enumerate(text.split('\n'), start=1):
        line = _strip_comment(raw.rstrip('\r')).rstrip()
        stripped = line.strip()
        if not stripped:
            continue
        indent = len(line) - len(line.lstrip())
        if stripped.startswith('['):
            match = _HEADER_RE.match(stripped)
            if not match:
                raise ParseError('malformed section header', line_no, indent + 1, source)
            name = match.group(1)
            if name in seen:
                raise ParseError(f'duplicate section [{name}]', line_no, indent + 1, source)
            seen.add(name)
            current = Section(name, line_no, {})
            sections.append(current)
            continue
        if '=' not in stripped:
            raise ParseError("expected 'key = value'", line_no, indent + 1, source)
        if current is None:
            raise ParseError('entry outside of any section', line_no, indent + 1, source)
        eq = line.index('=')
        key = line[:eq].strip()
        if not _KEY_RE.match(key):
            raise ParseError(f'invalid key {key!r}', line_no, indent + 1, source)
        if key in current.entries:
            raise ParseError(f'duplicate key {key!r} in [{current.name}]', line_no, indent + 1, source)
        value = _parse_value(line, eq + 1, line_no, source)
        current.entries[key] = Entry(value, line_no, indent + 1)
    return sections


# --- typed access to one section ---

class _Reader:
    def __init__(self, section, source):
        self.section = section
        self.source = source
        self.used = set()

    def error(self, message, key=None):
        if key is not None and key in self.section.entries:
            entry = self.section.entries[key]
            return ParseError(f'[{self.section.name}] {key}: {message}', entry.line, entry.column, self.source)
        return ParseError(f'[{self.section.name}] {message}', self.section.line, 1, self.source)

    def keys(self):
        return list(self.section.entries)

    def raw(self, key, required):
        if key not in self.section.entries:
            if required:
                raise self.error(f'missing required key {key!r}')
            return None
        self.used.add(key)
        return self.section.entries[key].value

    def num(self, key, required=True, scale=1.0):
        value = self.raw(key, required)
        if value is None:
            return None
        if not isinstance(value, float):
            raise self.error('expected a number', key)
        return value * scale

    def int_(self, key, required=True):
        value = self.num(key, required)
        if value is None:
            return None
        if not value.is_integer():
            raise self.error('expected an integer', key)
        return int(value)

    def text(self, key, required=True):
        value = self.raw(key, required)
        if value is None:
            return None
        if not isinstance(value, str):
            raise self.error('expected a quoted string', key)
        return value

    def numbers(self, key, required=True, count=None):
        value = self.raw(key, required)
        if value is None:
            return None
        items = value if isinstance(value, tuple) else (value,)
        if not all(isinstance(v, float) for v in items):
            raise self.error('expected a list of numbers', key)
        if count is not None and len(items) != count:
            raise self.error(f'expected {count} numbers', key)
        return tuple(items)

    def texts(self, key, required=True):
        value = self.raw(key, required)
        if value is None:
            return ()
        items = value if isinstance(value, tuple) else (value,)
        if not all(isinstance(v, str) for v in items):
            raise self.error('expected a list of quoted strings', key)
        return tuple(items)

    def finish(self):
        for key in self.section.entries:
            if key not in self.used:
                raise self.error('unknown key', key)


def _pct(value):
    return None if value is None else value / 100.0


# --- section builders ---

def _read_gpu(r):
    isa = r.text('isa')
    if isa not in ISAS:
        raise r.error(f'isa must be one of {", ".join(ISAS)}', 'isa')
    fields = dict(
        name=r.text('name'),
        generation=r.text('generation', required=False) or '',
        isa=isa,
        sm_count=r.int_('sm_count'),
        transistors=r.num('transistors_billion', required=False),
        dies=r.int_('dies', required=False),
    )
    r.finish()
    return fields


def _read_peaks(r):
    throughput, pct = {}, {}
    unsupported = r.texts('unsupported', required=False)
    for key in r.keys():
        if key == 'unsupported':
            continue
        match = _PEAK_KEY_RE.match(key)
        if not match or match.group(1) not in PRECISIONS:
            raise r.error('unknown key', key)
        prec, kind = match.groups()
        if kind == 'pct':
            pct[prec] = r.num(key)
        else:
            throughput[prec] = (r.num(key), kind.upper())
    for prec in pct:
        if prec not in throughput:
            raise r.error(f'{prec}_pct given without a throughput', f'{prec}_pct')
    peaks = {
        prec: PeakEntry(value, unit, _pct(pct.get(prec)))
        for prec, (value, unit) in throughput.items()
    }
    r.finish()
    return peaks, tuple(u.lower() for u in unsupported)


def _read_latency(r):
    tiles = {}
    for key in r.keys():
        match = _LATENCY_KEY_RE.match(key)
        if match:
            tiles[(match.group(1), match.group(2))] = r.num(key)
    latency = TensorLatency(
        tiles=tiles,
        wgmma_base_cycles=r.num('wgmma_base_cycles', required=False),
        wgmma_n_block=r.int_('wgmma_n_block', required=False),
        scheduler_stall_reduction_pct=r.numbers('scheduler_stall_reduction_pct', required=False, count=2),
    )
    r.finish()
    return latency


def _read_instr(r, in_prec, accum_prec):
    tflops = r.num('throughput_tflops', required=False)
    tops = r.num('throughput_tops', required=False)
    if (tflops is None) == (tops is None):
        raise r.error('exactly one of throughput_tflops / throughput_tops is required')
    entry = InstrEntry(
        in_prec=in_prec,
        accum_prec=accum_prec,
        shape=r.text('shape'),
        latency_cycles=r.num('latency_cycles'),
        throughput=tflops if tflops is not None else tops,
        unit='TFLOPS' if tflops is not None else 'TOPS',
    )
    r.finish()
    return entry


def _read_memory(r):
    memory = MemoryParams(
        hbm_capacity=r.num('hbm_capacity_gb', scale=GB),
        hbm_peak_bw=r.num('hbm_peak_bw_tbps', scale=TB),
        global_miss_latency=r.num('global_miss_latency_cycles', required=False),
        l2_hit_rate_pct=r.numbers('l2_hit_rate_pct', required=False, count=2),
        optimal_tile_dim=r.int_('optimal_tile_dim', required=False),
    )
    r.finish()
    return memory


def _read_stream(r):
    stream = StreamEff(
        small_fraction=_pct(r.num('small_pct')),
        large_fraction=_pct(r.num('large_pct')),
        threshold_bytes=r.num('threshold_gb', scale=GB),
    )
    r.finish()
    return stream


def _read_dgemm(r):
    points = []
    for key in r.keys():
        match = _DGEMM_KEY_RE.match(key)
        if not match:
            raise r.error('unknown key', key)
        tflops, pct = r.numbers(key, count=2)
        points.append(DgemmPoint(int(match.group(1)), tflops, _pct(pct)))
    r.finish()
    return tuple(sorted(points, key=lambda p: p.dim))


def _read_tmem(r):
    capacity = r.num('capacity_kib', scale=KIB)
    tmem = TmemParams(
        capacity=int(capacity),
        lanes=r.int_('lanes'),
        columns=r.int_('columns'),
        cell_bits=r.int_('cell_bits'),
        read_bw=r.num('read_bw_tbps', scale=TB),
        write_bw=r.num('write_bw_tbps', scale=TB),
        miss_latency=r.num('miss_latency_cycles'),
        baseline_miss_latency=r.num('baseline_miss_latency_cycles'),
        sustained_mma_bw=r.num('sustained_mma_bw_tbps', scale=TB),
        global_path_bw=r.num('global_path_bw_tbps', scale=TB),
    )
    r.finish()
    return tmem


def _read_decomp(r):
    defaults = DeParams()
    fields = dict(
        output_ceiling=r.numbers('output_ceiling_gbps', required=False, count=2) or defaults.output_ceiling,
        nominal_ceiling_gbps=_default(r.num('nominal_ceiling_gbps', required=False), defaults.nominal_ceiling_gbps),
        efficiency_threshold=_default(r.num('efficiency_threshold', required=False), defaults.efficiency_threshold),
        saturation_margin=_default(r.num('saturation_margin', required=False), defaults.saturation_margin),
        latency_overhead_ms=_default(r.num('latency_overhead_ms', required=False), defaults.latency_overhead_ms),
    )
    r.finish()
    return fields


def _default(value, fallback):
    return fallback if value is None else value


def _read_format(r, name):
    profile = DeFormatProfile(
        name=name,
        output_gbps=r.num('output_gbps'),
        latency_ms=r.num('latency_ms'),
        compression_ratio=r.num('compression_ratio', required=False),
        input_gbps=r.num('input_gbps', required=False),
        use_case=r.text('use_case', required=False) or '',
    )
    r.finish()
    return profile


def _read_chunk(r, chunk_bytes):
    profile = ChunkProfile(
        chunk_bytes=chunk_bytes,
        single_rate_gbps=r.num('single_rate_gbps'),
        pipeline_depth=r.int_('pipeline_depth'),
        saturation_batch=r.int_('saturation_batch'),
        peak_gbps=r.num('peak_gbps'),
        max_speedup=r.num('max_speedup'),
    )
    r.finish()
    return profile


def _read_pattern(r, name):
    profile = PatternProfile(
        name=name,
        compression_ratio=r.num('compression_ratio'),
        output_gbps=r.num('output_gbps'),
        input_gbps=r.num('input_gbps', required=False),
        latency_ms=r.num('latency_ms', required=False),
    )
    r.finish()
    return profile


def _read_llm(r, model, precision):
    cell = LlmCell(
        model=model,
        precision=precision,
        batch=r.int_('batch'),
        seq_len=r.int_('seq_len'),
        tokens_per_s=r.num('tokens_per_s'),
        bw_pct=_pct(r.num('bw_pct', required=False)),
        perplexity=r.num('perplexity', required=False),
        delta_ppl_pct=r.num('delta_ppl_pct', required=False),
    )
    r.finish()
    return cell


def _read_llm_latency(r):
    points = []
    for key in r.keys():
        match = _BATCH_KEY_RE.match(key)
        if match:
            points.append((int(match.group(1)), r.num(key)))
    table = LlmLatency(
        model=r.text('model'),
        precision=r.text('precision'),
        seq_len=r.int_('seq_len'),
        points=tuple(sorted(points)),
        pipeline_stages=r.numbers('pipeline_stages', required=False, count=2),
        p99_median_ratio=r.numbers('p99_median_ratio', required=False, count=2),
    )
    r.finish()
    if not table.points:
        raise r.error('no batch_<b>_ms points')
    return table


def _read_training(r, model, batch):
    cell = TrainingCell(
        model=model,
        batch=batch,
        throughput=r.num('throughput'),
        unit=r.text('unit'),
        time_to_accuracy_hrs=r.num('time_to_accuracy_hrs', required=False),
        per_watt=r.num('per_watt', required=False),
    )
    r.finish()
    return cell


def _read_spmv(r, matrix):
    cell = SpmvCell(
        matrix=matrix,
        gflops=r.num('gflops'),
        sparsity_pct=r.num('sparsity_pct', required=False),
        speedup=r.num('speedup', required=False),
        time_ms=r.num('time_ms', required=False),
    )
    r.finish()
    return cell


def _read_decomposition(r, kind):
    factors = r.numbers('factors')
    labels = r.texts('labels', required=False)
    if labels and len(labels) != len(factors):
        raise r.error('labels and factors differ in length', 'labels')
    item = Decomposition(kind=kind, factors=factors, labels=labels, measured=r.numbers('measured', count=2))
    r.finish()
    return item


def _read_single(r, key, **kwargs):
    value = r.num(key, **kwargs)
    r.finish()
    return value


# --- assembly ---

def _route(name):
    """Map a header to (kind, captured parts)"""
    fixed = {'gpu', 'tensor.peak', 'tensor.latency', 'memory', 'stream', 'dgemm', 'tmem',
             'decomp', 'llm_latency', 'attention'}
    if name in fixed:
        return name, ()
    patterns = (
        ('tensor.instr', r'^tensor\.instr\.([a-z0-9]+)\.([a-z0-9]+)$'),
        ('decomp.format', r'^decomp\.format\.([a-z0-9_\-]+)$'),
        ('decomp.chunk', r'^decomp\.chunk\.(\d+)$'),
        ('decomp.pattern', r'^decomp\.pattern\.([a-z0-9_\-]+)$'),
        ('llm', r'^llm\.(.+)\.([a-z0-9]+)$'),
        ('training', r'^training\.(.+)\.(\d+)$'),
        ('spmv', r'^spmv\.(.+)$'),
        ('decomposition', r'^decomposition\.([a-z0-9_\-]+)$'),
    )
    for kind, pattern in patterns:
        match = re.match(pattern, name)
        if match:
            return kind, match.groups()
    return None, ()


def parse_machine_file(text, source=None):
    """Parse without running ``validate_spec``"""
    fields = {}
    peaks = unsupported = None
    instr, llm, training, spmv, decompositions = {}, {}, {}, {}, {}
    formats, chunks, patterns = {}, {}, {}
    de_fields = None
    seen_kinds = set()

    for section in tokenize(text, source):
        kind, parts = _route(section.name)
        r = _Reader(section, source)
        if kind is None:
            raise ParseError(f'unknown section [{section.name}]', section.line, 1, source)
        seen_kinds.add(kind)
        if kind == 'gpu':
            fields.update(_read_gpu(r))
        elif kind == 'tensor.peak':
            peaks, unsupported = _read_peaks(r)
        elif kind == 'tensor.latency':
            fields['latency'] = _read_latency(r)
        elif kind == 'tensor.instr':
            instr[parts] = _read_instr(r, *parts)
        elif kind == 'memory':
            fields['memory'] = _read_memory(r)
        elif kind == 'stream':
            fields['stream'] = _read_stream(r)
        elif kind == 'dgemm':
            fields['dgemm'] = _read_dgemm(r)
        elif kind == 'tmem':
            fields['tmem'] = _read_tmem(r)
        elif kind == 'decomp':
            de_fields = _read_decomp(r)
        elif kind == 'decomp.format':
            formats[parts[0]] = _read_format(r, parts[0])
        elif kind == 'decomp.chunk':
            chunks[int(parts[0])] = _read_chunk(r, int(parts[0]))
        elif kind == 'decomp.pattern':
            patterns[parts[0]] = _read_pattern(r, parts[0])
        elif kind == 'llm':
            llm[parts] = _read_llm(r, *parts)
        elif kind == 'llm_latency':
            fields['llm_latency'] = _read_llm_latency(r)
        elif kind == 'training':
            training[(parts[0], int(parts[1]))] = _read_training(r, parts[0], int(parts[1]))
        elif kind == 'spmv':
            spmv[parts[0]] = _read_spmv(r, parts[0])
        elif kind == 'attention':
            fields['attention_block_us'] = _read_single(r, 'block_latency_us')
        elif kind == 'decomposition':
            decompositions[parts[0]] = _read_decomposition(r, parts[0])

    for required in REQUIRED_SECTIONS:
        if required not in seen_kinds:
            raise ParseError(f'missing required section [{required}]', source=source)

    if de_fields is None and (formats or chunks or patterns):
        raise ParseError('decomp.* sections require a [decomp] section', source=source)
    if de_fields is not None:
        fields['de'] = DeParams(format_profiles=formats, chunk_profiles=chunks, patterns=patterns, **de_fields)

    return GpuSpec(
        peaks=peaks,
        unsupported=unsupported,
        instr=instr,
        llm=llm,
        training=training,
        spmv=spmv,
        decompositions=decompositions,
        **fields,
    )


def load_machine_file(text, source=None):
    """Parse and validate a machine description"""
    from .validation import validate_spec

    spec = parse_machine_file(text, source)
    violations = validate_spec(spec)
    if violations:
        raise ValidationError(violations)
    logger.debug('loaded machine %s from %s', spec.name, source or '<text>')
    return spec


def load_machine_path(path):
    with open(path, encoding='utf-8') as fh:
        return load_machine_file(fh.read(), source=str(path))


# --- writing ---

def _fmt(value):
    if isinstance(value, str):
        return f'"{value}"'
    if isinstance(value, bool):
        raise TypeError('booleans are not machine-file values')
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def _scaled(value, scale):
    return round(value / scale, 10)


def _line(key, value):
    if isinstance(value, (tuple, list)):
        return f'{key} = {", ".join(_fmt(v) for v in value)}'
    return f'{key} = {_fmt(value)}'


def _block(header, items):
    lines = [f'[{header}]']
    lines.extend(_line(key, value) for key, value in items if value is not None)
    return '\n'.join(lines)


def _pct_out(fraction):
    return None if fraction is None else round(fraction * 100.0, 10)


def dump_chunk_profile(profile, size=None):
    """One [decomp.chunk.<bytes>] section"""
    size = profile.chunk_bytes if size is None else size
    return _block(f'decomp.chunk.{size}', [
        ('single_rate_gbps', profile.single_rate_gbps),
        ('pipeline_depth', profile.pipeline_depth),
        ('saturation_batch', profile.saturation_batch),
        ('peak_gbps', profile.peak_gbps),
        ('max_speedup', profile.max_speedup),
    ])


def dump_machine_file(spec):
    """Canonical text for ``spec``; reloading it gives an equal GpuSpec"""
    blocks = [_block('gpu', [
        ('name', spec.name),
        ('generation', spec.generation or None),
        ('isa', spec.isa),
        ('sm_count', spec.sm_count),
        ('transistors_billion', spec.transistors),
        ('dies', spec.dies),
    ])]

    peak_items = []
    for prec, entry in spec.peaks.items():
        peak_items.append((f'{prec}_{entry.unit.lower()}', entry.throughput))
        peak_items.append((f'{prec}_pct', _pct_out(entry.pct_of_peak)))
    if spec.unsupported:
        peak_items.append(('unsupported', tuple(spec.unsupported)))
    blocks.append(_block('tensor.peak', peak_items))

    if spec.latency is not None:
        lat = spec.latency
        items = [(f'{isa}_{shape}_cycles', cycles) for (isa, shape), cycles in lat.tiles.items()]
        items += [
            ('wgmma_base_cycles', lat.wgmma_base_cycles),
            ('wgmma_n_block', lat.wgmma_n_block),
            ('scheduler_stall_reduction_pct', lat.scheduler_stall_reduction_pct),
        ]
        blocks.append(_block('tensor.latency', items))

    for (in_prec, accum), entry in spec.instr.items():
        unit_key = 'throughput_tops' if entry.unit == 'TOPS' else 'throughput_tflops'
        blocks.append(_block(f'tensor.instr.{in_prec}.{accum}', [
            ('shape', entry.shape),
            ('latency_cycles', entry.latency_cycles),
            (unit_key, entry.throughput),
        ]))

    mem = spec.memory
    blocks.append(_block('memory', [
        ('hbm_capacity_gb', _scaled(mem.hbm_capacity, GB)),
        ('hbm_peak_bw_tbps', _scaled(mem.hbm_peak_bw, TB)),
        ('global_miss_latency_cycles', mem.global_miss_latency),
        ('l2_hit_rate_pct', mem.l2_hit_rate_pct),
        ('optimal_tile_dim', mem.optimal_tile_dim),
    ]))

    if spec.stream is not None:
        blocks.append(_block('stream', [
            ('small_pct', _pct_out(spec.stream.small_fraction)),
            ('large_pct', _pct_out(spec.stream.large_fraction)),
            ('threshold_gb', _scaled(spec.stream.threshold_bytes, GB)),
        ]))

    if spec.dgemm:
        blocks.append(_block('dgemm', [
            (f'n_{p.dim}', (p.tflops, _pct_out(p.fraction))) for p in spec.dgemm
        ]))

    if spec.tmem is not None:
        t = spec.tmem
        blocks.append(_block('tmem', [
            ('capacity_kib', _scaled(t.capacity, KIB)),
            ('lanes', t.lanes),
            ('columns', t.columns),
            ('cell_bits', t.cell_bits),
            ('read_bw_tbps', _scaled(t.read_bw, TB)),
            ('write_bw_tbps', _scaled(t.write_bw, TB)),
            ('miss_latency_cycles', t.miss_latency),
            ('baseline_miss_latency_cycles', t.baseline_miss_latency),
            ('sustained_mma_bw_tbps', _scaled(t.sustained_mma_bw, TB)),
            ('global_path_bw_tbps', _scaled(t.global_path_bw, TB)),
        ]))

    if spec.de is not None:
        de = spec.de
        blocks.append(_block('decomp', [
            ('output_ceiling_gbps', tuple(de.output_ceiling)),
            ('nominal_ceiling_gbps', de.nominal_ceiling_gbps),
            ('efficiency_threshold', de.efficiency_threshold),
            ('saturation_margin', de.saturation_margin),
            ('latency_overhead_ms', de.latency_overhead_ms),
        ]))
        for name, p in de.format_profiles.items():
            blocks.append(_block(f'decomp.format.{name}', [
                ('compression_ratio', p.compression_ratio),
                ('input_gbps', p.input_gbps),
                ('output_gbps', p.output_gbps),
                ('latency_ms', p.latency_ms),
                ('use_case', p.use_case or None),
            ]))
        for size, c in de.chunk_profiles.items():
            blocks.append(dump_chunk_profile(c, size))
        for name, p in de.patterns.items():
            blocks.append(_block(f'decomp.pattern.{name}', [
                ('compression_ratio', p.compression_ratio),
                ('input_gbps', p.input_gbps),
                ('output_gbps', p.output_gbps),
                ('latency_ms', p.latency_ms),
            ]))

    for (model, prec), cell in spec.llm.items():
        blocks.append(_block(f'llm.{model}.{prec}', [
            ('batch', cell.batch),
            ('seq_len', cell.seq_len),
            ('tokens_per_s', cell.tokens_per_s),
            ('bw_pct', _pct_out(cell.bw_pct)),
            ('perplexity', cell.perplexity),
            ('delta_ppl_pct', cell.delta_ppl_pct),
        ]))

    if spec.llm_latency is not None:
        lat = spec.llm_latency
        items = [('model', lat.model), ('precision', lat.precision), ('seq_len', lat.seq_len)]
        items += [(f'batch_{b}_ms', ms) for b, ms in lat.points]
        items += [('pipeline_stages', lat.pipeline_stages), ('p99_median_ratio', lat.p99_median_ratio)]
        blocks.append(_block('llm_latency', items))

    for (model, batch), cell in spec.training.items():
        blocks.append(_block(f'training.{model}.{batch}', [
            ('throughput', cell.throughput),
            ('unit', cell.unit),
            ('time_to_accuracy_hrs', cell.time_to_accuracy_hrs),
            ('per_watt', cell.per_watt),
        ]))

    for matrix, cell in spec.spmv.items():
        blocks.append(_block(f'spmv.{matrix}', [
            ('sparsity_pct', cell.sparsity_pct),
            ('gflops', cell.gflops),
            ('speedup', cell.speedup),
            ('time_ms', cell.time_ms),
        ]))

    if spec.attention_block_us is not None:
        blocks.append(_block('attention', [('block_latency_us', spec.attention_block_us)]))

    for kind, d in spec.decompositions.items():
        items = [('factors', tuple(d.factors))]
        if d.labels:
            items.append(('labels', tuple(d.labels)))
        items.append(('measured', tuple(d.measured)))
        blocks.append(_block(f'decomposition.{kind}', items))

    return '\n\n'.join(blocks) + '\n'


__all__ = [
    'dump_chunk_profile', 'dump_machine_file', 'load_machine_file', 'load_machine_path', 'parse_machine_file',
    'tokenize',
]
