"""Decompression Engine model.

Aggregate throughput of ``b`` concurrent operations on one chunk size grows
linearly up to the pipeline depth, follows a power law between depth and the
saturation batch, and stays flat at the calibrated peak beyond it.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import least_squares

from calibration import ChunkProfile
from models import Prediction
from utils.errors import (
    IllConditioned, MissingCalibration, NoPoint, ParseError, PreconditionError,
    UnknownChunk, UnknownFormat,
)

logger = logging.getLogger(__name__)

DEFAULT_CONCURRENCIES = tuple(2 ** i for i in range(12))
SENSITIVITY_BYTES = 100e6
SMALL_OBJECT_BYTES = 64 * 1024
SMALL_CHUNK, LARGE_CHUNK = 32 * 1024, 256 * 1024
FORMAT_BY_KIND = {'numeric': 'bitcomp', 'scientific': 'bitcomp', 'realtime': 'snappy'}
DEFAULT_FORMAT = 'zstd'


@dataclass(frozen=True)
class BatchPoint:
    concurrency: int
    aggregate_gbps: float
    efficiency: float


@dataclass(frozen=True)
class BatchCurve:
    points: Tuple[BatchPoint, ...]
    chunk_bytes: Optional[int] = None

    def __post_init__(self):
        conc = [p.concurrency for p in self.points]
        if any(b <= a for a, b in zip(conc, conc[1:])):
            raise PreconditionError('curve concurrencies must be strictly increasing')

    @classmethod
    def from_measurements(cls, pairs, chunk_bytes=None):
        """Curve from (concurrency, gbps) pairs; efficiency is relative to b=1"""
        pairs = sorted(pairs)
        single = dict(pairs).get(1)
        if single is None:
            raise PreconditionError('a measured curve needs a concurrency-1 point')
        return cls(tuple(BatchPoint(b, t, t / (b * single)) for b, t in pairs), chunk_bytes)

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class Saturation:
    concurrency: Optional[int]
    saturated: bool


@dataclass(frozen=True)
class ChunkFit:
    profile: ChunkProfile
    residual_rms: float
    points: int


@dataclass(frozen=True)
class Recommendation:
    format: str
    chunk_bytes: int
    concurrency: int
    predicted_gbps: float
    ceiling_gbps: float
    saturation_batch: int
    batch_latency_ms: float
    within_budget: bool

    def to_dict(self):
        return dict(self.__dict__)


def de_params(spec):
    if spec.de is None:
        raise MissingCalibration(f'{spec.name} has no Decompression Engine (software decompression only)')
    return spec.de


def format_profile(spec, name):
    de = de_params(spec)
    key = name.lower()
    if key not in de.format_profiles:
        raise UnknownFormat(f'no Decompression Engine profile for format {name!r}')
    return de.format_profiles[key]


def chunk_profile(spec, chunk_bytes):
    de = de_params(spec)
    if chunk_bytes not in de.chunk_profiles:
        known = ', '.join(str(c) for c in sorted(de.chunk_profiles))
        raise UnknownChunk(f'no calibration for {chunk_bytes}-byte chunks (known: {known})')
    return de.chunk_profiles[chunk_bytes]


def sensitivity(spec, compression_ratio, pattern_output_gbps):
    """Input rate and 100 MB latency for a data pattern's output rate"""
    if compression_ratio < 1:
        raise PreconditionError('compression_ratio must be >= 1')
    if pattern_output_gbps <= 0:
        raise PreconditionError('pattern output rate must be positive')
    de = de_params(spec)
    low, high = de.output_ceiling
    output = min(max(pattern_output_gbps, low), high)
    latency_ms = SENSITIVITY_BYTES / (output * 1e9) * 1e3 + de.latency_overhead_ms
    return Prediction(
        metric='de_input_rate',
        value=pattern_output_gbps / compression_ratio,
        unit='GB/s',
        bottleneck='input_bw',
        extras={
            'output_gbps': output,
            'latency_ms_per_100MB': latency_ms,
            'compression_ratio': compression_ratio,
        },
    )


def model_throughput(profile, concurrency):
    """Aggregate GB/s of ``concurrency`` operations under the batching law"""
    if concurrency < 1:
        raise PreconditionError('concurrency must be >= 1')
    r, d, s, peak = profile.single_rate_gbps, profile.pipeline_depth, profile.saturation_batch, profile.peak_gbps
    if concurrency <= d:
        return concurrency * r
    if concurrency >= s or s <= d:
        return peak
    alpha = math.log(peak / (r * d)) / math.log(s / d)
    return r * d * (concurrency / d) ** alpha


def batch_throughput(spec, chunk_bytes, concurrency):
    profile = chunk_profile(spec, chunk_bytes)
    aggregate = model_throughput(profile, concurrency)
    return Prediction(
        metric='de_aggregate_throughput',
        value=aggregate,
        unit='GB/s',
        bottleneck='input_bw',
        extras={
            'efficiency': aggregate / (concurrency * profile.single_rate_gbps),
            'speedup_vs_sequential': aggregate / profile.single_rate_gbps,
            'concurrency': concurrency,
            'chunk_bytes': chunk_bytes,
        },
    )


def curve_for_profile(profile, concurrencies=DEFAULT_CONCURRENCIES):
    points = []
    for b in concurrencies:
        t = model_throughput(profile, b)
        points.append(BatchPoint(b, t, t / (b * profile.single_rate_gbps)))
    return BatchCurve(tuple(points), profile.chunk_bytes)


def batch_curve(spec, chunk_bytes, concurrencies=DEFAULT_CONCURRENCIES):
    return curve_for_profile(chunk_profile(spec, chunk_bytes), concurrencies)


def pipeline_depth(curve, threshold=0.85):
    """Largest concurrency whose per-operation efficiency stays >= threshold"""
    if not curve.points:
        raise PreconditionError('empty curve')
    passing = [p.concurrency for p in curve.points if p.efficiency >= threshold]
    if not passing:
        raise NoPoint(f'no concurrency reaches {threshold:.0%} efficiency')
    return max(passing)


def saturation_point(curve, margin=0.05):
    """First concurrency where doubling it adds less than ``margin`` throughput"""
    if len(curve.points) < 2:
        raise PreconditionError('saturation needs at least two points')
    by_conc = {p.concurrency: p.aggregate_gbps for p in curve.points}
    for point in curve.points:
        doubled = by_conc.get(2 * point.concurrency)
        if doubled is not None and doubled < point.aggregate_gbps * (1.0 + margin):
            return Saturation(point.concurrency, True)
    return Saturation(None, False)


def _log_model(params, conc, depth, sat):
    r, peak = np.exp(params)
    alpha = math.log(peak / (r * depth)) / math.log(sat / depth)
    linear = conc * r
    power = r * depth * (conc / depth) ** alpha
    out = np.where(conc <= depth, linear, np.where(conc >= sat, peak, power))
    return np.log(out)


def fit_chunk_model(measurements, chunk_bytes=0):
    """Least-squares fit of (single_rate, depth, peak, saturation) to measured points.

    Depth and saturation are searched over the measured concurrencies; single
    rate and peak are fitted on log residuals for each candidate pair.
    """
    data = sorted((int(b), float(t)) for b, t in measurements)
    if len(data) < 4:
        raise IllConditioned(f'{len(data)} points cannot determine 4 parameters')
    if data[0][0] != 1:
        raise IllConditioned('measurements must include concurrency 1')
    if any(t <= 0 for _, t in data):
        raise PreconditionError('throughputs must be positive')

    conc = np.array([b for b, _ in data], dtype=np.float64)
    gbps = np.array([t for _, t in data], dtype=np.float64)
    target = np.log(gbps)
    levels = sorted(set(int(b) for b in conc))
    if len(levels) < 3:
        raise IllConditioned('need at least three distinct concurrencies')

    x0 = np.log([gbps[conc == 1].mean(), gbps.max()])
    best = None
    for i, depth in enumerate(levels):
        for sat in levels[i + 1:]:
            result = least_squares(
                lambda p: _log_model(p, conc, depth, sat) - target, x0, method='trf')
            if best is None or result.cost < best[0].cost - 1e-12:
                best = (result, depth, sat)
    result, depth, sat = best
    rate, peak = (float(v) for v in np.exp(result.x))
    logger.debug('fit picked depth=%d saturation=%d cost=%.3g', depth, sat, result.cost)

    fitted = np.exp(_log_model(result.x, conc, depth, sat))
    rms = float(np.sqrt(np.mean((fitted / gbps - 1.0) ** 2)))
    profile = ChunkProfile(
        chunk_bytes=chunk_bytes,
        single_rate_gbps=rate,
        pipeline_depth=depth,
        saturation_batch=sat,
        peak_gbps=peak,
        max_speedup=peak / rate,
    )
    return ChunkFit(profile, rms, len(data))


def parse_measurements(text, source=None):
    """Rows of ``concurrency,gbps`` under that exact header"""
    reader = csv.reader(io.StringIO(text))
    rows = []
    header_seen = False
    for line_no, row in enumerate(reader, start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        cells = [cell.strip() for cell in row]
        if not header_seen:
            if cells != ['concurrency', 'gbps']:
                raise ParseError("expected header 'concurrency,gbps'", line_no, 1, source)
            header_seen = True
            continue
        if len(cells) != 2:
            raise ParseError(f'expected 2 columns, got {len(cells)}', line_no, 1, source)
        try:
            conc = float(cells[0])
            value = float(cells[1])
        except ValueError:
            raise ParseError(f'non-numeric row {",".join(cells)!r}', line_no, 1, source) from None
        if not conc.is_integer() or conc < 1:
            raise ParseError('concurrency must be a positive integer', line_no, 1, source)
        rows.append((int(conc), value))
    if not header_seen:
        raise ParseError('empty measurement file', source=source)
    return rows


def load_measurements(path):
    with open(path, encoding='utf-8') as fh:
        return parse_measurements(fh.read(), source=str(path))


def recommend_config(spec, typical_object_bytes, latency_budget_ms, data_kind='generic'):
    if typical_object_bytes <= 0 or latency_budget_ms <= 0:
        raise PreconditionError('workload fields must be positive')
    chunk = SMALL_CHUNK if typical_object_bytes < SMALL_OBJECT_BYTES else LARGE_CHUNK
    fmt = FORMAT_BY_KIND.get(str(data_kind).lower(), DEFAULT_FORMAT)
    format_profile(spec, fmt)
    profile = chunk_profile(spec, chunk)

    concurrency = profile.pipeline_depth
    predicted = model_throughput(profile, concurrency)
    latency_ms = concurrency * chunk / (predicted * 1e9) * 1e3
    while latency_ms > latency_budget_ms and concurrency > 1:
        concurrency //= 2
        predicted = model_throughput(profile, concurrency)
        latency_ms = concurrency * chunk / (predicted * 1e9) * 1e3

    return Recommendation(
        format=fmt,
        chunk_bytes=chunk,
        concurrency=concurrency,
        predicted_gbps=predicted,
        ceiling_gbps=profile.peak_gbps,
        saturation_batch=profile.saturation_batch,
        batch_latency_ms=latency_ms,
        within_budget=latency_ms <= latency_budget_ms,
    )


def with_fitted_profile(spec, fit):
    """Copy of ``spec`` with one chunk profile replaced by a fit"""
    de = de_params(spec)
    chunks = dict(de.chunk_profiles)
    chunks[fit.profile.chunk_bytes] = fit.profile
    return replace(spec, de=replace(de, chunk_profiles=chunks))
