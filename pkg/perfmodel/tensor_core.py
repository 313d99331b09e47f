"""Tensor Core instruction pipeline: SASS mapping, latency, throughput."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from calibration import parse_tile, tile_name
from calibration.spec_types import throughput_unit
from models import Prediction
from utils.errors import EmptyComparison, MissingCalibration, PreconditionError, Unsupported

logger = logging.getLogger(__name__)

WARP = 32
WARP_GROUP = 128

# None marks a pairing the ISA cannot issue
SASS_OPCODES = {
    'fp64': {'tcgen05': 'DMMA', 'wgmma': 'DMMA'},
    'fp32': {'tcgen05': 'HMMA', 'wgmma': 'HGMMA'},
    'fp4': {'tcgen05': 'OMMA', 'wgmma': None},
    'fp8': {'tcgen05': 'QMMA', 'wgmma': 'QGMMA'},
    'int8': {'tcgen05': 'IMMA', 'wgmma': 'IGMMA'},
    'int4': {'tcgen05': 'IMMA', 'wgmma': 'IGMMA'},
}


@dataclass(frozen=True)
class MmaInstr:
    isa: str
    m: int
    n: int
    k: int
    in_prec: str = 'fp16'
    accum_prec: str = 'fp32'

    def __post_init__(self):
        if self.isa not in ('tcgen05', 'wgmma'):
            raise PreconditionError(f'unknown isa {self.isa!r}')
        if min(self.m, self.n, self.k) <= 0:
            raise PreconditionError(f'tile dimensions must be positive, got {self.shape}')

    @classmethod
    def parse(cls, isa, shape, in_prec='fp16', accum_prec='fp32'):
        try:
            m, n, k = parse_tile(shape)
        except ValueError as e:
            raise PreconditionError(str(e)) from e
        return cls(isa, m, n, k, in_prec.lower(), accum_prec.lower())

    @property
    def shape(self):
        return tile_name(self.m, self.n, self.k)

    @property
    def scope(self):
        return WARP_GROUP if self.isa == 'wgmma' else WARP

    @property
    def flops(self):
        return 2 * self.m * self.n * self.k


def sass_opcode(isa, precision):
    precision = precision.lower()
    if precision not in SASS_OPCODES or isa not in SASS_OPCODES[precision]:
        raise MissingCalibration(f'no SASS mapping recorded for {isa} {precision}')
    opcode = SASS_OPCODES[precision][isa]
    if opcode is None:
        raise Unsupported(f'{isa} does not support {precision} (N/A)')
    return opcode


def _check_isa(spec, instr):
    if instr.isa != spec.isa:
        raise Unsupported(f'{instr.isa} is not available on {spec.name} (native isa {spec.isa})')
    if spec.latency is None:
        raise MissingCalibration(f'{spec.name} has no instruction latency calibration')


def _log_volume(shape):
    m, n, k = parse_tile(shape)
    return math.log2(m * n * k)


def wgmma_rule(spec, n):
    """Warp-group latency grows by one base block per ``wgmma_n_block`` columns"""
    lat = spec.latency
    if lat is None or lat.wgmma_base_cycles is None or lat.wgmma_n_block is None:
        raise MissingCalibration(f'{spec.name} has no wgmma latency rule')
    return lat.wgmma_base_cycles * n / lat.wgmma_n_block


def instr_latency(spec, instr):
    _check_isa(spec, instr)
    calibrated = spec.latency.calibrated(instr.isa)
    notes = ()
    extrapolated = False

    if instr.isa == 'wgmma':
        cycles = wgmma_rule(spec, instr.n)
    elif instr.shape in calibrated:
        cycles = calibrated[instr.shape]
    elif calibrated:
        target = math.log2(instr.m * instr.n * instr.k)
        nearest = min(sorted(calibrated), key=lambda s: abs(_log_volume(s) - target))
        cycles = calibrated[nearest]
        extrapolated = True
        notes += (f'nearest calibrated tile {nearest}',)
        logger.debug('no %s calibration for %s, using %s', instr.isa, instr.shape, nearest)
    else:
        raise MissingCalibration(f'{spec.name} has no calibrated {instr.isa} tiles')

    stall = spec.latency.scheduler_stall_reduction_pct
    if instr.isa == 'tcgen05' and stall:
        notes += (f'scheduler stalls reduced {stall[0]:g}-{stall[1]:g}% vs warp-group issue',)

    return Prediction(
        metric='instr_latency',
        value=cycles,
        unit='cycles',
        bottleneck='compute',
        extrapolated=extrapolated,
        extras={'isa': instr.isa, 'tile': instr.shape, 'scope': instr.scope},
        notes=notes,
    )


def instr_throughput(spec, instr):
    key = (instr.in_prec, instr.accum_prec)
    if key not in spec.instr:
        raise MissingCalibration(
            f'{instr.in_prec}/{instr.accum_prec}: no instruction throughput calibration for {spec.name}')
    entry = spec.instr[key]
    return Prediction(
        metric='instr_throughput',
        value=entry.throughput,
        unit=entry.unit,
        bottleneck='compute',
        extrapolated=instr.shape != entry.shape,
        extras={
            'calibrated_shape': entry.shape,
            'flops_per_instr': instr.flops,
            'latency_cycles': entry.latency_cycles,
        },
    )


def peak_throughput(spec, precision, baseline=None):
    """Sustained peak; ``ratio`` is the speedup over ``baseline`` when it has the precision"""
    precision = precision.lower()
    entry = spec.peak(precision)
    base_value = None
    notes = ()
    if baseline is not None:
        try:
            base_value = baseline.peak(precision).throughput
        except MissingCalibration as e:
            notes += (f'{baseline.name}: {e.message}',)
    return Prediction(
        metric=f'peak_{precision}',
        value=entry.throughput,
        unit=entry.unit or throughput_unit(precision),
        bottleneck='compute',
        baseline=base_value,
        extras={
            'pct_of_peak': entry.pct_of_peak,
            'theoretical_peak': entry.theoretical_peak,
        },
        notes=notes,
    )


def dependency_chain_cycles(spec, instr, chain_len):
    if chain_len < 0:
        raise PreconditionError('chain_len must be >= 0')
    return chain_len * instr_latency(spec, instr).value


def accum_penalty(spec, in_prec, accum_prec):
    in_prec, accum_prec = in_prec.lower(), accum_prec.lower()
    if (in_prec, accum_prec) not in spec.instr:
        raise MissingCalibration(f'{in_prec}/{accum_prec}: no instruction calibration')
    fastest = max(e.throughput for (i, _), e in spec.instr.items() if i == in_prec)
    return spec.instr[(in_prec, accum_prec)].throughput / fastest


def comparable_tiles(spec_b, spec_h):
    """Pairs of (tcgen05 tile, wgmma tile) with equal m and k"""
    fast = spec_b.latency.calibrated('tcgen05') if spec_b.latency else {}
    slow = spec_h.latency.calibrated('wgmma') if spec_h.latency else {}
    pairs = []
    for b_shape in sorted(fast):
        bm, _, bk = parse_tile(b_shape)
        for h_shape in sorted(slow):
            hm, _, hk = parse_tile(h_shape)
            if (bm, bk) == (hm, hk):
                pairs.append((b_shape, h_shape, slow[h_shape] / fast[b_shape]))
    return pairs


def isa_latency_speedup_range(spec_b, spec_h):
    pairs = comparable_tiles(spec_b, spec_h)
    if not pairs:
        raise EmptyComparison(f'no comparable tiles between {spec_b.name} and {spec_h.name}')
    ratios = [ratio for _, _, ratio in pairs]
    return min(ratios), max(ratios)


def tile_latency_spread(spec, isa):
    values = list(spec.latency.calibrated(isa).values()) if spec.latency else []
    if not values:
        raise MissingCalibration(f'{spec.name} has no calibrated {isa} tiles')
    return max(values) / min(values)


def wgmma_residuals(spec):
    """Calibrated wgmma latency minus the linear rule, per tile"""
    out = {}
    for shape, cycles in spec.latency.calibrated('wgmma').items():
        _, n, _ = parse_tile(shape)
        out[shape] = cycles - wgmma_rule(spec, n)
    return out


def latency_spread(spec):
    if not spec.instr:
        raise MissingCalibration(f'{spec.name} has no instruction calibration')
    values = [e.latency_cycles for e in spec.instr.values()]
    return max(values) / min(values)


def throughput_spread(spec):
    if not spec.instr:
        raise MissingCalibration(f'{spec.name} has no instruction calibration')
    values = [e.throughput for e in spec.instr.values()]
    return max(values) / min(values)
