from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Mapping

from utils.errors import UnknownMachine
from .parser import load_machine_file, load_machine_path

logger = logging.getLogger(__name__)

DATA_DIR = Path(__file__).resolve().parent / 'data'
BUILTIN_MACHINES = ('B200', 'H200')

PROVENANCE = {
    'decomp.format': 'format-specific Decompression Engine throughput (T1)',
    'decomp.pattern': 'compression-ratio sensitivity by data pattern (T2)',
    'decomp.chunk': 'pipeline depth and saturation per chunk size (T3)',
    'tensor.latency': 'single-instruction latency, Hopper vs Blackwell (T5)',
    'tensor.instr': 'per-instruction latency and throughput (T6)',
    'tensor.peak': 'sustained throughput by precision (T7)',
    'llm': 'LLM inference throughput by precision (T8)',
    'llm_latency': 'latency vs batch size (T9)',
    'attention': 'attention block latency (T10)',
    'training': 'end-to-end training throughput (T11)',
    'dgemm': 'DGEMM FP64 throughput (T12)',
    'stream': 'STREAM Triad bandwidth (T13)',
    'spmv': 'SpMV with hardware decompression (T14)',
    'tmem': 'Tensor Memory latency and bandwidth',
    'decomposition': 'speedup factor decompositions',
}


def _canonical(name):
    for known in BUILTIN_MACHINES:
        if known.lower() == str(name).lower():
            return known
    return None


def builtin_path(name):
    known = _canonical(name)
    if known is None:
        raise UnknownMachine(f'unknown machine {name!r}; expected one of {", ".join(BUILTIN_MACHINES)}')
    return DATA_DIR / f'{known.lower()}.spec'


@lru_cache(maxsize=None)
def builtin_spec(name):
    """Bundled preset for ``name`` (case-insensitive)"""
    path = builtin_path(name)
    return load_machine_file(path.read_text(encoding='utf-8'), source=path.name)


def resolve_spec(name, spec_path=None, spec_dir=None):
    """Explicit file, then ``$BLACKMODEL_SPEC_DIR/<name>.spec``, then the bundled preset"""
    if spec_path:
        logger.debug('loading machine from %s', spec_path)
        return load_machine_path(spec_path)
    spec_dir = spec_dir if spec_dir is not None else os.environ.get('BLACKMODEL_SPEC_DIR')
    if spec_dir:
        candidate = Path(spec_dir) / f'{str(name).lower()}.spec'
        if candidate.is_file():
            logger.warning('using override machine file %s', candidate)
            return load_machine_path(candidate)
    return builtin_spec(name)


@dataclass(frozen=True)
class CalibrationSet:
    specs: Mapping[str, object]
    provenance: Mapping[str, str] = field(default_factory=lambda: dict(PROVENANCE))

    @classmethod
    def load(cls, spec_dir=None):
        return cls({name: resolve_spec(name, spec_dir=spec_dir) for name in BUILTIN_MACHINES})

    def __getitem__(self, name):
        known = _canonical(name)
        if known is None or known not in self.specs:
            raise UnknownMachine(f'unknown machine {name!r}')
        return self.specs[known]

    def names(self):
        return sorted(self.specs)
