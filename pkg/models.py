from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Optional

from utils.errors import PreconditionError

BOTTLENECKS = ('compute', 'memory_bw', 'input_bw', 'calibration')
WORKLOAD_VARIANTS = ('dgemm', 'llm_infer', 'llm_latency', 'stream', 'spmv', 'training')


@dataclass(frozen=True)
class Prediction:
    """A model output; ``ratio`` exists exactly when a baseline does"""
    metric: str
    value: float
    unit: str
    bottleneck: str = 'calibration'
    baseline: Optional[float] = None
    extrapolated: bool = False
    extras: Mapping[str, Any] = field(default_factory=dict)
    notes: tuple = ()

    def __post_init__(self):
        if self.bottleneck not in BOTTLENECKS:
            raise PreconditionError(f'unknown bottleneck tag {self.bottleneck!r}')

    @property
    def ratio(self):
        if self.baseline is None or self.baseline == 0:
            return None
        return self.value / self.baseline

    def to_dict(self):
        return {
            'metric': self.metric,
            'value': self.value,
            'unit': self.unit,
            'bottleneck': self.bottleneck,
            'baseline': self.baseline,
            'ratio': self.ratio,
            'extrapolated': self.extrapolated,
            'extras': dict(self.extras),
            'notes': list(self.notes),
        }


@dataclass(frozen=True)
class WorkloadSpec:
    """One workload to evaluate; ``params`` holds the variant-specific fields"""
    variant: str
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.variant not in WORKLOAD_VARIANTS:
            raise PreconditionError(f'unknown workload variant {self.variant!r}')
        for key, value in self.params.items():
            if isinstance(value, (int, float)) and not isinstance(value, bool) and value <= 0:
                raise PreconditionError(f'{self.variant}.{key} must be positive, got {value}')
