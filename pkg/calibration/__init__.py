from .spec_types import (
    GpuSpec,
    PeakEntry,
    InstrEntry,
    TensorLatency,
    MemoryParams,
    StreamEff,
    DgemmPoint,
    TmemParams,
    DeParams,
    DeFormatProfile,
    ChunkProfile,
    PatternProfile,
    LlmCell,
    LlmLatency,
    TrainingCell,
    SpmvCell,
    Decomposition,
    parse_tile,
    tile_name,
)
from .parser import (
    load_machine_file,
    load_machine_path,
    parse_machine_file,
    dump_machine_file,
    dump_chunk_profile
)
from .validation import (
    Violation,
    validate_spec,
    derived_peaks,
    peak_consistency
)
from .presets import (
    BUILTIN_MACHINES,
    CalibrationSet,
    builtin_spec,
    resolve_spec
)

__all__ = [
    'GpuSpec', 'PeakEntry', 'InstrEntry', 'TensorLatency', 'MemoryParams', 'StreamEff',
    'DgemmPoint', 'TmemParams', 'DeParams', 'DeFormatProfile', 'ChunkProfile',
    'PatternProfile', 'LlmCell', 'LlmLatency', 'TrainingCell', 'SpmvCell', 'Decomposition',
    'parse_tile', 'tile_name',
    'load_machine_file', 'load_machine_path', 'parse_machine_file', 'dump_machine_file',
    'dump_chunk_profile',
    'Violation', 'validate_spec', 'derived_peaks', 'peak_consistency',
    'BUILTIN_MACHINES', 'CalibrationSet', 'builtin_spec', 'resolve_spec',
]
