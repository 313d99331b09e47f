from .tensor_core import (
    MmaInstr,
    SASS_OPCODES,
    sass_opcode,
    instr_latency,
    instr_throughput,
    peak_throughput,
    dependency_chain_cycles,
    accum_penalty,
    comparable_tiles,
    isa_latency_speedup_range,
    wgmma_rule,
    wgmma_residuals,
    tile_latency_spread,
    latency_spread,
    throughput_spread
)
from .memsys import (
    access_latency,
    latency_reduction,
    tile_efficiency,
    tile_curve,
    operand_path_bw,
    operand_path_ratio,
    chained_gemm_traffic,
    stream_triad,
    tmem_power_delta,
    tmem_layout
)
from .decomp import (
    BatchCurve,
    BatchPoint,
    ChunkFit,
    Recommendation,
    Saturation,
    format_profile,
    chunk_profile,
    sensitivity,
    model_throughput,
    batch_throughput,
    batch_curve,
    pipeline_depth,
    saturation_point,
    fit_chunk_model,
    load_measurements,
    parse_measurements,
    recommend_config
)
from .workloads import (
    AffineFit,
    DecompositionResult,
    SummaryRow,
    dgemm_fp64,
    llm_throughput,
    llm_latency,
    affine_latency_fit,
    spmv,
    spmv_traffic,
    training_throughput,
    energy_efficiency,
    decompose,
    speedup_decomposition,
    attention_block,
    summary,
    evaluate,
    evaluate_many
)
