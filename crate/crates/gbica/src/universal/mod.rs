//! Universal coding: minimax redundancy theory, the block-wise pipeline,
//! and permutation-coded adaptive schemes.

pub mod permcode;
pub mod pipeline;
pub mod redundancy;

pub use permcode::{
    adaptive_final_order, permutation_coded_decode, permutation_coded_encode,
    sliding_window_encode, windowed_arithmetic_decode, windowed_arithmetic_encode, PermMode,
    PermScheme,
};
pub use pipeline::{
    blockwise_pipeline, pipeline_compress, pipeline_decompress, BlockPipelineState,
    PipelineRound, TraceEntry,
};
pub use redundancy::{
    minimax_redundancy, patterns_bound, total_size_blocks, PatternsMode, RedundancyEstimate,
    Regime,
};
