//! Shipped model and hardware presets.

use crate::cost::CostTable;
use crate::hw::HardwareSpec;
use crate::workload::ModelSpec;

/// 12-layer, 12-head encoder stack with 768 hidden units.
pub fn bert_base(seq_len: u32) -> ModelSpec {
    ModelSpec {
        num_layers: 12,
        num_heads: 12,
        hidden_size: 768,
        head_size: 64,
        seq_len,
        batch: 1,
        ffn_mult: 4,
        bit_width_weights: 8,
        bit_width_q: 8,
        bit_width_k: 8,
        bit_width_v: 8,
        vocab_size: 30_522,
    }
}

/// 24-layer, 16-head encoder stack with 1024 hidden units.
pub fn bert_large(seq_len: u32) -> ModelSpec {
    ModelSpec {
        num_layers: 24,
        num_heads: 16,
        hidden_size: 1024,
        head_size: 64,
        ..bert_base(seq_len)
    }
}

/// Reference accelerator configuration (the crate-wide default).
pub fn table1_hw() -> HardwareSpec {
    HardwareSpec::default()
}

/// Calibrated default cost parameters (the crate-wide default).
pub fn default_cost_table() -> CostTable {
    CostTable::default()
}

/// Longest sequence used by the language-understanding benchmark suite.
pub const GLUE_MAX_SEQ_LEN: u32 = 512;
/// Longest sequence used by the question-answering benchmark suite.
pub const SQUAD_MAX_SEQ_LEN: u32 = 384;
