//! Transformer workload description: operation graph construction and
//! FLOP/byte accounting.
//!
//! Conventions used throughout: one multiply-accumulate counts as 2 FLOPs;
//! non-MVM kernels count element operations (softmax 5 per score, layer norm
//! 5 per element, residual add 1, activation 4, embedding lookup 0).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Element-op multipliers for the non-MVM kernels.
pub const SOFTMAX_OPS_PER_ELEM: u64 = 5;
pub const LAYERNORM_OPS_PER_ELEM: u64 = 5;
pub const RESIDUAL_OPS_PER_ELEM: u64 = 1;
pub const ACTIVATION_OPS_PER_ELEM: u64 = 4;

/// Transformer topology, mirroring the usual encoder hyperparameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub num_layers: u32,
    pub num_heads: u32,
    /// Model hidden size (HS).
    pub hidden_size: u32,
    /// Per-head hidden size (HSS).
    pub head_size: u32,
    /// Sequence length (SL).
    pub seq_len: u32,
    #[serde(default = "default_batch")]
    pub batch: u32,
    /// Feed-forward expansion factor.
    #[serde(default = "default_ffn_mult")]
    pub ffn_mult: u32,
    /// Weight bit width (W).
    #[serde(default = "default_bits")]
    pub bit_width_weights: u32,
    /// Activation bit widths for Q, K, V paths.
    #[serde(default = "default_bits")]
    pub bit_width_q: u32,
    #[serde(default = "default_bits")]
    pub bit_width_k: u32,
    #[serde(default = "default_bits")]
    pub bit_width_v: u32,
    /// Rows of the embedding lookup table.
    #[serde(default = "default_vocab")]
    pub vocab_size: u32,
}

fn default_batch() -> u32 {
    1
}
fn default_ffn_mult() -> u32 {
    4
}
fn default_bits() -> u32 {
    8
}
fn default_vocab() -> u32 {
    30_522
}

const ALLOWED_BITS: [u32; 5] = [1, 2, 4, 8, 16];

impl ModelSpec {
    /// Checks every structural invariant, naming the violated one on failure.
    ///
    /// `num_layers == 0` is permitted as a degenerate empty workload; all
    /// other counts must be at least 1.
    pub fn validate(&self) -> Result<()> {
        if self.hidden_size != self.num_heads * self.head_size {
            return Err(Error::InvalidModel(format!(
                "hidden_size ({}) must equal num_heads ({}) * head_size ({})",
                self.hidden_size, self.num_heads, self.head_size
            )));
        }
        for (name, v) in [
            ("num_heads", self.num_heads),
            ("hidden_size", self.hidden_size),
            ("head_size", self.head_size),
            ("seq_len", self.seq_len),
            ("batch", self.batch),
            ("ffn_mult", self.ffn_mult),
            ("vocab_size", self.vocab_size),
        ] {
            if v < 1 {
                return Err(Error::InvalidModel(format!("{name} must be >= 1, got {v}")));
            }
        }
        for (name, b) in [
            ("bit_width_weights", self.bit_width_weights),
            ("bit_width_q", self.bit_width_q),
            ("bit_width_k", self.bit_width_k),
            ("bit_width_v", self.bit_width_v),
        ] {
            if !ALLOWED_BITS.contains(&b) {
                return Err(Error::InvalidModel(format!(
                    "{name} must be one of {ALLOWED_BITS:?}, got {b}"
                )));
            }
        }
        Ok(())
    }

    /// Bytes of one attention score under the Q activation width.
    pub fn score_bytes(&self) -> u64 {
        (self.bit_width_q as u64).div_ceil(8)
    }

    /// Bytes per activation element (activation paths share one width here).
    pub fn act_bytes(&self) -> u64 {
        (self.bit_width_q as u64).div_ceil(8)
    }

    /// Bytes per weight element.
    pub fn weight_bytes(&self) -> u64 {
        (self.bit_width_weights as u64).div_ceil(8)
    }
}

/// Top-level operation class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OpKind {
    /// MVM whose weight operand is fixed across inputs.
    MvmStatic,
    /// MVM whose both operands change per input (score and context multiplies).
    MvmDynamic,
    NonMvm(NonMvmKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NonMvmKind {
    Softmax,
    LayerNorm,
    ResidualAdd,
    Activation,
    EmbeddingLookup,
}

/// Functional role of a node inside the encoder stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OpRole {
    Embedding,
    QGen,
    KGen,
    VGen,
    Score,
    Softmax,
    Context,
    OutProj,
    Residual1,
    LayerNorm1,
    Ffn1,
    Activation,
    Ffn2,
    Residual2,
    LayerNorm2,
    Classifier,
}

pub type NodeId = u32;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OpNode {
    pub id: NodeId,
    pub kind: OpKind,
    pub role: OpRole,
    /// Encoder layer index; `None` for the embedding and classifier nodes.
    pub layer: Option<u32>,
    /// Attention head index for per-head nodes.
    pub head: Option<u32>,
    /// (M, K, N) for MVM nodes: M output rows, K contraction, N output cols.
    pub dims: Option<(u64, u64, u64)>,
    /// Element count for non-MVM nodes.
    pub elems: u64,
    pub preds: Vec<NodeId>,
}

impl OpNode {
    /// Multiply-accumulate count for MVM nodes, 0 otherwise.
    pub fn macs(&self) -> u64 {
        match self.dims {
            Some((m, k, n)) => m * k * n,
            None => 0,
        }
    }
}

/// Dependency DAG of typed transformer operations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OpGraph {
    pub nodes: Vec<OpNode>,
    pub model: ModelSpec,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlopsBreakdown {
    pub static_flops: u64,
    pub dynamic_flops: u64,
    pub nonmvm_flops: u64,
}

impl FlopsBreakdown {
    pub fn total(&self) -> u64 {
        self.static_flops + self.dynamic_flops + self.nonmvm_flops
    }
}

/// Scope of the dynamic-FLOPs ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FractionScope {
    /// Q/K/V/out projections plus the two dynamic multiplies.
    AttentionBlock,
    /// Adds the feed-forward multiplies.
    FullEncoder,
}

/// Builds the per-sequence operation graph: embedding lookup, `num_layers`
/// encoders, and a final classification node. Batch repetition is handled by
/// the run aggregation, not by graph duplication.
pub fn build_op_graph(model: &ModelSpec) -> Result<OpGraph> {
    model.validate()?;
    let mut nodes: Vec<OpNode> = Vec::new();
    if model.num_layers == 0 {
        return Ok(OpGraph {
            nodes,
            model: model.clone(),
        });
    }

    let sl = model.seq_len as u64;
    let hs = model.hidden_size as u64;
    let hss = model.head_size as u64;
    let ffn = model.ffn_mult as u64 * hs;

    let mut next_id: NodeId = 0;
    let push = |nodes: &mut Vec<OpNode>, node: OpNode| -> NodeId {
        let id = node.id;
        nodes.push(node);
        id
    };
    let mut mk = |nodes: &mut Vec<OpNode>,
                  kind: OpKind,
                  role: OpRole,
                  layer: Option<u32>,
                  head: Option<u32>,
                  dims: Option<(u64, u64, u64)>,
                  elems: u64,
                  preds: Vec<NodeId>|
     -> NodeId {
        let id = next_id;
        next_id += 1;
        push(
            nodes,
            OpNode {
                id,
                kind,
                role,
                layer,
                head,
                dims,
                elems,
                preds,
            },
        )
    };

    let embed = mk(
        &mut nodes,
        OpKind::NonMvm(NonMvmKind::EmbeddingLookup),
        OpRole::Embedding,
        None,
        None,
        None,
        sl * hs,
        vec![],
    );

    let mut prev_out = embed;
    for layer in 0..model.num_layers {
        let l = Some(layer);
        let q = mk(
            &mut nodes,
            OpKind::MvmStatic,
            OpRole::QGen,
            l,
            None,
            Some((sl, hs, hs)),
            0,
            vec![prev_out],
        );
        let k = mk(
            &mut nodes,
            OpKind::MvmStatic,
            OpRole::KGen,
            l,
            None,
            Some((sl, hs, hs)),
            0,
            vec![prev_out],
        );
        let v = mk(
            &mut nodes,
            OpKind::MvmStatic,
            OpRole::VGen,
            l,
            None,
            Some((sl, hs, hs)),
            0,
            vec![prev_out],
        );
        let mut context_nodes = Vec::with_capacity(model.num_heads as usize);
        for head in 0..model.num_heads {
            let h = Some(head);
            let score = mk(
                &mut nodes,
                OpKind::MvmDynamic,
                OpRole::Score,
                l,
                h,
                Some((sl, hss, sl)),
                0,
                vec![q, k],
            );
            let sm = mk(
                &mut nodes,
                OpKind::NonMvm(NonMvmKind::Softmax),
                OpRole::Softmax,
                l,
                h,
                None,
                sl * sl,
                vec![score],
            );
            let ctx = mk(
                &mut nodes,
                OpKind::MvmDynamic,
                OpRole::Context,
                l,
                h,
                Some((sl, sl, hss)),
                0,
                vec![sm, v],
            );
            context_nodes.push(ctx);
        }
        let out = mk(
            &mut nodes,
            OpKind::MvmStatic,
            OpRole::OutProj,
            l,
            None,
            Some((sl, hs, hs)),
            0,
            context_nodes,
        );
        let res1 = mk(
            &mut nodes,
            OpKind::NonMvm(NonMvmKind::ResidualAdd),
            OpRole::Residual1,
            l,
            None,
            None,
            sl * hs,
            vec![out, prev_out],
        );
        let ln1 = mk(
            &mut nodes,
            OpKind::NonMvm(NonMvmKind::LayerNorm),
            OpRole::LayerNorm1,
            l,
            None,
            None,
            sl * hs,
            vec![res1],
        );
        let ffn1 = mk(
            &mut nodes,
            OpKind::MvmStatic,
            OpRole::Ffn1,
            l,
            None,
            Some((sl, hs, ffn)),
            0,
            vec![ln1],
        );
        let act = mk(
            &mut nodes,
            OpKind::NonMvm(NonMvmKind::Activation),
            OpRole::Activation,
            l,
            None,
            None,
            sl * ffn,
            vec![ffn1],
        );
        let ffn2 = mk(
            &mut nodes,
            OpKind::MvmStatic,
            OpRole::Ffn2,
            l,
            None,
            Some((sl, ffn, hs)),
            0,
            vec![act],
        );
        let res2 = mk(
            &mut nodes,
            OpKind::NonMvm(NonMvmKind::ResidualAdd),
            OpRole::Residual2,
            l,
            None,
            None,
            sl * hs,
            vec![ffn2, ln1],
        );
        let ln2 = mk(
            &mut nodes,
            OpKind::NonMvm(NonMvmKind::LayerNorm),
            OpRole::LayerNorm2,
            l,
            None,
            None,
            sl * hs,
            vec![res2],
        );
        prev_out = ln2;
    }

    // Small task head on the pooled token; two output classes stand in for
    // whatever downstream task is attached.
    mk(
        &mut nodes,
        OpKind::MvmStatic,
        OpRole::Classifier,
        None,
        None,
        Some((1, hs, 2)),
        0,
        vec![prev_out],
    );

    let graph = OpGraph {
        nodes,
        model: model.clone(),
    };
    debug_assert!(graph.topo_order().is_ok());
    Ok(graph)
}

impl OpGraph {
    /// Kahn topological order; errors if the graph has a cycle.
    pub fn topo_order(&self) -> Result<Vec<NodeId>> {
        let n = self.nodes.len();
        let mut indeg = vec![0usize; n];
        let mut succs: Vec<Vec<usize>> = vec![Vec::new(); n];
        for node in &self.nodes {
            for &p in &node.preds {
                succs[p as usize].push(node.id as usize);
                indeg[node.id as usize] += 1;
            }
        }
        let mut queue: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = queue.pop() {
            order.push(i as NodeId);
            for &s in &succs[i] {
                indeg[s] -= 1;
                if indeg[s] == 0 {
                    queue.push(s);
                }
            }
        }
        if order.len() != n {
            return Err(Error::InvalidModel("operation graph has a cycle".into()));
        }
        Ok(order)
    }

    pub fn nodes_in_layer(&self, layer: u32) -> impl Iterator<Item = &OpNode> {
        self.nodes.iter().filter(move |n| n.layer == Some(layer))
    }

    fn nonmvm_ops(kind: NonMvmKind, elems: u64) -> u64 {
        let per = match kind {
            NonMvmKind::Softmax => SOFTMAX_OPS_PER_ELEM,
            NonMvmKind::LayerNorm => LAYERNORM_OPS_PER_ELEM,
            NonMvmKind::ResidualAdd => RESIDUAL_OPS_PER_ELEM,
            NonMvmKind::Activation => ACTIVATION_OPS_PER_ELEM,
            NonMvmKind::EmbeddingLookup => 0,
        };
        elems * per
    }
}

/// Sums FLOPs over the graph, split by operation class. Errors on 64-bit
/// overflow rather than wrapping.
pub fn count_flops(graph: &OpGraph) -> Result<FlopsBreakdown> {
    let mut out = FlopsBreakdown::default();
    let add = |acc: &mut u64, v: u64| -> Result<()> {
        *acc = acc
            .checked_add(v)
            .ok_or_else(|| Error::Overflow("FLOP counter exceeded 64 bits".into()))?;
        Ok(())
    };
    for node in &graph.nodes {
        match node.kind {
            OpKind::MvmStatic => {
                let flops = node
                    .macs()
                    .checked_mul(2)
                    .ok_or_else(|| Error::Overflow("MAC count exceeded 64 bits".into()))?;
                add(&mut out.static_flops, flops)?;
            }
            OpKind::MvmDynamic => {
                let flops = node
                    .macs()
                    .checked_mul(2)
                    .ok_or_else(|| Error::Overflow("MAC count exceeded 64 bits".into()))?;
                add(&mut out.dynamic_flops, flops)?;
            }
            OpKind::NonMvm(k) => add(&mut out.nonmvm_flops, OpGraph::nonmvm_ops(k, node.elems))?,
        }
    }
    Ok(out)
}

/// Fraction of MVM FLOPs that are dynamic, under the given scope. Non-MVM
/// kernels are excluded from both numerator and denominator.
pub fn dynamic_fraction(model: &ModelSpec, scope: FractionScope) -> Result<f64> {
    model.validate()?;
    if model.num_layers == 0 {
        return Err(Error::InvalidModel(
            "dynamic_fraction needs at least one encoder layer".into(),
        ));
    }
    let single_layer = ModelSpec {
        num_layers: 1,
        ..model.clone()
    };
    let graph = build_op_graph(&single_layer)?;
    let mut dynamic = 0u64;
    let mut static_scope = 0u64;
    for node in graph.nodes_in_layer(0) {
        match (node.kind, node.role) {
            (OpKind::MvmDynamic, _) => dynamic += 2 * node.macs(),
            (OpKind::MvmStatic, OpRole::Ffn1 | OpRole::Ffn2) => {
                if scope == FractionScope::FullEncoder {
                    static_scope += 2 * node.macs();
                }
            }
            (OpKind::MvmStatic, _) => static_scope += 2 * node.macs(),
            _ => {}
        }
    }
    Ok(dynamic as f64 / (dynamic + static_scope) as f64)
}

/// Per-head intermediate activation footprint for a dataflow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BufferFootprint {
    /// Score block held while one block pair is in flight.
    pub score_bytes: u64,
    /// Running outputs plus per-row normalizer scalars.
    pub accumulator_bytes: u64,
}

impl BufferFootprint {
    pub fn total(&self) -> u64 {
        self.score_bytes + self.accumulator_bytes
    }
}

/// Bytes of running-sum state per score row (f32 normalizer).
pub const RUNNING_SUM_BYTES: u64 = 4;

/// Per-head intermediate buffer requirement. `block` is the sequence block
/// length; pass `seq_len` for the single-block (unblocked) dataflow.
pub fn intermediate_buffer_bytes(model: &ModelSpec, block: u32) -> Result<BufferFootprint> {
    model.validate()?;
    if block < 1 || block > model.seq_len {
        return Err(Error::InvalidModel(format!(
            "sequence block {} out of range 1..={}",
            block, model.seq_len
        )));
    }
    let sb = block as u64;
    let hss = model.head_size as u64;
    Ok(BufferFootprint {
        score_bytes: sb * sb * model.score_bytes(),
        accumulator_bytes: hss * sb * model.act_bytes() + sb * RUNNING_SUM_BYTES,
    })
}
