//! Dataflow strategies behind a common trait, registered by name and
//! selected at runtime from config or CLI strings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dataflow decides how the sequence is chunked into pipeline blocks.
pub trait Dataflow: Send + Sync {
    fn name(&self) -> &'static str;
    /// Block lengths covering the sequence; the last block may be ragged.
    fn blocks(&self, seq_len: u32) -> Result<Vec<u32>>;
    /// Round-trippable selector string (e.g. `seqblock:64`).
    fn descriptor(&self) -> String;
}

/// Whole-sequence phases: the projection engine finishes the full sequence
/// before the attention engine starts.
pub struct Traditional;

impl Dataflow for Traditional {
    fn name(&self) -> &'static str {
        "traditional"
    }

    fn blocks(&self, seq_len: u32) -> Result<Vec<u32>> {
        Ok(vec![seq_len])
    }

    fn descriptor(&self) -> String {
        "traditional".into()
    }
}

/// Pipelined blocks of `block` tokens; attention consumes block pairs as
/// soon as both blocks exist.
pub struct SequenceBlocking {
    pub block: u32,
}

impl Dataflow for SequenceBlocking {
    fn name(&self) -> &'static str {
        "seqblock"
    }

    fn blocks(&self, seq_len: u32) -> Result<Vec<u32>> {
        if self.block < 1 || self.block > seq_len {
            return Err(Error::InvalidConfig(format!(
                "sequence block {} out of range 1..={seq_len}",
                self.block
            )));
        }
        let mut out = Vec::new();
        let mut remaining = seq_len;
        while remaining > 0 {
            let b = remaining.min(self.block);
            out.push(b);
            remaining -= b;
        }
        Ok(out)
    }

    fn descriptor(&self) -> String {
        format!("seqblock:{}", self.block)
    }
}

type DataflowFactory = fn(Option<&str>) -> Result<Box<dyn Dataflow>>;

fn make_traditional(arg: Option<&str>) -> Result<Box<dyn Dataflow>> {
    match arg {
        None => Ok(Box::new(Traditional)),
        Some(a) => Err(Error::InvalidConfig(format!(
            "dataflow 'traditional' takes no argument, got '{a}'"
        ))),
    }
}

fn make_seqblock(arg: Option<&str>) -> Result<Box<dyn Dataflow>> {
    let a = arg.ok_or_else(|| {
        Error::InvalidConfig("dataflow 'seqblock' needs a block length, e.g. seqblock:64".into())
    })?;
    let block: u32 = a
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("invalid sequence block '{a}'")))?;
    Ok(Box::new(SequenceBlocking { block }))
}

const REGISTRY: &[(&str, DataflowFactory)] =
    &[("traditional", make_traditional), ("seqblock", make_seqblock)];

pub fn names() -> Vec<&'static str> {
    REGISTRY.iter().map(|(n, _)| *n).collect()
}

/// Parses a selector like `traditional` or `seqblock:64`.
pub fn parse(spec: &str) -> Result<Box<dyn Dataflow>> {
    let (name, arg) = match spec.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (spec, None),
    };
    REGISTRY
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| {
            Error::InvalidConfig(format!(
                "unknown dataflow '{name}' (known: {})",
                names().join(", ")
            ))
        })
        .and_then(|(_, f)| f(arg))
}

/// Serializable dataflow selection for config files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataflowConfig {
    Traditional,
    SequenceBlocking { block: u32 },
}

impl DataflowConfig {
    pub fn strategy(&self) -> Box<dyn Dataflow> {
        match self {
            DataflowConfig::Traditional => Box::new(Traditional),
            DataflowConfig::SequenceBlocking { block } => {
                Box::new(SequenceBlocking { block: *block })
            }
        }
    }

    pub fn parse(spec: &str) -> Result<DataflowConfig> {
        let df = parse(spec)?;
        Ok(match df.descriptor().split_once(':') {
            None => DataflowConfig::Traditional,
            Some((_, b)) => DataflowConfig::SequenceBlocking {
                block: b.parse().expect("descriptor round-trip"),
            },
        })
    }

    pub fn descriptor(&self) -> String {
        self.strategy().descriptor()
    }
}
