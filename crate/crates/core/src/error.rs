use std::fmt;

/// Error type shared across the simulator core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A model description violates one of its invariants.
    InvalidModel(String),
    /// A hardware description violates one of its invariants.
    InvalidHardware(String),
    /// A cost-table entry is out of range or inconsistent.
    InvalidCostTable(String),
    /// A dataflow or policy selector could not be resolved or configured.
    InvalidConfig(String),
    /// The workload does not fit the hardware in any permitted residency mode.
    Capacity(String),
    /// Scheduling failed (unmapped node, inconsistent segment graph, ...).
    Schedule(String),
    /// Arithmetic overflow while accumulating counters.
    Overflow(String),
    /// Dimension mismatch in functional simulation.
    Dimension(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidModel(m) => write!(f, "invalid model: {m}"),
            Error::InvalidHardware(m) => write!(f, "invalid hardware: {m}"),
            Error::InvalidCostTable(m) => write!(f, "invalid cost table: {m}"),
            Error::InvalidConfig(m) => write!(f, "invalid config: {m}"),
            Error::Capacity(m) => write!(f, "capacity: {m}"),
            Error::Schedule(m) => write!(f, "schedule: {m}"),
            Error::Overflow(m) => write!(f, "overflow: {m}"),
            Error::Dimension(m) => write!(f, "dimension: {m}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
