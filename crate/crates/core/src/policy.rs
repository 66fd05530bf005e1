//! Mapping policies: interchangeable strategies for where dynamic-operand
//! MVM work executes. Each policy sits behind [`MappingPolicy`] and is
//! registered by name, so runs select one via config or CLI string.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    /// Static MVMs on NVM crossbars, dynamic MVMs on SRAM head tiles.
    Hybrid,
    /// Everything on NVM crossbars; dynamic stationaries are reprogrammed
    /// per inference.
    NvmAll,
    /// Dynamic MVMs on the temporal 1-D SIMD lanes of the crossbar engine.
    SimdDynamic,
}

/// Execution unit for the dynamic multiplies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DynamicUnit {
    SramAhct,
    NvmXbar,
    SimdLanes,
}

/// How the dynamic stationary operands (Q and V) are installed per layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StationaryWrite {
    SramBanks,
    NvmProgram,
    /// No stationary residency (vector-by-vector temporal execution).
    None,
}

pub trait MappingPolicy: Send + Sync {
    fn name(&self) -> &'static str;
    fn kind(&self) -> PolicyKind;
    fn dynamic_unit(&self) -> DynamicUnit;
    fn stationary_write(&self) -> StationaryWrite;
    /// Whether dynamic stationaries occupy NVM crossbars (and therefore
    /// count against projection capacity and endurance).
    fn dynamic_on_nvm(&self) -> bool {
        self.dynamic_unit() == DynamicUnit::NvmXbar
    }
    /// Whether oversized score blocks round-trip to shared memory over the
    /// interconnect. The SIMD path already operates out of shared memory.
    fn spills_oversized_scores(&self) -> bool {
        self.dynamic_unit() != DynamicUnit::SimdLanes
    }
}

pub struct Hybrid;
pub struct NvmAll;
pub struct SimdDynamic;

impl MappingPolicy for Hybrid {
    fn name(&self) -> &'static str {
        "hybrid"
    }
    fn kind(&self) -> PolicyKind {
        PolicyKind::Hybrid
    }
    fn dynamic_unit(&self) -> DynamicUnit {
        DynamicUnit::SramAhct
    }
    fn stationary_write(&self) -> StationaryWrite {
        StationaryWrite::SramBanks
    }
}

impl MappingPolicy for NvmAll {
    fn name(&self) -> &'static str {
        "nvm-all"
    }
    fn kind(&self) -> PolicyKind {
        PolicyKind::NvmAll
    }
    fn dynamic_unit(&self) -> DynamicUnit {
        DynamicUnit::NvmXbar
    }
    fn stationary_write(&self) -> StationaryWrite {
        StationaryWrite::NvmProgram
    }
}

impl MappingPolicy for SimdDynamic {
    fn name(&self) -> &'static str {
        "simd-dynamic"
    }
    fn kind(&self) -> PolicyKind {
        PolicyKind::SimdDynamic
    }
    fn dynamic_unit(&self) -> DynamicUnit {
        DynamicUnit::SimdLanes
    }
    fn stationary_write(&self) -> StationaryWrite {
        StationaryWrite::None
    }
}

type PolicyFactory = fn() -> Box<dyn MappingPolicy>;

const REGISTRY: &[(&str, PolicyFactory)] = &[
    ("hybrid", || Box::new(Hybrid)),
    ("nvm-all", || Box::new(NvmAll)),
    ("simd-dynamic", || Box::new(SimdDynamic)),
];

/// Registered policy names, in registration order.
pub fn names() -> Vec<&'static str> {
    REGISTRY.iter().map(|(n, _)| *n).collect()
}

/// Resolves a policy by its registered name.
pub fn lookup(name: &str) -> Result<Box<dyn MappingPolicy>> {
    REGISTRY
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, f)| f())
        .ok_or_else(|| {
            Error::InvalidConfig(format!(
                "unknown mapping policy '{name}' (known: {})",
                names().join(", ")
            ))
        })
}

pub fn from_kind(kind: PolicyKind) -> Box<dyn MappingPolicy> {
    match kind {
        PolicyKind::Hybrid => Box::new(Hybrid),
        PolicyKind::NvmAll => Box::new(NvmAll),
        PolicyKind::SimdDynamic => Box::new(SimdDynamic),
    }
}

impl PolicyKind {
    pub fn as_str(&self) -> &'static str {
        from_kind(*self).name()
    }

    pub fn parse(s: &str) -> Result<PolicyKind> {
        Ok(lookup(s)?.kind())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_resolves_every_registered_name() {
        for name in names() {
            let p = lookup(name).unwrap();
            assert_eq!(p.name(), name);
        }
        assert!(lookup("does-not-exist").is_err());
    }

    #[test]
    fn policy_traits_are_consistent() {
        assert_eq!(lookup("hybrid").unwrap().dynamic_unit(), DynamicUnit::SramAhct);
        assert!(lookup("nvm-all").unwrap().dynamic_on_nvm());
        assert!(!lookup("simd-dynamic").unwrap().spills_oversized_scores());
        assert_eq!(PolicyKind::parse("nvm-all").unwrap(), PolicyKind::NvmAll);
    }
}
