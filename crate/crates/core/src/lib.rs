//! Analytical performance simulator for a hybrid in-memory transformer
//! inference accelerator: a projection engine built from NVM crossbars for
//! static-weight matrix-vector multiplies, an attention engine built from
//! in-SRAM compute tiles for the dynamic attention multiplies, and a shared
//! bus between them.
//!
//! The crate is organized around two strategy families, each behind a trait
//! and resolved by name at runtime:
//!
//! * [`policy`] — where dynamic MVM work executes (`hybrid`, `nvm-all`,
//!   `simd-dynamic`),
//! * [`schedule::dataflow`] — how a layer is phased over the engines
//!   (`traditional`, `seqblock:N`).
//!
//! A simulation run flows workload → mapping → segment graph → timeline →
//! report; see [`sim::run`].

pub mod cost;
pub mod error;
pub mod funcsim;
pub mod hw;
pub mod mapping;
pub mod policy;
pub mod presets;
pub mod schedule;
pub mod sim;
pub mod workload;

pub use error::Error;
