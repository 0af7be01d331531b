//! Scenario ingestion and artifact serialization for the shipboard
//! energy-management engine. The `ems` binary in this crate wires these
//! pieces to the drivers in `ems-core`.

pub mod artifacts;
pub mod scenario;

pub use scenario::{Scenario, ScenarioError, ScenarioFile};
