//! Energy cooperation between energy-harvesting base stations linked by a
//! power packet grid.
//!
//! Stations with surplus energy route it over the grid to stations that are
//! running low, choosing sources by hop distance and a drift-plus-penalty
//! score. Two benchmark policies, vehicle mobility, trace ingestion and a
//! slot-by-slot engine complete the simulator.

pub mod allocation;
pub mod config;
pub mod domain;
pub mod engine;
pub mod error;
pub mod ingest;
pub mod mobility;
pub mod report;
pub mod topology;
pub mod transfer;

pub use allocation::{AllocationDecision, ControlParam, Policy, PrioritySet, VirtualQueues};
pub use config::SimConfig;
pub use domain::{BaseStation, BsId, BsRole, EnergyBuffer, SimClock};
pub use engine::{compare, run, run_scenario, step, sweep_lambda, RunOutput, Scenario, SimState, SlotMetrics, Summary};
pub use error::{Error, Result};
pub use topology::{GridPos, LinkSchedule, LossModel, PpgGrid, Route};
pub use transfer::{AuditRow, TransferJob, TransferParams};
