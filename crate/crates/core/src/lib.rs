//! Partitioning and entanglement scheduling for distributed quantum circuits
//! on Clos-topology quantum data centers.

pub mod circuit;
pub mod experiment;
pub mod metrics;
pub mod num;
pub mod partition;
pub mod physical;
pub mod scheduler;
pub mod time;
pub mod topology;

pub type DelayStatsF64 = metrics::DelayStats<f64>;
pub type DelayStatsF32 = metrics::DelayStats<f32>;
pub type PairedDelayStatsF64 = metrics::PairedDelayStats<f64>;
pub type DemandMatrixF64 = metrics::DemandMatrix<f64>;
pub type DemandMatrixF32 = metrics::DemandMatrix<f32>;
