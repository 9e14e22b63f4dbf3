//! Experiment harness for topotrack: synthetic market data on the IEEE
//! 30-bus grid, batch and online recovery runs, and their metrics.

pub mod config;
pub mod experiments;
pub mod io;
pub mod rng;
pub mod scenario;
pub mod simulate;

pub use config::{DailyShape, LineSwap, ScenarioConfig, TrackingConfig};
pub use experiments::{
    evaluate, run_batch_experiment, run_tracking_experiment, RecoveryReport, TrackingReport,
    WatchSummary,
};
pub use scenario::{IntervalInputs, Scenario};
pub use simulate::{simulate, simulate_range, Simulation, SimulationSummary, TopologySchedule};
