//! Saturation throughput of Wi-Fi DCF and LTE-LAA LBT networks sharing one
//! unlicensed channel, LAA parameter tuning under three fairness criteria,
//! and a slot-level Monte Carlo simulator of the same contention process.

pub mod error;
pub mod fairness;
pub mod fixedpoint;
pub mod model;
pub mod simulator;
pub mod throughput;

pub use error::{Error, Result};
pub use fairness::{
    fairness, fairness_3gpp, fairness_access, fairness_proportional, per_user_residual,
    FairnessMode, FairnessResult,
};
pub use fixedpoint::{
    solve_coexistence, solve_coexistence_from, solve_wifi_only, tau_laa, tau_wifi,
    ContentionSolution, WifiOnlySolution,
};
pub use model::{
    delta_slots, frame_airtime, max_backoff_slots, Direction, LaaParams, PriorityClass, Scenario,
    SolverControls, WiFiParams, WifiMode,
};
pub use simulator::{simulate, simulate_batch, simulate_with_log, Horizon, SimConfig, SimStats};
pub use throughput::{
    coexistence_throughput, throughput_report, wifi_only_throughput, EventDurations,
    ThroughputReport,
};
