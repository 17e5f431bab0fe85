//! Sweep, report, statistics and self-test drivers behind the CLI.

pub mod config;
pub mod report;
pub mod selftest;
pub mod stats;
pub mod sweep;

pub use config::HarnessConfig;
pub use report::{model_report, ModelReport};
pub use selftest::{run_selftest, SelftestReport};
pub use stats::{stats_report, StatsReport};
pub use sweep::{run_sweep, write_csv, SweepRow, SweepSpec};
