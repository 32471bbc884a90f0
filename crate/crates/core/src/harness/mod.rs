//! Simulation harness: scenarios, baseline schemes, sweeps and CSV output.

pub mod checks;
pub mod config;
pub mod output;
pub mod presets;
pub mod scheme;
pub mod sweep;

pub use config::{Config, Optimizer, Scenario, SweepVar};
pub use output::{read_results, write_results, ResultRow};
pub use presets::{preset, Figure, PresetOptions};
pub use scheme::{PhaseScheme, PowerScheme, SchemeSpec};
pub use sweep::{run_point, sweep, RateReport};
