//! Scenario configuration, presets, run orchestration, validation checks,
//! and CSV/report output.

pub mod config;
pub mod csv;
pub mod presets;
pub mod runner;
pub mod validate;

pub use config::{parse_config, ConfigError, EngineKind, FieldConfig, ScenarioConfig};
pub use csv::{parse_csv, render_csv, write_csv};
pub use presets::{describe, preset_text, PRESET_NAMES};
pub use runner::{run_scenario, CheckResult, RunReport, ScenarioError};
pub use validate::{build_config, run_preset, validate_preset};
