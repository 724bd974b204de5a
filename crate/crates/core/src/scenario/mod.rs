//! Scenario configuration, built-in presets and the subcommand pipeline
//! behind the command-line tool.

mod config;
mod presets;
mod run;

pub use config::{
    AnalysisSpec, GeometrySpec, InitialField, InitialSpec, MeshSpec, OutputSpec, ScenarioConfig, SourceSpec, TimeSpec,
    SCHEMA_VERSION,
};
pub use presets::{preset, PRESETS};
pub use run::{build_domain, error_value, initial_state, run, simulate_scenario, source, ArtifactWriter, Command};
