//! Configuration-driven experiment runner behind the `ergomix` binary.

mod config;
mod run;

pub use config::{
    load_config, parse_config, ConfigError, ConstructionConfig, DensityConfig, DistConfig, MixConfig,
    RangeConfig, RootChoice, RootPolicy, RunConfig, SpacerKind, SpacersConfig, StageConfig,
};
pub use run::{
    emit_report, run_command, Command, Format, Payload, Report, RunError, EXIT_CONFIG, EXIT_OK,
    EXIT_PROPERTY,
};
