//! Config-driven experiment runner writing CSV tables, a JSON summary, a
//! text summary and a manifest of output hashes.

mod config;
mod output;
mod run;

pub use config::{
    parse_config, parse_config_with_overrides, ExperimentConfig, ExperimentsSection, GateTarget,
    GatesSection, GridSection, ModelSection, MonteCarloSection, OutputSection, ReferenceKind,
    SegmentKind, SegmentSection, SlopeGate, MIN_PATHS,
};
pub use output::{content_hash, tables_to_csv};
pub use run::{
    run_experiment, summary_text, DisplacementSummary, GateResult, RunManifest, RunOutcome,
    StrongErrorSummary, Summary, SupMomentSummary, TheoryExponent, EXACT_LEVEL,
};
