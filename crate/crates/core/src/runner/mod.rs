//! Experiment harness: configuration, the five experiments, and artifact
//! output.

mod artifacts;
mod config;
mod experiments;
mod report;

pub use artifacts::{emit_artifacts, render_svg, write_summary, write_table};
pub use config::{ChebyshevRegion, ClusterSettings, ExperimentConfig, ExperimentKind, SolverSettings};
pub use experiments::{
    run_cluster_variants, run_coreset, run_pairwise, run_spectral_convergence, run_weighted_vs_uniform,
    CLUSTER_VARIANTS, WEIGHTED_VARIANTS,
};
pub use report::{version, ExperimentReport, Line, Plot, Series, SeriesData, Summary, SummaryRow, Table};

use crate::error::Result;

/// Runs whichever experiment `config` names.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    match config.experiment {
        ExperimentKind::Pairwise => run_pairwise(config),
        ExperimentKind::Coreset => run_coreset(config),
        ExperimentKind::ClusterVariants => run_cluster_variants(config),
        ExperimentKind::SpectralConvergence => run_spectral_convergence(config),
        ExperimentKind::WeightedVsUniform => run_weighted_vs_uniform(config),
    }
}

/// Every experiment with its default configuration.
pub fn list_experiments() -> Vec<(ExperimentKind, ExperimentConfig)> {
    ExperimentKind::ALL
        .into_iter()
        .map(|k| (k, ExperimentConfig::defaults(k)))
        .collect()
}
