//! Synthetic generators and the harnesses built on them: scale sweeps of the
//! fine-to-limit gaps, the direction-sensitivity task and coarse inference.

mod generators;
mod harness;
mod probe;

pub use generators::{
    gen_direction_task, gen_two_scale_regression, limit_target, random_cluster_graph, role_features,
    two_scale_sample, DeflectionFamily, DirectionInstance, NodeRole, SyntheticTaskSpec, TaskKind, TwoScaleSample,
    CENTRE_WEIGHT, SATELLITE_WEIGHT,
};
pub use harness::{
    convergence_failures, convergence_svg, decay_ratio, run_coarse_experiment, run_coarse_inference,
    run_direction_experiment, run_theorem_suite, strictly_decreasing, theorem_csv, Architecture,
    CoarseExperimentConfig, CoarseInferenceReport, DirectionExperimentConfig, DirectionOutcome, GapColumn,
    TheoremRow, TheoremSuiteConfig, THEOREM_CSV_HEADER,
};
pub use probe::logistic_probe_accuracy;

use crate::coarse::CoarseError;
use crate::digraph::GraphError;
use crate::holocalc::HoloError;
use crate::network::NetworkError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Holo(#[from] HoloError),
    #[error(transparent)]
    Coarse(#[from] CoarseError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("invalid experiment specification: {0}")]
    InvalidSpec(String),
}
