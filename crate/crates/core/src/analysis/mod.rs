//! Normalization and metrics over sets of reach trajectories.

pub mod filter;
pub mod metrics;
pub mod normalize;
pub mod report;

pub use filter::FirSpec;
pub use metrics::{
    path_difference, path_variability, spectral_arc_length, spectrum_arc_length, task_time, terminal_error,
    upper_body_displacement, DiffForm, Marker, SpeedProfile, TimeStatistic,
};
pub use normalize::{joint_path, normalize_path, normalize_points, NormalizeOptions, NormalizedPath};
pub use report::{aggregate_report, Analysis, AnalysisOptions, CellMetrics, CellSeries, MetricsReport};

use crate::frames::Vec3;
use crate::simulator::{IterationResult, Trajectory};

/// One recorded reach, simulated or ingested.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub label: String,
    pub target: String,
    pub iteration: usize,
    pub target_pos: Vec3,
    pub trajectory: Trajectory,
}

impl From<&IterationResult> for Record {
    fn from(r: &IterationResult) -> Self {
        Record {
            label: r.modality.label().to_string(),
            target: r.target.clone(),
            iteration: r.iteration,
            target_pos: r.target_pos,
            trajectory: r.trajectory.clone(),
        }
    }
}
