use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;

use super::{IterationResult, Modality, Simulation};
use crate::io::manifest::{Manifest, ManifestEntry, ManifestFailure};
use crate::io::trajectory_csv;
use crate::simulator::MotionScript;
use crate::{Error, Result};

/// One iteration to run.
#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    pub modality: Modality,
    pub target: String,
    pub iteration: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationFailure {
    pub job: Job,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct BatchOutput {
    pub results: Vec<IterationResult>,
    pub failures: Vec<IterationFailure>,
    pub manifest: Manifest,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-iteration seed derived from the batch seed and the cell identity only,
/// so it does not depend on execution order.
pub fn iteration_seed(base: u64, modality: Modality, target: &str, iteration: usize) -> u64 {
    // FNV-1a over the cell identity
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in modality.label().bytes().chain([0u8]).chain(target.bytes()) {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(splitmix64(base ^ h) ^ iteration as u64)
}

pub fn trajectory_file_name(modality: Modality, target: &str, iteration: usize) -> String {
    format!("{}_{}_{:02}.csv", modality.label(), target, iteration)
}

/// Run `task.iterations` iterations for every (modality, reach target) cell
/// and persist trajectories plus a manifest under `out_dir`.
///
/// Iterations run in parallel; results come back in (modality, target,
/// iteration) order whatever the scheduling. `overrides` replaces the
/// planned script of individual cells.
pub fn run_batch(
    sim: &Simulation,
    modalities: &[Modality],
    out_dir: &Path,
    base_seed: u64,
    overrides: &BTreeMap<(Modality, String), MotionScript>,
) -> Result<BatchOutput> {
    sim.validate()?;
    let mut jobs = Vec::new();
    for &modality in modalities {
        for target in sim.task.reach_targets() {
            for iteration in 0..sim.task.iterations {
                jobs.push(Job {
                    modality,
                    target: target.to_string(),
                    iteration,
                    seed: iteration_seed(base_seed, modality, target, iteration),
                });
            }
        }
    }

    let outcomes: Vec<std::result::Result<IterationResult, IterationFailure>> = jobs
        .par_iter()
        .map(|job| {
            let script = match overrides.get(&(job.modality, job.target.clone())) {
                Some(s) => Ok(s.clone()),
                None => sim.default_script(&job.target, job.modality),
            };
            script
                .and_then(|s| sim.run_iteration(&job.target, job.modality, &s, job.seed))
                .map(|mut r| {
                    r.iteration = job.iteration;
                    r
                })
                .map_err(|e| IterationFailure { job: job.clone(), error: e.to_string() })
        })
        .collect();

    let traj_dir = out_dir.join("trajectories");
    std::fs::create_dir_all(&traj_dir).map_err(|e| Error::io(&traj_dir, e))?;

    let mut results = Vec::new();
    let mut failures = Vec::new();
    let mut manifest = Manifest::new(sim, base_seed);
    for outcome in outcomes {
        match outcome {
            Ok(r) => {
                let name = trajectory_file_name(r.modality, &r.target, r.iteration);
                trajectory_csv::write(&traj_dir.join(&name), &r.trajectory)?;
                manifest.entries.push(ManifestEntry::from_result(&r, format!("trajectories/{name}")));
                results.push(r);
            }
            Err(f) => {
                manifest.failures.push(ManifestFailure {
                    controller: f.job.modality,
                    target: f.job.target.clone(),
                    iteration: f.job.iteration,
                    seed: f.job.seed,
                    error: f.error.clone(),
                });
                failures.push(f);
            }
        }
    }
    manifest.write(&out_dir.join(Manifest::FILE_NAME))?;
    Ok(BatchOutput { results, failures, manifest })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controllers::ControllerKind;

    #[test]
    fn seeds_depend_on_cell_only() {
        let ts = Modality::Prosthetic(ControllerKind::Ts);
        let a = iteration_seed(0, ts, "Far", 3);
        assert_eq!(a, iteration_seed(0, ts, "Far", 3));
        assert_ne!(a, iteration_seed(0, ts, "Far", 4));
        assert_ne!(a, iteration_seed(0, ts, "Mid", 3));
        assert_ne!(a, iteration_seed(1, ts, "Far", 3));
        assert_ne!(a, iteration_seed(0, Modality::AbleBodied, "Far", 3));
    }
}
