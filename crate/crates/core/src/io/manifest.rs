//! Batch manifest: which trajectory file belongs to which cell.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::Record;
use crate::frames::Vec3;
use crate::io::{create_parent, trajectory_csv};
use crate::simulator::{IterationFlags, IterationResult, Modality, Simulation};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Path relative to the manifest.
    pub file: String,
    pub controller: Modality,
    pub target: String,
    pub iteration: usize,
    pub seed: u64,
    pub target_pos: [f64; 3],
    pub t_f: f64,
    pub terminal_error: f64,
    pub flags: IterationFlags,
    pub max_out_of_plane: f64,
}

impl ManifestEntry {
    pub fn from_result(r: &IterationResult, file: String) -> Self {
        ManifestEntry {
            file,
            controller: r.modality,
            target: r.target.clone(),
            iteration: r.iteration,
            seed: r.seed,
            target_pos: [r.target_pos.x, r.target_pos.y, r.target_pos.z],
            t_f: r.t_f,
            terminal_error: r.terminal_error,
            flags: r.flags,
            max_out_of_plane: r.max_out_of_plane,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFailure {
    pub controller: Modality,
    pub target: String,
    pub iteration: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub rate_hz: f64,
    pub seed: u64,
    pub jitter_sigma: f64,
    pub subject_height: f64,
    pub arm_length: f64,
    pub entries: Vec<ManifestEntry>,
    #[serde(default)]
    pub failures: Vec<ManifestFailure>,
}

impl Manifest {
    pub const FILE_NAME: &'static str = "manifest.json";

    pub fn new(sim: &Simulation, seed: u64) -> Self {
        Manifest {
            rate_hz: sim.settings.rate_hz,
            seed,
            jitter_sigma: sim.settings.jitter_sigma,
            subject_height: sim.task.subject_height,
            arm_length: sim.task.arm_length,
            entries: Vec::new(),
            failures: Vec::new(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        create_parent(path)?;
        let mut text = serde_json::to_string_pretty(self).map_err(|e| Error::parse(path, e))?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e))
    }

    /// Load every listed trajectory, resolving files against `dir`.
    pub fn load_records(&self, dir: &Path) -> Result<Vec<Record>> {
        self.entries
            .iter()
            .map(|e| {
                let path: PathBuf = dir.join(&e.file);
                Ok(Record {
                    label: e.controller.label().to_string(),
                    target: e.target.clone(),
                    iteration: e.iteration,
                    target_pos: Vec3::from(e.target_pos),
                    trajectory: trajectory_csv::read(&path)?,
                })
            })
            .collect()
    }
}
