//! Spatial and temporal normalization of reach paths.

use nalgebra::{Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::filter::{filtfilt, lowpass_taps, resample_linear, FirSpec};
use crate::frames::Vec3;
use crate::simulator::Trajectory;
use crate::{Error, Result};

pub const DEFAULT_SAMPLES: usize = 200;

/// Below this start-to-target distance a path cannot be normalized.
pub const MIN_CHORD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizeOptions {
    pub samples: usize,
    /// Anti-alias filter; `None` disables filtering.
    pub filter: Option<FirSpec>,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        NormalizeOptions { samples: DEFAULT_SAMPLES, filter: Some(FirSpec::default()) }
    }
}

impl NormalizeOptions {
    /// One-line description of the filter, for output file headers.
    pub fn describe(&self) -> String {
        match self.filter {
            Some(f) => format!(
                "zero-phase FIR low-pass, order {}, Kaiser beta {}, cutoff Nyquist/(input/output sample ratio), linear resampling to {} samples",
                f.order, f.beta, self.samples
            ),
            None => format!("unfiltered, linear resampling to {} samples", self.samples),
        }
    }
}

/// A path of `samples` 2-D points; hand paths are unitless (chord = 1),
/// joint paths are in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedPath {
    pub points: Vec<[f64; 2]>,
}

impl NormalizedPath {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Low-pass (when downsampling) and resample one coordinate.
fn condition(x: &[f64], opts: &NormalizeOptions) -> Vec<f64> {
    let ratio = (x.len().saturating_sub(1)) as f64 / (opts.samples.saturating_sub(1)).max(1) as f64;
    let filtered = match opts.filter {
        Some(spec) if ratio > 1.0 => filtfilt(&lowpass_taps(&spec, 1.0 / ratio), x),
        _ => x.to_vec(),
    };
    resample_linear(&filtered, opts.samples)
}

fn resample_pair(x: &[f64], y: &[f64], opts: &NormalizeOptions) -> NormalizedPath {
    let x = condition(x, opts);
    let y = condition(y, opts);
    NormalizedPath { points: x.into_iter().zip(y).map(|(a, b)| [a, b]).collect() }
}

/// Unit vector orthogonal to `e1` spanning the residual motion's best-fit
/// plane, with a sign fixed by the motion itself.
fn second_axis(d: &[Vec3], e1: &Vec3) -> Vec3 {
    let residuals: Vec<Vec3> = d.iter().map(|v| v - e1 * v.dot(e1)).collect();
    let cov = residuals.iter().fold(Matrix3::zeros(), |acc, r| acc + r * r.transpose());
    let eig = SymmetricEigen::new(cov);
    let top = eig.eigenvalues.imax();
    let mut e2 = if eig.eigenvalues[top] > 0.0 {
        eig.eigenvectors.column(top).into_owned()
    } else {
        // straight path: any orthogonal axis gives y = 0
        let k = e1.iamin();
        let mut a = Vec3::zeros();
        a[k] = 1.0;
        a
    };
    e2 -= e1 * e2.dot(e1);
    let n = e2.norm();
    if !(n > 0.0) {
        return Vec3::zeros();
    }
    e2 /= n;
    let sum: f64 = residuals.iter().map(|r| r.dot(&e2)).sum();
    let scale = residuals.iter().map(|r| r.norm()).fold(0.0, f64::max);
    let s = if sum.abs() > 1e-9 * scale * residuals.len() as f64 {
        sum
    } else {
        residuals.iter().map(|r| r.dot(&e2)).max_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap_or(0.0)
    };
    if s < 0.0 {
        -e2
    } else {
        e2
    }
}

/// Similarity-normalize `points` so `points[0]` maps to (0,0) and `target`
/// to (1,0), project onto the best-fit plane containing the chord, filter
/// and resample.
pub fn normalize_points(points: &[Vec3], target: &Vec3, opts: &NormalizeOptions) -> Result<NormalizedPath> {
    if points.len() < 2 {
        return Err(Error::EmptyInput("path needs at least two samples"));
    }
    let start = points[0];
    let chord = target - start;
    let len = chord.norm();
    if !(len >= MIN_CHORD) {
        return Err(Error::DegeneratePath(len));
    }
    let e1 = chord / len;
    let d: Vec<Vec3> = points.iter().map(|p| p - start).collect();
    let e2 = second_axis(&d, &e1);
    let x: Vec<f64> = d.iter().map(|v| v.dot(&e1) / len).collect();
    let y: Vec<f64> = d.iter().map(|v| v.dot(&e2) / len).collect();
    Ok(resample_pair(&x, &y, opts))
}

/// Hand path normalized against `target_pos`.
pub fn normalize_path(traj: &Trajectory, target_pos: &Vec3, opts: &NormalizeOptions) -> Result<NormalizedPath> {
    normalize_points(&traj.hand_positions(), target_pos, opts)
}

/// `(q_s, q_e)` path resampled over the movement time; no spatial transform.
pub fn joint_path(traj: &Trajectory, opts: &NormalizeOptions) -> Result<NormalizedPath> {
    if traj.samples.len() < 2 {
        return Err(Error::EmptyInput("path needs at least two samples"));
    }
    let qs: Vec<f64> = traj.samples.iter().map(|s| s.joint.q_s).collect();
    let qe: Vec<f64> = traj.samples.iter().map(|s| s.joint.q_e).collect();
    Ok(resample_pair(&qs, &qe, opts))
}
