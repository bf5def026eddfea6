//! Per-cell (controller x target) aggregation of every metric.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{
    hand_speed, joint_speed, mean_path, path_difference, path_std, path_variability, spectral_arc_length, task_time,
    terminal_error, upper_body_displacement, DiffForm, Marker, TimeStatistic, DEFAULT_OMEGA_C,
};
use super::normalize::{joint_path, normalize_path, NormalizeOptions, NormalizedPath};
use super::Record;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub omega_c: f64,
    pub normalize: NormalizeOptions,
    pub time_statistic: TimeStatistic,
    pub diff_form: DiffForm,
    /// Label of the able-bodied reference for the difference metrics.
    pub reference: Option<String>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            omega_c: DEFAULT_OMEGA_C,
            normalize: NormalizeOptions::default(),
            time_statistic: TimeStatistic::Mean,
            diff_form: DiffForm::Sum,
            reference: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    pub controller: String,
    pub target: String,
    pub iterations: usize,
    pub t_f_central: f64,
    pub terminal_error_mean: f64,
    pub sal_hand: f64,
    pub sal_joint: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub var_hand: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub var_joint: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diff_hand: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diff_joint: Option<f64>,
    pub disp_c7: f64,
    pub disp_shoulder: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub omega_c: f64,
    pub samples: usize,
    pub time_statistic: TimeStatistic,
    pub diff_form: DiffForm,
    pub reference: Option<String>,
    pub normalization: String,
    pub notes: Vec<String>,
    pub warnings: Vec<String>,
    pub cells: Vec<CellMetrics>,
}

/// Mean and standard-deviation bands of one cell, for plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSeries {
    pub controller: String,
    pub target: String,
    pub hand_mean: NormalizedPath,
    pub hand_std: NormalizedPath,
    pub joint_mean: NormalizedPath,
    pub joint_std: NormalizedPath,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub report: MetricsReport,
    pub series: Vec<CellSeries>,
}

struct PerRecord {
    hand: NormalizedPath,
    joint: NormalizedPath,
    sal_hand: f64,
    sal_joint: f64,
    disp_c7: f64,
    disp_shoulder: f64,
}

fn per_record(r: &Record, opts: &AnalysisOptions) -> Result<PerRecord> {
    let traj = &r.trajectory;
    // anchored at the final hand position so every path ends at (1, 0)
    let end = traj.last().hand;
    Ok(PerRecord {
        hand: normalize_path(traj, &end, &opts.normalize)?,
        joint: joint_path(traj, &opts.normalize)?,
        sal_hand: spectral_arc_length(&hand_speed(traj), opts.omega_c)?,
        sal_joint: spectral_arc_length(&joint_speed(traj), opts.omega_c)?,
        disp_c7: upper_body_displacement(traj, Marker::C7)?,
        disp_shoulder: upper_body_displacement(traj, Marker::Shoulder)?,
    })
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

/// Aggregate every metric per (controller, target) cell. Cells keep the
/// order in which they first appear; iterations inside a cell are ordered
/// by index, so the result does not depend on input order within a cell.
pub fn aggregate_report(records: &[Record], opts: &AnalysisOptions) -> Result<Analysis> {
    let mut keys: Vec<(String, String)> = Vec::new();
    for r in records {
        let key = (r.label.clone(), r.target.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }

    let mut cells = Vec::new();
    let mut series = Vec::new();
    for (label, target) in &keys {
        let mut members: Vec<&Record> = records.iter().filter(|r| &r.label == label && &r.target == target).collect();
        members.sort_by_key(|r| r.iteration);
        let derived = members.par_iter().map(|r| per_record(r, opts)).collect::<Result<Vec<_>>>()?;

        let t_f: Vec<f64> = members.iter().map(|r| r.trajectory.last().t - r.trajectory.samples[0].t).collect();
        let pairs: Vec<_> = members.iter().map(|r| (r.trajectory.last().hand, r.target_pos)).collect();
        let hands: Vec<NormalizedPath> = derived.iter().map(|d| d.hand.clone()).collect();
        let joints: Vec<NormalizedPath> = derived.iter().map(|d| d.joint.clone()).collect();
        let multi = hands.len() >= 2;

        cells.push(CellMetrics {
            controller: label.clone(),
            target: target.clone(),
            iterations: members.len(),
            t_f_central: task_time(&t_f, opts.time_statistic)?,
            terminal_error_mean: terminal_error(&pairs)?,
            sal_hand: mean(derived.iter().map(|d| d.sal_hand)),
            sal_joint: mean(derived.iter().map(|d| d.sal_joint)),
            var_hand: if multi { Some(path_variability(&hands)?) } else { None },
            var_joint: if multi { Some(path_variability(&joints)?) } else { None },
            diff_hand: None,
            diff_joint: None,
            disp_c7: mean(derived.iter().map(|d| d.disp_c7)),
            disp_shoulder: mean(derived.iter().map(|d| d.disp_shoulder)),
        });
        series.push(CellSeries {
            controller: label.clone(),
            target: target.clone(),
            hand_mean: mean_path(&hands)?,
            hand_std: path_std(&hands)?,
            joint_mean: mean_path(&joints)?,
            joint_std: path_std(&joints)?,
        });
    }

    let mut warnings = Vec::new();
    if let Some(reference) = &opts.reference {
        for i in 0..cells.len() {
            let target = cells[i].target.clone();
            let found = series.iter().find(|s| &s.controller == reference && s.target == target);
            match found {
                Some(ab) => {
                    cells[i].diff_hand = Some(path_difference(&ab.hand_mean, &series[i].hand_mean, opts.diff_form)?);
                    cells[i].diff_joint = Some(path_difference(&ab.joint_mean, &series[i].joint_mean, opts.diff_form)?);
                }
                None => warnings.push(format!(
                    "no `{reference}` reference for target {target}; difference metrics omitted for {}",
                    cells[i].controller
                )),
            }
        }
    }

    let report = MetricsReport {
        omega_c: opts.omega_c,
        samples: opts.normalize.samples,
        time_statistic: opts.time_statistic,
        diff_form: opts.diff_form,
        reference: opts.reference.clone(),
        normalization: opts.normalize.describe(),
        notes: vec![
            "spectral arc length is computed on the original-time speed profile, before normalization".into(),
            "hand paths are anchored at the final hand position, which maps to (1, 0)".into(),
        ],
        warnings,
        cells,
    };
    Ok(Analysis { report, series })
}
