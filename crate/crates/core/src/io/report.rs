//! Report JSON and plot-data CSV output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::analysis::{Analysis, CellSeries, MetricsReport, NormalizedPath};
use crate::io::create_parent;
use crate::{Error, Result};

pub const REPORT_FILE: &str = "report.json";
pub const PLOT_DIR: &str = "plots";

pub fn write_json(path: &Path, report: &MetricsReport) -> Result<()> {
    create_parent(path)?;
    let mut text = serde_json::to_string_pretty(report).map_err(|e| Error::parse(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json(path: &Path) -> Result<MetricsReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e))
}

fn band_csv(header: &str, mean: &NormalizedPath, std: &NormalizedPath, cols: [&str; 2]) -> String {
    let mut out = String::new();
    for line in header.lines() {
        writeln!(out, "# {line}").unwrap();
    }
    writeln!(out, "n,mean_{0},mean_{1},std_{0},std_{1}", cols[0], cols[1]).unwrap();
    for (i, (m, s)) in mean.points.iter().zip(&std.points).enumerate() {
        writeln!(out, "{i},{:.10e},{:.10e},{:.10e},{:.10e}", m[0], m[1], s[0], s[1]).unwrap();
    }
    out
}

fn summary_csv(report: &MetricsReport) -> String {
    let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:.10e}"));
    let mut out = String::from(
        "controller,target,iterations,t_f_central,terminal_error_mean,sal_hand,sal_joint,var_hand,var_joint,diff_hand,diff_joint,disp_c7,disp_shoulder\n",
    );
    for c in &report.cells {
        writeln!(
            out,
            "{},{},{},{:.10e},{:.10e},{:.10e},{:.10e},{},{},{},{},{:.10e},{:.10e}",
            c.controller,
            c.target,
            c.iterations,
            c.t_f_central,
            c.terminal_error_mean,
            c.sal_hand,
            c.sal_joint,
            opt(c.var_hand),
            opt(c.var_joint),
            opt(c.diff_hand),
            opt(c.diff_joint),
            c.disp_c7,
            c.disp_shoulder
        )
        .unwrap();
    }
    out
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    create_parent(path)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Write `report.json`, `plots/summary.csv` and per-cell hand/joint band
/// files under `dir`. Returns the written paths.
pub fn write_analysis(dir: &Path, analysis: &Analysis) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let path = dir.join(REPORT_FILE);
    write_json(&path, &analysis.report)?;
    written.push(path);

    let plots = dir.join(PLOT_DIR);
    let path = plots.join("summary.csv");
    write_file(&path, &summary_csv(&analysis.report))?;
    written.push(path);

    let header =
        format!("{}\nmean and population std over iterations per normalized sample", analysis.report.normalization);
    for CellSeries { controller, target, hand_mean, hand_std, joint_mean, joint_std } in &analysis.series {
        let path = plots.join(format!("hand_{controller}_{target}.csv"));
        write_file(&path, &band_csv(&format!("hand path, unitless\n{header}"), hand_mean, hand_std, ["x", "y"]))?;
        written.push(path);
        let path = plots.join(format!("joint_{controller}_{target}.csv"));
        write_file(&path, &band_csv(&format!("joint path, rad\n{header}"), joint_mean, joint_std, ["q_s", "q_e"]))?;
        written.push(path);
    }
    Ok(written)
}
