//! Task-performance, quality-of-motion and motor-behaviour metrics.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::normalize::NormalizedPath;
use crate::frames::Vec3;
use crate::simulator::Trajectory;
use crate::{Error, Result};

pub const DEFAULT_OMEGA_C: f64 = 40.0;

/// Minimum zero-padded FFT length for the spectral arc length.
pub const MIN_FFT_LEN: usize = 65536;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeStatistic {
    #[default]
    Mean,
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiffForm {
    #[default]
    Sum,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Marker {
    C7,
    Shoulder,
}

/// Uniformly sampled speed; m/s for the hand, rad/s for joints.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedProfile {
    pub values: Vec<f64>,
    pub dt: f64,
}

/// Derivative of uniformly sampled `x`: central differences inside,
/// one-sided at the ends.
pub fn gradient(x: &[f64], dt: f64) -> Vec<f64> {
    let n = x.len();
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n)
            .map(|i| match i {
                0 => (x[1] - x[0]) / dt,
                i if i == n - 1 => (x[n - 1] - x[n - 2]) / dt,
                i => (x[i + 1] - x[i - 1]) / (2.0 * dt),
            })
            .collect(),
    }
}

fn speed_of(coords: &[Vec<f64>], dt: f64) -> SpeedProfile {
    let rates: Vec<Vec<f64>> = coords.iter().map(|c| gradient(c, dt)).collect();
    let n = coords.first().map_or(0, Vec::len);
    let values = (0..n).map(|i| rates.iter().map(|r| r[i] * r[i]).sum::<f64>().sqrt()).collect();
    SpeedProfile { values, dt }
}

pub fn hand_speed(traj: &Trajectory) -> SpeedProfile {
    let coords: Vec<Vec<f64>> = (0..3).map(|k| traj.samples.iter().map(|s| s.hand[k]).collect()).collect();
    speed_of(&coords, traj.dt)
}

pub fn joint_speed(traj: &Trajectory) -> SpeedProfile {
    let coords =
        vec![traj.samples.iter().map(|s| s.joint.q_s).collect(), traj.samples.iter().map(|s| s.joint.q_e).collect()];
    speed_of(&coords, traj.dt)
}

/// Negative arc length of the normalized magnitude spectrum `vhat(omega)`
/// over `[0, omega_c]`. `omegas` must start at 0, increase strictly and reach
/// at least `omega_c`; the last interval is cut at `omega_c` by linear
/// interpolation.
pub fn spectrum_arc_length(omegas: &[f64], vhat: &[f64], omega_c: f64) -> Result<f64> {
    if omegas.len() != vhat.len() {
        return Err(Error::LengthMismatch { expected: omegas.len(), got: vhat.len() });
    }
    if omegas.len() < 2 || !(omega_c > 0.0) || omegas[omegas.len() - 1] < omega_c {
        return Err(Error::EmptyInput("spectrum does not cover [0, omega_c]"));
    }
    let k = omegas.iter().take_while(|w| **w < omega_c).count();
    let mut w: Vec<f64> = omegas[..k].to_vec();
    let mut v: Vec<f64> = vhat[..k].to_vec();
    let end = if omegas[k] == omega_c || k == 0 {
        vhat[k]
    } else {
        let f = (omega_c - omegas[k - 1]) / (omegas[k] - omegas[k - 1]);
        vhat[k - 1] + f * (vhat[k] - vhat[k - 1])
    };
    w.push(omega_c);
    v.push(end);

    let m = w.len();
    if m < 2 {
        return Err(Error::EmptyInput("spectrum does not cover [0, omega_c]"));
    }
    let deriv: Vec<f64> = (0..m)
        .map(|i| {
            if i == 0 {
                (v[1] - v[0]) / (w[1] - w[0])
            } else if i == m - 1 {
                (v[m - 1] - v[m - 2]) / (w[m - 1] - w[m - 2])
            } else {
                // second-order central difference on a non-uniform grid
                let hs = w[i] - w[i - 1];
                let hd = w[i + 1] - w[i];
                (hs * hs * v[i + 1] - hd * hd * v[i - 1] + (hd * hd - hs * hs) * v[i]) / (hs * hd * (hs + hd))
            }
        })
        .collect();
    let inv = 1.0 / omega_c;
    let f: Vec<f64> = deriv.iter().map(|d| inv.hypot(*d)).collect();
    let area: f64 = (1..m).map(|i| 0.5 * (w[i] - w[i - 1]) * (f[i] + f[i - 1])).sum();
    Ok(-area)
}

fn fft_len(n: usize) -> usize {
    (16 * n.next_power_of_two()).max(MIN_FFT_LEN)
}

/// Spectral arc length of a speed profile, cut off at `omega_c` rad/s.
pub fn spectral_arc_length(profile: &SpeedProfile, omega_c: f64) -> Result<f64> {
    if profile.values.is_empty() {
        return Err(Error::EmptyInput("speed profile is empty"));
    }
    if !(profile.dt > 0.0) {
        return Err(Error::Config(format!("sampling interval {} is not positive", profile.dt)));
    }
    let nfft = fft_len(profile.values.len());
    let d_omega = 2.0 * std::f64::consts::PI / (nfft as f64 * profile.dt);
    // bins up to the first one at or beyond omega_c
    let bins = ((omega_c / d_omega).ceil() as usize + 1).min(nfft / 2 + 1);

    let mut buf: Vec<Complex<f64>> = profile.values.iter().map(|v| Complex::new(*v, 0.0)).collect();
    buf.resize(nfft, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(nfft).process(&mut buf);

    let v0 = buf[0].norm();
    if !(v0 > 0.0) {
        return Err(Error::ZeroSignal);
    }
    let omegas: Vec<f64> = (0..bins).map(|k| k as f64 * d_omega).collect();
    let vhat: Vec<f64> = buf[..bins].iter().map(|c| c.norm() / v0).collect();
    spectrum_arc_length(&omegas, &vhat, omega_c)
}

/// Mean or median of the per-iteration end times.
pub fn task_time(t_f: &[f64], stat: TimeStatistic) -> Result<f64> {
    if t_f.is_empty() {
        return Err(Error::EmptyInput("no iterations"));
    }
    Ok(match stat {
        TimeStatistic::Mean => t_f.iter().sum::<f64>() / t_f.len() as f64,
        TimeStatistic::Median => {
            let mut v = t_f.to_vec();
            v.sort_by(f64::total_cmp);
            let n = v.len();
            if n % 2 == 1 {
                v[n / 2]
            } else {
                0.5 * (v[n / 2 - 1] + v[n / 2])
            }
        }
    })
}

/// Mean distance between final hand positions and the target, over
/// `(final, target)` pairs.
pub fn terminal_error(pairs: &[(Vec3, Vec3)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("no iterations"));
    }
    Ok(pairs.iter().map(|(p, t)| (p - t).norm()).sum::<f64>() / pairs.len() as f64)
}

fn check_lengths(paths: &[&NormalizedPath]) -> Result<usize> {
    let n = paths.first().map_or(0, |p| p.len());
    for p in paths {
        if p.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: p.len() });
        }
    }
    Ok(n)
}

/// Sample-wise mean of equally long paths. Accumulated relative to the
/// first path, so identical paths give back that path exactly.
pub fn mean_path(paths: &[NormalizedPath]) -> Result<NormalizedPath> {
    if paths.is_empty() {
        return Err(Error::EmptyInput("no paths"));
    }
    let n = check_lengths(&paths.iter().collect::<Vec<_>>())?;
    let base = &paths[0].points;
    let k = paths.len() as f64;
    let points = (0..n)
        .map(|i| {
            let (x, y) = paths
                .iter()
                .fold((0.0, 0.0), |(x, y), p| (x + (p.points[i][0] - base[i][0]), y + (p.points[i][1] - base[i][1])));
            [base[i][0] + x / k, base[i][1] + y / k]
        })
        .collect();
    Ok(NormalizedPath { points })
}

/// Per-sample population standard deviation, componentwise.
pub fn path_std(paths: &[NormalizedPath]) -> Result<NormalizedPath> {
    if paths.is_empty() {
        return Err(Error::EmptyInput("no paths"));
    }
    let n = check_lengths(&paths.iter().collect::<Vec<_>>())?;
    let base = &paths[0].points;
    let k = paths.len() as f64;
    let points = (0..n)
        .map(|i| {
            // deviations from the first path: exact zeros when all agree
            let d: Vec<(f64, f64)> =
                paths.iter().map(|p| (p.points[i][0] - base[i][0], p.points[i][1] - base[i][1])).collect();
            let (mx, my) = d.iter().fold((0.0, 0.0), |(x, y), (a, b)| (x + a, y + b));
            let (mx, my) = (mx / k, my / k);
            let (sx, sy) =
                d.iter().fold((0.0, 0.0), |(sx, sy), (a, b)| (sx + (a - mx) * (a - mx), sy + (b - my) * (b - my)));
            [(sx / k).sqrt(), (sy / k).sqrt()]
        })
        .collect();
    Ok(NormalizedPath { points })
}

/// Mean over samples of the norm of the per-sample population standard
/// deviation vector.
pub fn path_variability(paths: &[NormalizedPath]) -> Result<f64> {
    if paths.len() < 2 {
        return Err(Error::EmptyInput("variability needs at least two paths"));
    }
    let std = path_std(paths)?;
    if std.is_empty() {
        return Err(Error::EmptyInput("paths have no samples"));
    }
    Ok(std.points.iter().map(|s| s[0].hypot(s[1])).sum::<f64>() / std.len() as f64)
}

/// Sum (or mean) over samples of the distance between two mean paths.
pub fn path_difference(a: &NormalizedPath, b: &NormalizedPath, form: DiffForm) -> Result<f64> {
    let n = check_lengths(&[a, b])?;
    let sum: f64 = a.points.iter().zip(&b.points).map(|(p, q)| (p[0] - q[0]).hypot(p[1] - q[1])).sum();
    Ok(match form {
        DiffForm::Sum => sum,
        DiffForm::Mean if n == 0 => 0.0,
        DiffForm::Mean => sum / n as f64,
    })
}

/// Straight-line displacement of an upper-body marker from the first to the
/// last sample.
pub fn upper_body_displacement(traj: &Trajectory, marker: Marker) -> Result<f64> {
    if traj.samples.len() < 2 {
        return Err(Error::EmptyInput("displacement needs at least two samples"));
    }
    let at = |s: &crate::simulator::Sample| match marker {
        Marker::C7 => s.trunk,
        Marker::Shoulder => s.shoulder,
    };
    Ok((at(traj.last()) - at(&traj.samples[0])).norm())
}
