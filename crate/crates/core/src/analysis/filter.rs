//! Linear-phase Kaiser-windowed FIR low-pass, applied forward and backward.

/// Filter order (taps - 1) and Kaiser shape parameter.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FirSpec {
    pub order: usize,
    pub beta: f64,
}

impl Default for FirSpec {
    fn default() -> Self {
        FirSpec { order: 5, beta: 20.0 }
    }
}

/// Modified Bessel function of the first kind, order 0 (power series).
pub fn bessel_i0(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term > 1e-17 * sum {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

pub fn kaiser_window(taps: usize, beta: f64) -> Vec<f64> {
    if taps == 1 {
        return vec![1.0];
    }
    let m = (taps - 1) as f64;
    let norm = bessel_i0(beta);
    (0..taps)
        .map(|n| {
            let r = 2.0 * n as f64 / m - 1.0;
            bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / norm
        })
        .collect()
}

/// Windowed-sinc low-pass taps with unit DC gain. `cutoff` is a fraction of
/// the Nyquist frequency, in (0, 1].
pub fn lowpass_taps(spec: &FirSpec, cutoff: f64) -> Vec<f64> {
    let taps = spec.order + 1;
    let centre = spec.order as f64 / 2.0;
    let w = kaiser_window(taps, spec.beta);
    let mut h: Vec<f64> = (0..taps)
        .map(|n| {
            let x = cutoff * (n as f64 - centre);
            let sinc = if x == 0.0 { 1.0 } else { (std::f64::consts::PI * x).sin() / (std::f64::consts::PI * x) };
            cutoff * sinc * w[n]
        })
        .collect();
    let sum: f64 = h.iter().sum();
    h.iter_mut().for_each(|c| *c /= sum);
    h
}

fn convolve_causal(x: &[f64], h: &[f64]) -> Vec<f64> {
    // samples before the start are held at x[0]
    (0..x.len()).map(|i| h.iter().enumerate().map(|(k, c)| c * x[i.saturating_sub(k)]).sum()).collect()
}

/// Zero-phase filtering: odd reflection padding, forward and backward
/// passes, then a linear correction pinning both endpoints to the input.
pub fn filtfilt(h: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n < 3 || h.len() < 2 {
        return x.to_vec();
    }
    let pad = (3 * h.len()).min(n - 1);
    let (first, last) = (x[0], x[n - 1]);
    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| 2.0 * first - x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|i| 2.0 * last - x[n - 1 - i]));

    let mut y = convolve_causal(&ext, h);
    y.reverse();
    let mut y = convolve_causal(&y, h);
    y.reverse();
    let mut y = y[pad..pad + n].to_vec();

    let (e0, e1) = (first - y[0], last - y[n - 1]);
    let span = (n - 1) as f64;
    for (i, v) in y.iter_mut().enumerate() {
        *v += e0 + (e1 - e0) * i as f64 / span;
    }
    y[0] = first;
    y[n - 1] = last;
    y
}

/// Linear interpolation of uniformly sampled `x` onto `n_out` uniform samples
/// spanning the same interval.
pub fn resample_linear(x: &[f64], n_out: usize) -> Vec<f64> {
    let n = x.len();
    if n == 0 || n_out == 0 {
        return Vec::new();
    }
    if n == 1 || n_out == 1 {
        return vec![x[0]; n_out];
    }
    let span = (n - 1) as f64;
    let steps = (n_out - 1) as f64;
    (0..n_out)
        .map(|j| {
            let s = j as f64 * span / steps;
            let i = (s.floor() as usize).min(n - 2);
            let f = s - i as f64;
            if f == 0.0 {
                x[i]
            } else if f == 1.0 {
                x[i + 1]
            } else {
                x[i] + f * (x[i + 1] - x[i])
            }
        })
        .collect()
}
