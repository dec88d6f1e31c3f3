use super::series::SeriesCoefficients;
use crate::error::{Result, Warning};
use crate::forward::BoundaryTrace;
use crate::quad::simpson_weights;
use rayon::prelude::*;

/// Integration window and tail diagnostics for time-domain transforms.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MomentOptions {
    /// Upper integration limit; `None` uses the whole trace.
    pub horizon: Option<f64>,
    /// Maximum share of `|m_k|` allowed from the last 10% of the window.
    pub tail_tol: f64,
    /// Fraction of the window over which a raised-cosine taper brings the
    /// integrand to zero; 0 is a hard cut-off.
    pub taper: f64,
}

impl Default for MomentOptions {
    fn default() -> Self {
        MomentOptions { horizon: None, tail_tol: 1e-2, taper: 0.0 }
    }
}

impl MomentOptions {
    pub fn with_horizon(horizon: f64) -> Self {
        MomentOptions { horizon: Some(horizon), ..Default::default() }
    }

    /// Number of time levels integrated.
    pub fn levels(&self, trace: &BoundaryTrace) -> usize {
        match self.horizon {
            Some(t) => (((t / trace.dt) + 1e-9).floor() as usize + 1).min(trace.times()),
            None => trace.times(),
        }
    }
}

/// Window factor at time `t` for a window ending at `t_end`.
fn taper_weight(t: f64, t_end: f64, taper: f64) -> f64 {
    let width = taper * t_end;
    if width <= 0.0 || t <= t_end - width {
        1.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * (t - (t_end - width)) / width).cos())
    }
}

/// Applies `Σ_n w_n g(t_n) u(t_n, x) dt` for every sensor (inner then outer) with Simpson weights.
fn weighted_integral<G: Fn(f64) -> f64 + Sync>(trace: &BoundaryTrace, levels: usize, taper: f64, g: G) -> Vec<f64> {
    let w = simpson_weights(levels);
    let dt = trace.dt;
    let t_end = (levels - 1) as f64 * dt;
    let kernel: Vec<f64> = w
        .iter()
        .enumerate()
        .map(|(n, w)| {
            let t = n as f64 * dt;
            w * g(t) * taper_weight(t, t_end, taper) * dt
        })
        .collect();
    let s = trace.sensors();
    (0..2 * s)
        .into_par_iter()
        .map(|col| {
            let (data, c) = if col < s { (&trace.u_inner, col) } else { (&trace.u_outer, col - s) };
            let mut acc = 0.0;
            for (t, kv) in kernel.iter().enumerate() {
                acc += kv * data[t * s + c];
            }
            acc
        })
        .collect()
}

fn rms(v: &[f64]) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() / v.len().max(1) as f64).sqrt()
}

/// Time moments `m_k(x) = ∫ t^k u(t, x) dt` at every sensor (inner then outer).
///
/// A [`Warning::TailWarning`] is returned when the trailing 10% of the window
/// carries more than `tail_tol` of the RMS moment.
pub fn time_moments(trace: &BoundaryTrace, k: usize, opts: &MomentOptions) -> (Vec<f64>, Option<Warning>) {
    let levels = opts.levels(trace);
    let m = weighted_integral(trace, levels, opts.taper, |t| t.powi(k as i32));
    let t_end = (levels - 1) as f64 * trace.dt;
    let t_tail = 0.9 * t_end;
    let tail = weighted_integral(trace, levels, opts.taper, |t| if t >= t_tail { t.powi(k as i32) } else { 0.0 });
    let (a, b) = (rms(&tail), rms(&m));
    let ratio = if b > 0.0 { a / b } else { 0.0 };
    let warning = (ratio > opts.tail_tol).then_some(Warning::TailWarning { order: k, tail_ratio: ratio, tolerance: opts.tail_tol });
    (m, warning)
}

/// `u^(k) = (−1)^k m_k / k!`.
pub fn coeffs_from_moments(moments: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut fact = 1.0;
    moments
        .iter()
        .enumerate()
        .map(|(k, m)| {
            if k > 0 {
                fact *= k as f64;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            m.iter().map(|v| sign * v / fact).collect()
        })
        .collect()
}

/// Moment-route coefficients `u^(0..=K)` with per-order tail ratios as truncation estimates.
pub fn series_from_trace(trace: &BoundaryTrace, k_max: usize, opts: &MomentOptions) -> (SeriesCoefficients, Vec<Warning>) {
    let mut moments = Vec::with_capacity(k_max + 1);
    let mut truncation = Vec::with_capacity(k_max + 1);
    let mut warnings = Vec::new();
    for k in 0..=k_max {
        let (m, w) = time_moments(trace, k, opts);
        let tail = tail_ratio(trace, k, opts);
        moments.push(m);
        truncation.push(tail);
        warnings.extend(w);
    }
    let values = coeffs_from_moments(&moments);
    let coeffs = SeriesCoefficients::new(trace.inner.clone(), trace.outer.clone(), values, truncation)
        .expect("trace layout is consistent by construction");
    (coeffs, warnings)
}

fn tail_ratio(trace: &BoundaryTrace, k: usize, opts: &MomentOptions) -> f64 {
    match time_moments(trace, k, &MomentOptions { tail_tol: f64::INFINITY, ..*opts }).1 {
        Some(Warning::TailWarning { tail_ratio, .. }) => tail_ratio,
        _ => 0.0,
    }
}

/// Laplace transform `û(p, x) = ∫ e^{−pt} u(t, x) dt` over the window.
pub fn laplace_at(trace: &BoundaryTrace, p: f64, opts: &MomentOptions) -> Result<Vec<f64>> {
    if !(p > 0.0) {
        return Err(crate::Error::Precondition(format!("Laplace variable p = {p} must be positive")));
    }
    Ok(weighted_integral(trace, opts.levels(trace), opts.taper, |t| (-p * t).exp()))
}

/// `∂_p û(p, x) = −∫ t e^{−pt} u dt`.
pub fn laplace_derivative_at(trace: &BoundaryTrace, p: f64, opts: &MomentOptions) -> Vec<f64> {
    weighted_integral(trace, opts.levels(trace), opts.taper, |t| -t * (-p * t).exp())
}
