use super::frequency::{elliptic_frequency_oracle, FrequencyOptions};
use super::series::SeriesCoefficients;
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::lattice::CellGrid;
use crate::medium::{SourceSpec, SpeedField};
use crate::quad::chebyshev_points;
use nalgebra::{DMatrix, DVector};

/// Laplace-domain samples `û(p_j, x_s)`, sensors ordered inner then outer.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceSamples {
    pub inner: Vec<Vec3>,
    pub outer: Vec<Vec3>,
    pub ps: Vec<f64>,
    /// `values[j][sensor]` at `ps[j]`.
    pub values: Vec<Vec<f64>>,
}

/// Default analyticity radius stand-in `δ_fit = 0.5·b0/R0`.
pub fn default_delta_fit(b0: f64, r0: f64) -> f64 {
    0.5 * b0 / r0
}

/// `count` Chebyshev frequencies in `(0.1·δ, δ)`.
pub fn fit_frequencies(delta: f64, count: usize) -> Vec<f64> {
    chebyshev_points(count, 0.1 * delta, delta)
}

/// Vandermonde condition number above which the fit is refused.
pub const MAX_CONDITION: f64 = 1e12;

/// Least-squares fit `û(p) ≈ Σ_{k=1..K} u^(k) p^k` per sensor (`u^(0)` constrained to 0).
///
/// The returned truncation vector holds the per-order RMS of the fit residual
/// relative to the RMS of the data.
pub fn fit_series(samples: &LaplaceSamples, k_max: usize) -> Result<SeriesCoefficients> {
    let mut ps = samples.ps.clone();
    ps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ps.dedup();
    if k_max == 0 || ps.len() < k_max + 2 || ps.len() != samples.ps.len() {
        return Err(Error::IllConditioned(format!(
            "{} distinct frequencies supplied; order {k_max} needs at least {}",
            ps.len(),
            k_max + 2
        )));
    }
    let m = samples.ps.len();
    let a = DMatrix::from_fn(m, k_max, |j, k| samples.ps[j].powi(k as i32 + 1));
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = smax / smin;
    if !(cond <= MAX_CONDITION) {
        return Err(Error::IllConditioned(format!("Vandermonde condition number {cond:e} exceeds {MAX_CONDITION:e}")));
    }
    let sensors = samples.inner.len() + samples.outer.len();
    let mut values = vec![vec![0.0; sensors]; k_max + 1];
    let mut resid_sq = 0.0;
    let mut data_sq = 0.0;
    for s in 0..sensors {
        let y = DVector::from_fn(m, |j, _| samples.values[j][s]);
        let c = svd.solve(&y, 0.0).map_err(|e| Error::IllConditioned(e.to_string()))?;
        resid_sq += (&a * &c - &y).norm_squared();
        data_sq += y.norm_squared();
        for k in 0..k_max {
            values[k + 1][s] = c[k];
        }
    }
    let rel = if data_sq > 0.0 { (resid_sq / data_sq).sqrt() } else { 0.0 };
    SeriesCoefficients::new(samples.inner.clone(), samples.outer.clone(), values, vec![rel; k_max + 1])
}

/// Elliptic-route samples at the given frequencies on lattice `lat`.
pub fn elliptic_samples(
    field: &SpeedField,
    src: &SourceSpec,
    ps: &[f64],
    lat: &CellGrid,
    inner: &[Vec3],
    outer: &[Vec3],
    opts: &FrequencyOptions,
) -> Result<LaplaceSamples> {
    let points: Vec<Vec3> = inner.iter().chain(outer).copied().collect();
    let mut values = Vec::with_capacity(ps.len());
    for &p in ps {
        values.push(elliptic_frequency_oracle(field, src, p, lat, &points, opts)?);
    }
    Ok(LaplaceSamples { inner: inner.to_vec(), outer: outer.to_vec(), ps: ps.to_vec(), values })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly_samples(k_max: usize, count: usize) -> (LaplaceSamples, Vec<Vec<f64>>) {
        let inner = vec![Vec3::x(), Vec3::y()];
        let outer = vec![Vec3::x() * 1.1, Vec3::y() * 1.1];
        let coeffs: Vec<Vec<f64>> = (0..=k_max)
            .map(|k| if k == 0 { vec![0.0; 4] } else { (0..4).map(|s| ((k + 3 * s) as f64).cos()).collect() })
            .collect();
        let ps = fit_frequencies(0.8, count);
        let values = ps
            .iter()
            .map(|p| (0..4).map(|s| (0..=k_max).map(|k| coeffs[k][s] * p.powi(k as i32)).sum()).collect())
            .collect();
        (LaplaceSamples { inner, outer, ps, values }, coeffs)
    }

    #[test]
    fn exact_polynomial_is_recovered() {
        let (samples, coeffs) = poly_samples(4, 8);
        let fit = fit_series(&samples, 4).unwrap();
        for k in 0..=4 {
            for s in 0..4 {
                assert!((fit.values[k][s] - coeffs[k][s]).abs() < 1e-10, "k {k} s {s}");
            }
        }
    }

    #[test]
    fn underdetermined_fit_is_refused() {
        let (mut samples, _) = poly_samples(4, 8);
        samples.ps.truncate(1);
        samples.values.truncate(1);
        assert!(matches!(fit_series(&samples, 4), Err(Error::IllConditioned(_))));
    }
}
