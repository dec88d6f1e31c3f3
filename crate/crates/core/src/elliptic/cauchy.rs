use super::harmonic::Harmonic;
use crate::error::{Error, Result};
use crate::geom::{SurfaceRule, Vec3};
use crate::spectra::SeriesCoefficients;
use num_complex::Complex64;
use rayon::prelude::*;

/// Field values and radial derivatives on a sphere of radius `radius`, with quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyData {
    pub radius: f64,
    /// Unit directions of the quadrature nodes.
    pub directions: Vec<Vec3>,
    pub g: Vec<f64>,
    pub g_nu: Vec<f64>,
    pub weights: Vec<f64>,
}

impl CauchyData {
    pub fn new(radius: f64, directions: Vec<Vec3>, g: Vec<f64>, g_nu: Vec<f64>, rule: SurfaceRule) -> Result<Self> {
        let n = directions.len();
        if n == 0 || g.len() != n || g_nu.len() != n {
            return Err(Error::LayoutMismatch(format!("{n} directions, {} values, {} derivatives", g.len(), g_nu.len())));
        }
        if g.iter().chain(&g_nu).any(|v| !v.is_finite()) {
            return Err(Error::Precondition("Cauchy data contain non-finite values".into()));
        }
        let weights = rule.weights(&directions, radius);
        Ok(CauchyData { radius, directions, g, g_nu, weights })
    }

    /// Cauchy data of a known function, from its value and radial derivative.
    pub fn from_fn<F, D>(radius: f64, directions: Vec<Vec3>, value: F, radial: D, rule: SurfaceRule) -> Result<Self>
    where
        F: Fn(&Vec3) -> f64,
        D: Fn(&Vec3) -> f64,
    {
        let g = directions.iter().map(|d| value(&(d * radius))).collect();
        let g_nu = directions.iter().map(|d| radial(&(d * radius))).collect();
        Self::new(radius, directions, g, g_nu, rule)
    }

    /// Order-`k` data on the mid-sphere between the two sensor shells:
    /// `g = (u_o + u_i)/2`, `g_ν = (u_o − u_i)/δr`, both second-order accurate at `R + δr/2`.
    pub fn from_series(series: &SeriesCoefficients, k: usize, rule: SurfaceRule) -> Result<Self> {
        if k > series.k_max() {
            return Err(Error::Precondition(format!("order {k} exceeds series order {}", series.k_max())));
        }
        let r_in = series.inner.first().map(|x| x.norm()).unwrap_or(0.0);
        let r_out = series.outer.first().map(|x| x.norm()).unwrap_or(0.0);
        let dr = r_out - r_in;
        if !(dr > 0.0) {
            return Err(Error::LayoutMismatch("outer shell must lie outside the inner shell".into()));
        }
        let dirs: Vec<Vec3> = series.inner.iter().map(|x| x / x.norm()).collect();
        let (ui, uo) = (series.inner_values(k), series.outer_values(k));
        let g = ui.iter().zip(uo).map(|(a, b)| 0.5 * (a + b)).collect();
        let g_nu = ui.iter().zip(uo).map(|(a, b)| (b - a) / dr).collect();
        Self::new(r_in + 0.5 * dr, dirs, g, g_nu, rule)
    }

    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }

    pub fn points(&self) -> Vec<Vec3> {
        self.directions.iter().map(|d| d * self.radius).collect()
    }

    pub fn scaled(&self, alpha: f64) -> CauchyData {
        let mut out = self.clone();
        out.g.iter_mut().chain(out.g_nu.iter_mut()).for_each(|v| *v *= alpha);
        out
    }

    /// Pointwise sum; layouts must agree.
    pub fn combined(&self, other: &CauchyData, alpha: f64) -> Result<CauchyData> {
        if self.directions != other.directions || self.radius != other.radius {
            return Err(Error::LayoutMismatch("Cauchy data on different node sets".into()));
        }
        let mut out = self.clone();
        out.g.iter_mut().zip(&other.g).for_each(|(a, b)| *a += alpha * b);
        out.g_nu.iter_mut().zip(&other.g_nu).for_each(|(a, b)| *a += alpha * b);
        Ok(out)
    }
}

/// `F(φ) = ∮ (g ∂_νφ − g_ν φ) dσ`; equals `∫_B (−Δu) φ` for Cauchy data of `u`.
pub fn green_identity_functional(data: &CauchyData, phi: &Harmonic) -> Complex64 {
    data.directions
        .par_iter()
        .enumerate()
        .map(|(s, d)| {
            let x = d * data.radius;
            (phi.normal_derivative(&x) * data.g[s] - phi.eval(&x) * data.g_nu[s]) * data.weights[s]
        })
        .sum()
}

/// Relative mean-value defect `|⨍_B φ − φ(c)| / max(1, |φ(c)|)` by quadrature on the
/// fixed lattice `hℤ³`.
///
/// Nodes are weighted by the fraction of a slab of width `h` across the sphere
/// that lies inside, which keeps the volume error smooth in `h`.
pub fn mean_value_check(phi: &Harmonic, center: &Vec3, radius: f64, h: f64) -> f64 {
    let c = phi.eval(center);
    let lo: Vec<i64> = (0..3).map(|a| ((center[a] - radius) / h).floor() as i64 - 1).collect();
    let hi: Vec<i64> = (0..3).map(|a| ((center[a] + radius) / h).ceil() as i64 + 1).collect();
    let (num, den) = (lo[0]..=hi[0])
        .into_par_iter()
        .map(|i| {
            let mut num = Complex64::new(0.0, 0.0);
            let mut den = 0.0;
            for j in lo[1]..=hi[1] {
                for k in lo[2]..=hi[2] {
                    let x = Vec3::new(i as f64, j as f64, k as f64) * h;
                    let w = ((radius - (x - center).norm()) / h + 0.5).clamp(0.0, 1.0);
                    if w > 0.0 {
                        num += (phi.eval(&x) - c) * w;
                        den += w;
                    }
                }
            }
            (num, den)
        })
        .reduce(|| (Complex64::new(0.0, 0.0), 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    (num / den).norm() / c.norm().max(1.0)
}
