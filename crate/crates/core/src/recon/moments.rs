use crate::elliptic::{
    green_identity_functional, point_source_radial_derivative, point_source_solution, CauchyData, Harmonic, PointMassSet,
};
use crate::error::{Error, Result};
use crate::geom::{Rotation, SurfaceRule, Vec3};
use crate::quad::pairwise_sum;
use crate::spectra::SeriesCoefficients;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Constancy tolerance on `std/|mean|` of `u^(2)` across sensors.
pub const CONSTANCY_TOL: f64 = 1e-2;

/// Size of `B`, relative to the data scale `rms(u^(1))·R/b0`, below which the
/// data are treated as degenerate. Non-degenerate scenarios sit near 1; the
/// sensor scatter of `u^(2)` from discretisation is ~10⁻⁵ of that scale.
pub const DEGENERACY_REL: f64 = 1e-3;

/// The source constant `B = −u^(2)` recovered from sensor data.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BEstimate {
    pub value: f64,
    /// Sensor standard deviation of `u^(2)`.
    pub std: f64,
    pub relative_std: f64,
    /// `|B|` below this is refused by downstream divisions.
    pub threshold: f64,
}

impl BEstimate {
    pub fn is_degenerate(&self) -> bool {
        !(self.value.abs() > self.threshold)
    }

    /// The value, or [`Error::DegenerateB`] when it is too small to divide by.
    pub fn checked(&self) -> Result<f64> {
        if self.is_degenerate() {
            Err(Error::DegenerateB { value: self.value, threshold: self.threshold })
        } else {
            Ok(self.value)
        }
    }
}

/// `B = −mean u^(2)` on the inner sphere.
///
/// The degeneracy threshold is `DEGENERACY_REL·rms(u^(1))·R/b0`, a data-derived
/// scale of the same dimension as `u^(2)`. When both the mean and the sensor
/// spread of `u^(2)` fall below it the data are degenerate: the constancy check
/// is skipped (relative spread is meaningless around zero) and the estimate is
/// flagged instead. A small mean with a large spread is [`Error::NotConstant`].
pub fn recover_b(coeffs: &SeriesCoefficients, b0: f64) -> Result<BEstimate> {
    if coeffs.k_max() < 2 {
        return Err(Error::Precondition("B needs coefficients through order 2".into()));
    }
    let (mean, relative_std) = coeffs.constancy(2);
    let u1 = coeffs.inner_values(1);
    let rms1 = (pairwise_sum(&u1.iter().map(|v| v * v).collect::<Vec<_>>()) / u1.len() as f64).sqrt();
    let radius = coeffs.inner.first().map(|x| x.norm()).unwrap_or(1.0);
    let threshold = DEGENERACY_REL * rms1 * radius / b0;
    let est = BEstimate { value: -mean, std: relative_std * mean.abs(), relative_std, threshold };
    let vanishing = est.is_degenerate() && est.std < threshold;
    if !vanishing && !(relative_std <= CONSTANCY_TOL) {
        return Err(Error::NotConstant { ratio: relative_std, tolerance: CONSTANCY_TOL });
    }
    Ok(est)
}

/// Background term `b0⁻²|B_R|` of the measurement ball.
pub fn background_mass(b0: f64, radius: f64) -> f64 {
    4.0 / 3.0 * PI * radius.powi(3) / (b0 * b0)
}

/// `μ(φ) = F(φ)/B − b0⁻²|B_R|φ(0)`, the harmonic moment `Σ λ_k φ(x_k)` of the contrast.
pub fn contrast_moments(u4: &CauchyData, b: &BEstimate, b0: f64, phi: &Harmonic) -> Result<Complex64> {
    let bv = b.checked()?;
    Ok(green_identity_functional(u4, phi) / bv - phi.eval(&Vec3::zeros()) * background_mass(b0, u4.radius))
}

/// Harmonic monomial moments `m_n = Σλ_k z_k^n`, `m′_n = Σλ_k (x_k)₃ z_k^n`
/// in an optional rotated frame (`z` taken from `Q x`).
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSequence {
    pub moments: Vec<Complex64>,
    pub aux: Vec<Complex64>,
    /// Noise level on `m_n` is modelled as `noise·radius^n`.
    pub noise: f64,
    pub radius: f64,
    pub frame: Option<Rotation>,
}

impl MomentSequence {
    pub fn n_max(&self) -> usize {
        self.moments.len() - 1
    }

    pub fn noise_at(&self, n: usize) -> f64 {
        self.noise * self.radius.powi(n as i32)
    }
}

/// Anything that can produce harmonic moments in a requested frame.
pub trait MomentSource {
    fn sequence(&self, n_max: usize, frame: Option<&Rotation>) -> Result<MomentSequence>;
}

fn framed(phi: Harmonic, frame: Option<&Rotation>) -> Harmonic {
    match frame {
        Some(q) => phi.in_frame(*q),
        None => phi,
    }
}

/// Moments from `u^(4)` Cauchy data.
#[derive(Debug, Clone)]
pub struct ContrastData {
    pub u4: CauchyData,
    pub b: BEstimate,
    pub b0: f64,
    /// Relative noise floor `η`: moment noise is `η·b0⁻²|B_R|·R^n`.
    pub noise_rel: f64,
}

impl MomentSource for ContrastData {
    fn sequence(&self, n_max: usize, frame: Option<&Rotation>) -> Result<MomentSequence> {
        let mut moments = Vec::with_capacity(n_max + 1);
        let mut aux = Vec::with_capacity(n_max + 1);
        for n in 0..=n_max as u32 {
            moments.push(contrast_moments(&self.u4, &self.b, self.b0, &framed(Harmonic::power(n), frame))?);
            aux.push(contrast_moments(&self.u4, &self.b, self.b0, &framed(Harmonic::power_z3(n), frame))?);
        }
        Ok(MomentSequence {
            moments,
            aux,
            noise: self.noise_rel * background_mass(self.b0, self.u4.radius),
            radius: self.u4.radius,
            frame: frame.copied(),
        })
    }
}

/// Direct-sum oracle for synthetic point masses.
impl MomentSource for PointMassSet {
    fn sequence(&self, n_max: usize, frame: Option<&Rotation>) -> Result<MomentSequence> {
        let mut moments = vec![Complex64::new(0.0, 0.0); n_max + 1];
        let mut aux = moments.clone();
        for (x, l) in self.locations.iter().zip(&self.masses) {
            let y = frame.map_or(*x, |q| q * x);
            let z = Complex64::new(y.x, y.y);
            for n in 0..=n_max {
                let zn = z.powu(n as u32) * *l;
                moments[n] += zn;
                aux[n] += zn * y.z;
            }
        }
        let radius = self.locations.iter().map(|x| x.norm()).fold(0.0, f64::max).max(1e-3) * 1.5;
        Ok(MomentSequence { moments, aux, noise: 0.0, radius, frame: frame.copied() })
    }
}

/// `u^(4)` Cauchy data synthesised from `B` times the exact Poisson solution of
/// `−Δw = b0⁻² + Σλ_k δ_{x_k}`: background `−|x|²/(6b0²)` plus ball Green
/// functions on a larger auxiliary ball.
pub fn synthetic_contrast_data(masses: &PointMassSet, b: f64, b0: f64, radius: f64, directions: Vec<Vec3>) -> Result<CauchyData> {
    let aux = 1.4 * radius;
    let g: Vec<f64> = directions
        .iter()
        .map(|d| {
            let x = d * radius;
            Ok(b * (-x.norm_squared() / (6.0 * b0 * b0) + point_source_solution(masses, &x, aux)?))
        })
        .collect::<Result<_>>()?;
    let g_nu: Vec<f64> = directions
        .iter()
        .map(|d| {
            let x = d * radius;
            Ok(b * (-radius / (3.0 * b0 * b0) + point_source_radial_derivative(masses, &x, aux)?))
        })
        .collect::<Result<_>>()?;
    CauchyData::new(radius, directions, g, g_nu, SurfaceRule::EqualWeight)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::fibonacci_directions;

    fn series_with_u2(values: Vec<f64>) -> SeriesCoefficients {
        let dirs = fibonacci_directions(values.len() / 2);
        let inner: Vec<Vec3> = dirs.iter().map(|d| d * 0.5).collect();
        let outer: Vec<Vec3> = dirs.iter().map(|d| d * 0.55).collect();
        let s = values.len();
        SeriesCoefficients::new(inner, outer, vec![vec![0.0; s], vec![1.0; s], values], vec![0.0; 3]).unwrap()
    }

    #[test]
    fn b_from_constant_u2() {
        let b = recover_b(&series_with_u2(vec![-2e-3; 64]), 1.0).unwrap();
        assert!((b.value - 2e-3).abs() < 1e-15 && b.checked().is_ok());
        let doubled = recover_b(&series_with_u2(vec![-4e-3; 64]), 1.0).unwrap();
        assert!((doubled.value - 2.0 * b.value).abs() < 1e-15);
        let noisy: Vec<f64> = (0..64).map(|i| -2e-3 * (1.0 + 0.05 * (i as f64).sin())).collect();
        assert!(matches!(recover_b(&series_with_u2(noisy), 1.0), Err(Error::NotConstant { .. })));
        let zero = recover_b(&series_with_u2(vec![1e-15; 64]), 1.0).unwrap();
        assert!(zero.is_degenerate());
        let data = CauchyData::new(0.5, fibonacci_directions(8), vec![0.0; 8], vec![0.0; 8], SurfaceRule::EqualWeight).unwrap();
        assert!(matches!(contrast_moments(&data, &zero, 1.0, &Harmonic::constant(1.0)), Err(Error::DegenerateB { .. })));
    }

    #[test]
    fn moments_of_synthetic_contrast() {
        let est = BEstimate { value: 3e-3, std: 0.0, relative_std: 0.0, threshold: 1e-12 };
        let empty = PointMassSet::empty();
        let data = synthetic_contrast_data(&empty, est.value, 1.2, 0.5, fibonacci_directions(1024)).unwrap();
        for phi in crate::elliptic::library(3) {
            assert!(contrast_moments(&data, &est, 1.2, &phi).unwrap().norm() < 1e-5, "{:?}", phi.kind);
        }
        let c = Vec3::new(0.1, -0.05, 0.08);
        let lambda = (1.0 / 0.64 - 1.0) * 4.0 / 3.0 * PI * 0.12f64.powi(3);
        let one = PointMassSet::from_pairs(&[(c, lambda)]).unwrap();
        let data = synthetic_contrast_data(&one, est.value, 1.0, 0.5, fibonacci_directions(1024)).unwrap();
        let mu = contrast_moments(&data, &est, 1.0, &Harmonic::constant(1.0)).unwrap();
        assert!((mu.re - lambda).abs() < 1e-2 * lambda, "{mu} vs {lambda}");
        let seq = ContrastData { u4: data, b: est, b0: 1.0, noise_rel: 1e-4 }.sequence(3, None).unwrap();
        let direct = one.sequence(3, None).unwrap();
        for n in 0..=3 {
            assert!((seq.moments[n] - direct.moments[n]).norm() < 1e-2 * lambda);
            assert!((seq.aux[n] - direct.aux[n]).norm() < 1e-2 * lambda);
        }
    }
}
