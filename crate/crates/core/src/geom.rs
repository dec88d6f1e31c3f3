//! Points, rotations, Fibonacci sphere layouts and surface quadrature on spheres.

use nalgebra::{Cholesky, DMatrix, DVector, Rotation3, Unit, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

pub type Vec3 = Vector3<f64>;
pub type Rotation = Rotation3<f64>;

pub fn vec3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

pub fn arr3(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

/// Golden-angle spiral on the unit sphere, `z_i = 1 - (2i+1)/n`.
pub fn fibonacci_directions(n: usize) -> Vec<Vec3> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            Vec3::new(rho * phi.cos(), rho * phi.sin(), z)
        })
        .collect()
}

/// Uniformly distributed random rotation (normalized Gaussian quaternion).
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> Rotation {
    let q: [f64; 4] = [
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    ];
    let quat = nalgebra::Quaternion::new(q[0], q[1], q[2], q[3]);
    Unit::new_normalize(quat).to_rotation_matrix()
}

/// Any unit vector orthogonal to `v` (which must be nonzero).
pub fn orthogonal_unit(v: &Vec3) -> Vec3 {
    let a = if v.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    v.cross(&a).normalize()
}

/// Total number of real spherical harmonics up to degree `l_max`.
pub fn harmonic_count(l_max: usize) -> usize {
    (l_max + 1) * (l_max + 1)
}

/// Orthonormal real spherical harmonics `Y_lm` for `l <= l_max` at a unit direction.
///
/// Ordering is `l` major, then `m = -l..=l`. Normalization gives
/// `∫_{S²} Y_lm Y_l'm' dσ = δ`.
pub fn real_harmonics(dir: &Vec3, l_max: usize, out: &mut [f64]) {
    debug_assert_eq!(out.len(), harmonic_count(l_max));
    let z = dir.z.clamp(-1.0, 1.0);
    let s = (1.0 - z * z).max(0.0).sqrt();
    let phi = dir.y.atan2(dir.x);

    // Fully normalized associated Legendre functions \bar P_l^m with
    // \bar P_0^0 = 1/sqrt(4π) so that Y_l0 = \bar P_l^0.
    let n = l_max + 1;
    let mut p = vec![0.0; n * n];
    let idx = |l: usize, m: usize| l * n + m;
    p[idx(0, 0)] = (1.0 / (4.0 * PI)).sqrt();
    for m in 1..n {
        let prev = p[idx(m - 1, m - 1)];
        p[idx(m, m)] = -((2.0 * m as f64 + 1.0) / (2.0 * m as f64)).sqrt() * s * prev;
    }
    for m in 0..n {
        if m + 1 < n {
            p[idx(m + 1, m)] = (2.0 * m as f64 + 3.0).sqrt() * z * p[idx(m, m)];
        }
        for l in (m + 2)..n {
            let lf = l as f64;
            let mf = m as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            p[idx(l, m)] = a * (z * p[idx(l - 1, m)] - b * p[idx(l - 2, m)]);
        }
    }
    let sqrt2 = std::f64::consts::SQRT_2;
    for l in 0..n {
        let base = l * l + l;
        out[base] = p[idx(l, 0)];
        for m in 1..=l {
            let mf = m as f64;
            out[base + m] = sqrt2 * p[idx(l, m)] * (mf * phi).cos();
            out[base - m] = sqrt2 * p[idx(l, m)] * (mf * phi).sin();
        }
    }
}

/// Dense harmonic design matrix, one row per direction.
pub fn harmonic_matrix(dirs: &[Vec3], l_max: usize) -> DMatrix<f64> {
    let m = harmonic_count(l_max);
    let mut a = DMatrix::zeros(dirs.len(), m);
    let mut row = vec![0.0; m];
    for (i, d) in dirs.iter().enumerate() {
        real_harmonics(d, l_max, &mut row);
        for (j, v) in row.iter().enumerate() {
            a[(i, j)] = *v;
        }
    }
    a
}

/// Largest degree whose harmonic count stays below half the number of points.
pub fn default_fit_degree(points: usize) -> usize {
    let mut l = 0;
    while harmonic_count(l + 1) * 2 <= points {
        l += 1;
    }
    l
}

/// Surface quadrature rule on a sphere sampled at a given set of directions.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum SurfaceRule {
    /// Every point carries `4πR²/N`.
    EqualWeight,
    /// Minimum-norm weights integrating all spherical harmonics up to `degree` exactly.
    HarmonicExact { degree: usize },
}

impl SurfaceRule {
    pub fn weights(&self, dirs: &[Vec3], radius: f64) -> Vec<f64> {
        let area = 4.0 * PI * radius * radius;
        let n = dirs.len();
        match *self {
            SurfaceRule::EqualWeight => vec![area / n as f64; n],
            SurfaceRule::HarmonicExact { degree } => {
                // Y w = e0 with Y the (harmonics × points) matrix; minimum norm
                // solution w = Yᵀ (Y Yᵀ)⁻¹ e0, computed around the equal-weight guess.
                let a = harmonic_matrix(dirs, degree);
                let gram = a.transpose() * &a;
                let m = gram.nrows();
                let mut rhs = DVector::zeros(m);
                rhs[0] = (4.0 * PI).sqrt();
                let w0 = DVector::from_element(n, 4.0 * PI / n as f64);
                let resid = &rhs - a.transpose() * &w0;
                let chol = Cholesky::new(gram).expect("harmonic Gram matrix must be positive definite");
                let w = w0 + &a * chol.solve(&resid);
                w.iter().map(|v| v * radius * radius).collect()
            }
        }
    }
}

/// Least-squares spherical-harmonic fit with a prefactored normal matrix.
///
/// Used to evaluate data sampled at scattered directions anywhere on the sphere.
pub struct SphericalFit {
    design: DMatrix<f64>,
    chol: Cholesky<f64, nalgebra::Dyn>,
    l_max: usize,
}

impl SphericalFit {
    pub fn new(dirs: &[Vec3], l_max: usize) -> Self {
        let design = harmonic_matrix(dirs, l_max);
        let gram = design.transpose() * &design;
        let chol = Cholesky::new(gram).expect("fit degree too high for the point set");
        SphericalFit { design, chol, l_max }
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn coefficients(&self, values: &[f64]) -> DVector<f64> {
        let y = DVector::from_column_slice(values);
        self.chol.solve(&(self.design.transpose() * y))
    }

    /// Harmonic rows for a list of target directions; reuse with [`Self::evaluate`].
    pub fn basis_at(&self, dirs: &[Vec3]) -> DMatrix<f64> {
        harmonic_matrix(dirs, self.l_max)
    }

    pub fn evaluate(basis: &DMatrix<f64>, coeffs: &DVector<f64>) -> DVector<f64> {
        basis * coeffs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fibonacci_points_are_unit_and_balanced() {
        let dirs = fibonacci_directions(512);
        assert_eq!(dirs.len(), 512);
        let mut c = Vec3::zeros();
        for d in &dirs {
            assert!((d.norm() - 1.0).abs() < 1e-14);
            c += d;
        }
        assert!(c.norm() / 512.0 < 1e-2);
    }

    #[test]
    fn harmonics_are_orthonormal_under_exact_rule() {
        // Gauss-Legendre in z times trapezoid in φ integrates degree ≤ 2·order exactly.
        let l_max = 6;
        let nz = 16;
        let nphi = 32;
        let (zs, wz) = crate::quad::gauss_legendre(nz);
        let m = harmonic_count(l_max);
        let mut gram = vec![0.0; m * m];
        let mut row = vec![0.0; m];
        for (z, w) in zs.iter().zip(&wz) {
            for k in 0..nphi {
                let phi = 2.0 * PI * k as f64 / nphi as f64;
                let s = (1.0 - z * z).sqrt();
                let d = Vec3::new(s * phi.cos(), s * phi.sin(), *z);
                real_harmonics(&d, l_max, &mut row);
                let wt = w * 2.0 * PI / nphi as f64;
                for a in 0..m {
                    for b in 0..m {
                        gram[a * m + b] += wt * row[a] * row[b];
                    }
                }
            }
        }
        for a in 0..m {
            for b in 0..m {
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((gram[a * m + b] - expect).abs() < 1e-12, "({a},{b}) = {}", gram[a * m + b]);
            }
        }
    }

    #[test]
    fn harmonic_exact_weights_integrate_low_degree_exactly() {
        let dirs = fibonacci_directions(400);
        let w = SurfaceRule::HarmonicExact { degree: 10 }.weights(&dirs, 2.0);
        let total: f64 = w.iter().sum();
        assert!((total - 16.0 * PI).abs() < 1e-10);
        // ∫ z² dσ over the sphere of radius 2 = 4π·4/3·... = (4/3)π R² with unit z.
        let z2: f64 = dirs.iter().zip(&w).map(|(d, w)| d.z * d.z * w).sum();
        assert!((z2 - 4.0 * PI * 4.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn spherical_fit_reproduces_band_limited_data() {
        let dirs = fibonacci_directions(300);
        let fit = SphericalFit::new(&dirs, 8);
        let f = |d: &Vec3| 1.0 + d.x * d.y - 0.5 * d.z.powi(3) + d.x.powi(4);
        let vals: Vec<f64> = dirs.iter().map(f).collect();
        let c = fit.coefficients(&vals);
        let targets = vec![Vec3::new(0.3, -0.4, 0.866).normalize(), Vec3::new(-1.0, 0.0, 0.0)];
        let basis = fit.basis_at(&targets);
        let out = SphericalFit::evaluate(&basis, &c);
        for (t, v) in targets.iter().zip(out.iter()) {
            assert!((f(t) - v).abs() < 1e-10);
        }
    }

    #[test]
    fn random_rotation_is_orthogonal() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let r = random_rotation(&mut rng);
        let m = r.matrix();
        assert!((m.transpose() * m - nalgebra::Matrix3::identity()).norm() < 1e-12);
        assert!((m.determinant() - 1.0).abs() < 1e-12);
    }
}
