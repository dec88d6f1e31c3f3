//! Constant-speed reference solution via spherical means.

use crate::geom::Vec3;
use crate::medium::{Bump, SourceSpec};
use crate::quad::gauss_legendre;
use rayon::prelude::*;

/// Mean of one radial bump over the sphere `|y − x| = radius`.
///
/// The bump is axisymmetric about the line through `x` and its centre, so the
/// mean reduces to `½∫ g(s(μ)) dμ` over the polar cosine, restricted to the arc
/// inside the support. There the integrand is a polynomial in μ of degree `m`.
fn bump_mean(b: &Bump, x: &Vec3, radius: f64, nodes: &(Vec<f64>, Vec<f64>)) -> f64 {
    let d = (x - b.center).norm();
    if radius == 0.0 {
        return b.radial(d);
    }
    if d < 1e-14 * b.rho {
        return b.radial(radius);
    }
    // s² = d² + R² − 2dRμ ≤ ρ²
    let mu0 = (d * d + radius * radius - b.rho * b.rho) / (2.0 * d * radius);
    if mu0 >= 1.0 {
        return 0.0;
    }
    let lo = mu0.max(-1.0);
    let half = 0.5 * (1.0 - lo);
    let mid = 0.5 * (1.0 + lo);
    let mut sum = 0.0;
    for (t, w) in nodes.0.iter().zip(&nodes.1) {
        let mu = mid + half * t;
        let s2 = (d * d + radius * radius - 2.0 * d * radius * mu).max(0.0);
        sum += w * b.radial(s2.sqrt());
    }
    0.5 * half * sum
}

/// Spherical mean `M_R f(x)` using `nodes` Gauss–Legendre points per bump.
pub fn spherical_mean(src: &SourceSpec, x: &Vec3, radius: f64, nodes: usize) -> f64 {
    let rule = gauss_legendre(nodes.max(2));
    src.bumps.iter().map(|b| bump_mean(b, x, radius, &rule)).sum()
}

/// `u(t, x) = ∂_t[t·M_{b0 t} f(x)]`, differentiated by a central difference in t.
pub fn kirchhoff_oracle(src: &SourceSpec, x: &Vec3, t: f64, b0: f64, nodes: usize) -> f64 {
    if t <= 0.0 {
        return src.eval_source(x);
    }
    let rule = gauss_legendre(nodes.max(2));
    let tm = |tau: f64| -> f64 { tau * src.bumps.iter().map(|b| bump_mean(b, x, b0 * tau, &rule)).sum::<f64>() };
    let dt = (1e-5 * src.bumps.iter().map(|b| b.rho).fold(f64::INFINITY, f64::min) / b0).min(0.5 * t);
    (tm(t + dt) - tm(t - dt)) / (2.0 * dt)
}

/// Oracle traces `[time][sensor]` for `levels` levels spaced by `dt`.
pub fn kirchhoff_series(src: &SourceSpec, points: &[Vec3], dt: f64, levels: usize, b0: f64, nodes: usize) -> Vec<f64> {
    let per_time: Vec<Vec<f64>> = (0..levels)
        .into_par_iter()
        .map(|t| points.iter().map(|p| kirchhoff_oracle(src, p, t as f64 * dt, b0, nodes)).collect())
        .collect();
    per_time.concat()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Closed-form radial integral `(1/(2dR))∫_{|d−R|}^{d+R} g(s) s ds`.
    fn radial_mean(b: &Bump, d: f64, radius: f64) -> f64 {
        let lo = (d - radius).abs();
        let hi = (d + radius).min(b.rho);
        if hi <= lo {
            return 0.0;
        }
        let (x, w) = gauss_legendre(40);
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let s: f64 = x.iter().zip(&w).map(|(t, w)| {
            let s = mid + half * t;
            w * b.radial(s) * s
        }).sum::<f64>() * half;
        s / (2.0 * d * radius)
    }

    #[test]
    fn mean_matches_radial_integral() {
        let src = SourceSpec::single(Vec3::new(0.1, -0.2, 0.05), 0.3, 2.0, 4);
        let x = Vec3::new(0.4, 0.1, -0.1);
        let d = (x - src.bumps[0].center).norm();
        for r in [0.05, 0.2, d, 0.5, 0.7] {
            let a = spherical_mean(&src, &x, r, 8);
            let b = radial_mean(&src.bumps[0], d, r);
            assert!((a - b).abs() < 1e-13, "R = {r}: {a} vs {b}");
        }
    }

    #[test]
    fn initial_value_and_finite_speed() {
        let src = SourceSpec::single(Vec3::zeros(), 0.3, 1.0, 3);
        let x = Vec3::new(0.15, 0.0, 0.0);
        assert_eq!(kirchhoff_oracle(&src, &x, 0.0, 1.0, 8), src.eval_source(&x));
        let early = kirchhoff_oracle(&src, &x, 1e-4, 1.0, 8);
        assert!((early - src.eval_source(&x)).abs() < 1e-6);
        let far = Vec3::new(1.0, 0.0, 0.0);
        assert_eq!(kirchhoff_oracle(&src, &far, 0.6, 1.0, 8), 0.0);
    }

    #[test]
    fn centre_value_matches_closed_form() {
        // At the bump centre u = g(b0 t) + b0 t g'(b0 t).
        let b = Bump { center: Vec3::zeros(), rho: 0.4, amplitude: 1.5, m: 4 };
        let src = SourceSpec { bumps: vec![b.clone()] };
        let b0 = 1.3;
        for t in [0.05, 0.1, 0.2, 0.29] {
            let r = b0 * t;
            let q = 1.0 - r * r / (b.rho * b.rho);
            let g = b.amplitude * q.powi(4);
            let dg = b.amplitude * 4.0 * q.powi(3) * (-2.0 * r / (b.rho * b.rho));
            let exact = g + r * dg;
            let v = kirchhoff_oracle(&src, &Vec3::zeros(), t, b0, 8);
            assert!((v - exact).abs() < 1e-8, "t = {t}: {v} vs {exact}");
        }
    }
}
