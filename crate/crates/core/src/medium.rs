//! Piecewise-constant speed fields over (holed) ball inclusions, bump sources,
//! admissibility checks and lattice sampling.

use crate::error::{Error, Result, Warning};
use crate::geom::Vec3;
use crate::lattice::{CellGrid, Field3};
use crate::quad::pairwise_sum;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Closed ball removed from an inclusion; the speed inside is the background speed.
#[derive(Debug, Clone, PartialEq)]
pub struct Hole {
    pub center: Vec3,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BallInclusion {
    pub center: Vec3,
    pub radius: f64,
    pub speed: f64,
    pub holes: Vec<Hole>,
}

impl BallInclusion {
    pub fn ball(center: Vec3, radius: f64, speed: f64) -> Self {
        BallInclusion { center, radius, speed, holes: Vec::new() }
    }

    /// True if `x` lies in the open ball and outside every closed hole.
    pub fn contains(&self, x: &Vec3) -> bool {
        if (x - self.center).norm() >= self.radius {
            return false;
        }
        !self.holes.iter().any(|h| (x - h.center).norm() <= h.radius)
    }

    /// Signed volume `|B_r| - Σ|B_s|`.
    pub fn volume(&self) -> f64 {
        ball_volume(self.radius) - self.holes.iter().map(|h| ball_volume(h.radius)).sum::<f64>()
    }
}

pub fn ball_volume(r: f64) -> f64 {
    4.0 / 3.0 * PI * r * r * r
}

/// Volume of `B_{r1}(c1) ∩ B_{r2}(c2)` (lens formula).
pub fn ball_intersection_volume(c1: &Vec3, r1: f64, c2: &Vec3, r2: f64) -> f64 {
    let d = (c1 - c2).norm();
    if d >= r1 + r2 {
        return 0.0;
    }
    if d <= (r1 - r2).abs() {
        return ball_volume(r1.min(r2));
    }
    let s = r1 + r2 - d;
    PI * s * s * (d * d + 2.0 * d * (r1 + r2) - 3.0 * (r1 - r2).powi(2)) / (12.0 * d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedField {
    pub b0: f64,
    pub inclusions: Vec<BallInclusion>,
    pub r0: f64,
    pub omega_radius: f64,
}

impl SpeedField {
    pub fn homogeneous(b0: f64, r0: f64) -> Self {
        SpeedField { b0, inclusions: Vec::new(), r0, omega_radius: 0.8 * r0 }
    }

    pub fn eval_speed(&self, x: &Vec3) -> f64 {
        self.inclusions.iter().find(|inc| inc.contains(x)).map_or(self.b0, |inc| inc.speed)
    }

    pub fn max_speed(&self) -> f64 {
        self.inclusions.iter().map(|i| i.speed).fold(self.b0, f64::max)
    }

    /// Lower bound `a` of the speed: `min(b_k, b0)`.
    pub fn min_speed(&self) -> f64 {
        self.inclusions.iter().map(|i| i.speed).fold(self.b0, f64::min)
    }

    /// `max_k |1 - b_k²/b0²|`, exact over the finite set of speeds.
    pub fn contrast_norm(&self) -> f64 {
        self.inclusions.iter().map(|i| (1.0 - (i.speed / self.b0).powi(2)).abs()).fold(0.0, f64::max)
    }

    /// Point masses `λ = (b_k⁻² - b0⁻²)|B_r|` at ball centres and the opposite
    /// sign at hole centres.
    pub fn point_masses(&self) -> Vec<(Vec3, f64)> {
        let mut out = Vec::new();
        for inc in &self.inclusions {
            let contrast = inc.speed.powi(-2) - self.b0.powi(-2);
            out.push((inc.center, contrast * ball_volume(inc.radius)));
            for h in &inc.holes {
                out.push((h.center, -contrast * ball_volume(h.radius)));
            }
        }
        out
    }

    /// Ensures disjointness, nesting of holes and containment in the Ω ball.
    pub fn validate_geometry(&self) -> Result<()> {
        if !(self.b0 > 0.0) {
            return Err(Error::GeometryViolation(format!("background speed {} must be positive", self.b0)));
        }
        if !(self.omega_radius > 0.0 && self.omega_radius < self.r0) {
            return Err(Error::GeometryViolation(format!(
                "omega radius {} must lie in (0, R0 = {})",
                self.omega_radius, self.r0
            )));
        }
        for (k, inc) in self.inclusions.iter().enumerate() {
            if !(inc.radius > 0.0) || !(inc.speed > 0.0) {
                return Err(Error::GeometryViolation(format!("inclusion {k}: radius and speed must be positive")));
            }
            if inc.center.norm() + inc.radius >= self.omega_radius {
                return Err(Error::GeometryViolation(format!(
                    "inclusion {k} (|center| + r = {:.4}) is not inside the omega ball of radius {}",
                    inc.center.norm() + inc.radius,
                    self.omega_radius
                )));
            }
            for (p, hole) in inc.holes.iter().enumerate() {
                if !(hole.radius > 0.0) || (hole.center - inc.center).norm() + hole.radius >= inc.radius {
                    return Err(Error::GeometryViolation(format!(
                        "hole {p} of inclusion {k} is not strictly inside its ball"
                    )));
                }
                for (q, other) in inc.holes.iter().enumerate().skip(p + 1) {
                    if (hole.center - other.center).norm() <= hole.radius + other.radius {
                        return Err(Error::GeometryViolation(format!(
                            "holes {p} and {q} of inclusion {k} overlap"
                        )));
                    }
                }
            }
        }
        for (a, ia) in self.inclusions.iter().enumerate() {
            for (b, ib) in self.inclusions.iter().enumerate().skip(a + 1) {
                let d = (ia.center - ib.center).norm();
                if d <= ia.radius + ib.radius {
                    return Err(Error::GeometryViolation(format!(
                        "inclusions {a} and {b} overlap (distance {d:.4} <= {:.4})",
                        ia.radius + ib.radius
                    )));
                }
            }
        }
        Ok(())
    }

    /// Samples the speed at cell centres without smoothing.
    pub fn sample(&self, grid: &CellGrid) -> (Field3, Vec<Warning>) {
        let h = grid.spacing();
        let mut warnings = Vec::new();
        for (k, inc) in self.inclusions.iter().enumerate() {
            if inc.radius < 3.0 * h {
                warnings.push(Warning::GridTooCoarse { inclusion: k, radius: inc.radius, spacing: h });
            }
            for hole in &inc.holes {
                if hole.radius < 3.0 * h {
                    warnings.push(Warning::GridTooCoarse { inclusion: k, radius: hole.radius, spacing: h });
                }
            }
        }
        (Field3::from_fn(*grid, |x| self.eval_speed(x)), warnings)
    }

    pub fn scaled(&self, t: f64) -> SpeedField {
        SpeedField {
            b0: self.b0,
            r0: self.r0 * t,
            omega_radius: self.omega_radius * t,
            inclusions: self
                .inclusions
                .iter()
                .map(|inc| BallInclusion {
                    center: inc.center * t,
                    radius: inc.radius * t,
                    speed: inc.speed,
                    holes: inc.holes.iter().map(|h| Hole { center: h.center * t, radius: h.radius * t }).collect(),
                })
                .collect(),
        }
    }

    /// Applies a rigid rotation about the origin to every inclusion.
    pub fn rotated(&self, rot: &crate::geom::Rotation) -> SpeedField {
        let mut out = self.clone();
        for inc in &mut out.inclusions {
            inc.center = rot * inc.center;
            for h in &mut inc.holes {
                h.center = rot * h.center;
            }
        }
        out
    }
}

/// Polynomial bump `A (1 - |x-c|²/ρ²)₊^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bump {
    pub center: Vec3,
    pub rho: f64,
    pub amplitude: f64,
    pub m: u32,
}

impl Bump {
    #[inline]
    pub fn radial(&self, s: f64) -> f64 {
        let q = 1.0 - (s * s) / (self.rho * self.rho);
        if q <= 0.0 { 0.0 } else { self.amplitude * q.powi(self.m as i32) }
    }

    #[inline]
    pub fn eval(&self, x: &Vec3) -> f64 {
        self.radial((x - self.center).norm())
    }

    /// Closed-form `∫ f dx = 4πAρ³ ∫₀¹ (1-s²)^m s² ds`.
    pub fn integral(&self) -> f64 {
        // I_0 = 1/3, I_m = 2m/(2m+3) I_{m-1}
        let mut i = 1.0 / 3.0;
        for k in 1..=self.m {
            let k = k as f64;
            i *= 2.0 * k / (2.0 * k + 3.0);
        }
        4.0 * PI * self.amplitude * self.rho.powi(3) * i
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceSpec {
    pub bumps: Vec<Bump>,
}

impl SourceSpec {
    pub fn single(center: Vec3, rho: f64, amplitude: f64, m: u32) -> Self {
        SourceSpec { bumps: vec![Bump { center, rho, amplitude, m }] }
    }

    pub fn eval_source(&self, x: &Vec3) -> f64 {
        self.bumps.iter().map(|b| b.eval(x)).sum()
    }

    pub fn sample(&self, grid: &CellGrid) -> Field3 {
        Field3::from_fn(*grid, |x| self.eval_source(x))
    }

    pub fn scaled_amplitude(&self, alpha: f64) -> SourceSpec {
        SourceSpec {
            bumps: self.bumps.iter().map(|b| Bump { amplitude: b.amplitude * alpha, ..b.clone() }).collect(),
        }
    }

    /// Largest distance from the origin reached by any bump support.
    pub fn support_radius(&self) -> f64 {
        self.bumps.iter().map(|b| b.center.norm() + b.rho).fold(0.0, f64::max)
    }

    pub fn validate(&self, omega_radius: f64) -> Result<()> {
        if self.bumps.is_empty() {
            return Err(Error::GeometryViolation("source has no bumps".into()));
        }
        for (k, b) in self.bumps.iter().enumerate() {
            if b.m < 3 {
                return Err(Error::GeometryViolation(format!("bump {k}: smoothness exponent m = {} < 3", b.m)));
            }
            if !(b.rho > 0.0) {
                return Err(Error::GeometryViolation(format!("bump {k}: support radius must be positive")));
            }
            if b.center.norm() + b.rho > omega_radius {
                return Err(Error::GeometryViolation(format!(
                    "bump {k} support (|center| + rho = {:.4}) leaves the omega ball of radius {omega_radius}",
                    b.center.norm() + b.rho
                )));
            }
        }
        if self.bumps.iter().all(|b| b.amplitude == 0.0) {
            return Err(Error::GeometryViolation("all bump amplitudes vanish".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reason {
    /// `‖1 - c²/b0²‖∞ ≥ 1`.
    ContrastBound,
    /// `|∫ f/c²|` below the non-degeneracy tolerance.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    Fail(Vec<Reason>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub contrast_norm: f64,
    pub source_integral: f64,
    pub degeneracy_threshold: f64,
    pub verdict: Verdict,
}

impl AdmissibilityReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Midpoint-rule `∫ f/c²` on a cell-centred lattice of spacing `h` covering the Ω ball.
pub fn source_integral(field: &SpeedField, src: &SourceSpec, h: f64) -> f64 {
    let grid = CellGrid::covering(field.omega_radius, h);
    let n = grid.n;
    let vol = grid.cell_volume();
    let slabs: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = Vec::with_capacity(n * n);
            for j in 0..n {
                for k in 0..n {
                    let x = grid.center(i, j, k);
                    let f = src.eval_source(&x);
                    if f != 0.0 {
                        row.push(f / field.eval_speed(&x).powi(2));
                    }
                }
            }
            pairwise_sum(&row)
        })
        .collect();
    pairwise_sum(&slabs) * vol
}

/// Admissibility of the pair (c, f), with geometry failures reported as errors.
pub fn check_admissible(field: &SpeedField, src: &SourceSpec, h: f64) -> Result<AdmissibilityReport> {
    field.validate_geometry()?;
    src.validate(field.omega_radius)?;
    let contrast_norm = field.contrast_norm();
    let integral = source_integral(field, src, h);

    let grid = CellGrid::covering(field.omega_radius, h);
    let mut f_max = src.bumps.iter().map(|b| src.eval_source(&b.center).abs()).fold(0.0, f64::max);
    for i in 0..grid.n {
        for j in 0..grid.n {
            for k in 0..grid.n {
                f_max = f_max.max(src.eval_source(&grid.center(i, j, k)).abs());
            }
        }
    }
    let threshold = 1e-6 * f_max * ball_volume(field.omega_radius);

    let mut reasons = Vec::new();
    if contrast_norm >= 1.0 {
        reasons.push(Reason::ContrastBound);
    }
    if integral.abs() <= threshold {
        reasons.push(Reason::Degenerate);
    }
    Ok(AdmissibilityReport {
        contrast_norm,
        source_integral: integral,
        degeneracy_threshold: threshold,
        verdict: if reasons.is_empty() { Verdict::Pass } else { Verdict::Fail(reasons) },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_inclusion(speed: f64) -> SpeedField {
        SpeedField {
            b0: 1.0,
            r0: 1.0,
            omega_radius: 0.8,
            inclusions: vec![BallInclusion {
                center: Vec3::new(0.2, 0.0, 0.0),
                radius: 0.2,
                speed,
                holes: vec![Hole { center: Vec3::new(0.25, 0.0, 0.0), radius: 0.05 }],
            }],
        }
    }

    #[test]
    fn speed_regions() {
        let f = one_inclusion(0.9);
        assert_eq!(f.eval_speed(&Vec3::new(0.7, 0.0, 0.0)), 1.0);
        assert_eq!(f.eval_speed(&Vec3::new(0.1, 0.0, 0.0)), 0.9);
        assert_eq!(f.eval_speed(&Vec3::new(0.26, 0.0, 0.0)), 1.0);
    }

    #[test]
    fn bump_values() {
        let s = SourceSpec::single(Vec3::zeros(), 1.0, 1.0, 3);
        assert_eq!(s.eval_source(&Vec3::new(2.0, 0.0, 0.0)), 0.0);
        assert_eq!(s.eval_source(&Vec3::zeros()), 1.0);
        assert!((s.eval_source(&Vec3::new(0.0, 0.5, 0.0)) - 0.421875).abs() < 1e-15);
        assert!((s.bumps[0].integral() - 4.0 * PI * 16.0 / 315.0).abs() < 1e-14);
    }

    #[test]
    fn admissibility_examples() {
        let src = SourceSpec::single(Vec3::zeros(), 0.3, 1.0, 4);
        let hom = SpeedField::homogeneous(1.0, 1.0);
        let r = check_admissible(&hom, &src, 0.02).unwrap();
        assert_eq!(r.contrast_norm, 0.0);
        assert!(r.passed());

        let fast = one_inclusion(1.5);
        let r = check_admissible(&fast, &src, 0.02).unwrap();
        assert!((r.contrast_norm - 1.25).abs() < 1e-15);
        assert_eq!(r.verdict, Verdict::Fail(vec![Reason::ContrastBound]));

        let dipole = SourceSpec {
            bumps: vec![
                Bump { center: Vec3::new(0.2, 0.0, 0.0), rho: 0.15, amplitude: 1.0, m: 3 },
                Bump { center: Vec3::new(-0.2, 0.0, 0.0), rho: 0.15, amplitude: -1.0, m: 3 },
            ],
        };
        let r = check_admissible(&hom, &dipole, 0.02).unwrap();
        assert_eq!(r.verdict, Verdict::Fail(vec![Reason::Degenerate]));
    }

    #[test]
    fn overlapping_inclusions_are_rejected_with_pair() {
        let mut f = SpeedField::homogeneous(1.0, 1.0);
        f.inclusions.push(BallInclusion::ball(Vec3::new(0.1, 0.0, 0.0), 0.15, 0.9));
        f.inclusions.push(BallInclusion::ball(Vec3::new(-0.1, 0.0, 0.0), 0.15, 1.1));
        let src = SourceSpec::single(Vec3::zeros(), 0.3, 1.0, 4);
        match check_admissible(&f, &src, 0.05) {
            Err(Error::GeometryViolation(msg)) => assert!(msg.contains("inclusions 0 and 1")),
            other => panic!("expected geometry violation, got {other:?}"),
        }
    }

    #[test]
    fn coarse_grid_warns() {
        let mut f = SpeedField::homogeneous(1.0, 1.0);
        f.inclusions.push(BallInclusion::ball(Vec3::new(0.013, 0.011, 0.0), 0.04, 0.9));
        let (_, w) = f.sample(&CellGrid::new(16, 1.0));
        assert!(matches!(w[0], Warning::GridTooCoarse { .. }));
        let (lat, w) = SpeedField::homogeneous(1.3, 1.0).sample(&CellGrid::new(8, 1.0));
        assert!(w.is_empty());
        assert!(lat.data.iter().all(|v| *v == 1.3));
    }

    #[test]
    fn sampled_ball_volume_converges() {
        // Oracle: analytic ball volume; lattice counts at h and h/2.
        let mut f = SpeedField::homogeneous(1.0, 1.0);
        f.inclusions.push(BallInclusion::ball(Vec3::new(0.0123, -0.031, 0.017), 0.3, 0.9));
        let exact = ball_volume(0.3);
        let err = |n: usize| {
            let g = CellGrid::new(n, 0.5);
            let (lat, _) = f.sample(&g);
            let count = lat.data.iter().filter(|v| **v == 0.9).count() as f64;
            (count * g.cell_volume() - exact).abs() / exact
        };
        let coarse = err(24);
        let fine = err(48);
        let finer = err(96);
        assert!(coarse < 0.1 && fine < 0.05 && finer < 0.02, "{coarse} {fine} {finer}");
        assert!(finer < coarse);
    }

    #[test]
    fn midpoint_quadrature_is_at_least_second_order() {
        // Compactly supported C^{m-1} bumps make the midpoint lattice sum converge
        // faster than h²; only the second-order lower bound is structural.
        let src = SourceSpec::single(Vec3::new(0.05, -0.02, 0.01), 0.4, 1.0, 3);
        let hom = SpeedField::homogeneous(1.0, 1.0);
        let exact = src.bumps[0].integral();
        let e1 = (source_integral(&hom, &src, 0.08) - exact).abs();
        let e2 = (source_integral(&hom, &src, 0.04) - exact).abs();
        let ratio = e1 / e2;
        assert!(e1 / exact < 1e-2 && ratio > 3.0, "errors {e1:e} {e2:e}, ratio {ratio}");
    }

    #[test]
    fn scaling_preserves_speeds() {
        let f = one_inclusion(0.9);
        let g = f.scaled(2.5);
        for x in [Vec3::new(0.1, 0.0, 0.0), Vec3::new(0.26, 0.0, 0.0), Vec3::new(0.5, 0.3, 0.0)] {
            assert_eq!(f.eval_speed(&x), g.eval_speed(&(x * 2.5)));
        }
    }

    #[test]
    fn point_masses_carry_signed_volumes() {
        let f = one_inclusion(0.5);
        let m = f.point_masses();
        assert_eq!(m.len(), 2);
        assert!((m[0].1 - 3.0 * ball_volume(0.2)).abs() < 1e-15);
        assert!((m[1].1 + 3.0 * ball_volume(0.05)).abs() < 1e-15);
    }
}
