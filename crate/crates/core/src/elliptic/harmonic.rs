use crate::error::{Error, Result};
use crate::geom::{Rotation, Vec3};
use num_complex::Complex64;

/// Harmonic test functions used to probe `−Δu` through Green's identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HarmonicKind {
    Constant(f64),
    /// `x_axis − offset_axis`.
    Coordinate { axis: usize, offset: Vec3 },
    /// `(x₁ + i x₂)^n`.
    ComplexPower(u32),
    /// `x₃ (x₁ + i x₂)^n`.
    ComplexPowerZ3(u32),
    /// `exp((x − a)·ω₁ + i (x − a)·ω₂)` with orthonormal ω₁, ω₂.
    ExpProbe { base: Vec3, omega1: Vec3, omega2: Vec3 },
}

/// A harmonic function, optionally evaluated in a rotated frame: `φ(x) = ψ(Q x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Harmonic {
    pub kind: HarmonicKind,
    pub frame: Option<Rotation>,
}

impl Harmonic {
    pub fn new(kind: HarmonicKind) -> Self {
        Harmonic { kind, frame: None }
    }

    pub fn constant(v: f64) -> Self {
        Self::new(HarmonicKind::Constant(v))
    }

    pub fn coordinate(axis: usize, offset: Vec3) -> Self {
        assert!(axis < 3);
        Self::new(HarmonicKind::Coordinate { axis, offset })
    }

    pub fn power(n: u32) -> Self {
        Self::new(HarmonicKind::ComplexPower(n))
    }

    pub fn power_z3(n: u32) -> Self {
        Self::new(HarmonicKind::ComplexPowerZ3(n))
    }

    /// Checked constructor: ω₁, ω₂ must be orthonormal.
    pub fn exp_probe(base: Vec3, omega1: Vec3, omega2: Vec3) -> Result<Self> {
        let tol = 1e-12;
        if (omega1.norm() - 1.0).abs() > tol || (omega2.norm() - 1.0).abs() > tol || omega1.dot(&omega2).abs() > tol {
            return Err(Error::Precondition("ExpProbe directions must be orthonormal".into()));
        }
        Ok(Self::new(HarmonicKind::ExpProbe { base, omega1, omega2 }))
    }

    pub fn in_frame(mut self, frame: Rotation) -> Self {
        self.frame = Some(frame);
        self
    }

    fn local(&self, x: &Vec3) -> Vec3 {
        match &self.frame {
            Some(q) => q * x,
            None => *x,
        }
    }

    pub fn eval(&self, x: &Vec3) -> Complex64 {
        let y = self.local(x);
        match self.kind {
            HarmonicKind::Constant(v) => Complex64::new(v, 0.0),
            HarmonicKind::Coordinate { axis, offset } => Complex64::new(y[axis] - offset[axis], 0.0),
            HarmonicKind::ComplexPower(n) => Complex64::new(y.x, y.y).powu(n),
            HarmonicKind::ComplexPowerZ3(n) => Complex64::new(y.x, y.y).powu(n) * y.z,
            HarmonicKind::ExpProbe { base, omega1, omega2 } => {
                let d = y - base;
                Complex64::new(d.dot(&omega1), d.dot(&omega2)).exp()
            }
        }
    }

    /// Analytic gradient in the original coordinates.
    pub fn gradient(&self, x: &Vec3) -> [Complex64; 3] {
        let y = self.local(x);
        let zero = Complex64::new(0.0, 0.0);
        let g: [Complex64; 3] = match self.kind {
            HarmonicKind::Constant(_) => [zero; 3],
            HarmonicKind::Coordinate { axis, .. } => {
                let mut g = [zero; 3];
                g[axis] = Complex64::new(1.0, 0.0);
                g
            }
            HarmonicKind::ComplexPower(n) => {
                if n == 0 {
                    [zero; 3]
                } else {
                    let d = Complex64::new(y.x, y.y).powu(n - 1) * n as f64;
                    [d, d * Complex64::i(), zero]
                }
            }
            HarmonicKind::ComplexPowerZ3(n) => {
                let z = Complex64::new(y.x, y.y);
                let zn = z.powu(n);
                let d = if n == 0 { zero } else { z.powu(n - 1) * n as f64 * y.z };
                [d, d * Complex64::i(), zn]
            }
            HarmonicKind::ExpProbe { base, omega1, omega2 } => {
                let d = y - base;
                let v = Complex64::new(d.dot(&omega1), d.dot(&omega2)).exp();
                [
                    v * Complex64::new(omega1.x, omega2.x),
                    v * Complex64::new(omega1.y, omega2.y),
                    v * Complex64::new(omega1.z, omega2.z),
                ]
            }
        };
        match &self.frame {
            // ∇φ(x) = Qᵀ ∇ψ(Qx)
            Some(q) => {
                let m = q.matrix();
                let mut out = [zero; 3];
                for (a, o) in out.iter_mut().enumerate() {
                    *o = g[0] * m[(0, a)] + g[1] * m[(1, a)] + g[2] * m[(2, a)];
                }
                out
            }
            None => g,
        }
    }

    /// Radial derivative `∇φ · x/|x|`.
    pub fn normal_derivative(&self, x: &Vec3) -> Complex64 {
        let g = self.gradient(x);
        let r = x.norm();
        (g[0] * x.x + g[1] * x.y + g[2] * x.z) / r
    }
}

/// Library of test functions exercised by the identity and harmonicity checks.
pub fn library(ladder: u32) -> Vec<Harmonic> {
    let mut out = vec![Harmonic::constant(1.0)];
    for axis in 0..3 {
        out.push(Harmonic::coordinate(axis, Vec3::new(0.05, -0.02, 0.03)));
    }
    for n in 1..=ladder {
        out.push(Harmonic::power(n));
        out.push(Harmonic::power_z3(n - 1));
    }
    let w1 = Vec3::new(1.0, 2.0, -0.5).normalize();
    let w2 = crate::geom::orthogonal_unit(&w1);
    out.push(Harmonic::exp_probe(Vec3::new(0.1, 0.0, -0.05), w1, w2).unwrap());
    out
}
