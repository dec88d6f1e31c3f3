use crate::error::{Error, Result};
use crate::geom::Vec3;
use std::f64::consts::PI;
use std::fmt::Write as _;

const COINCIDENCE: f64 = 1e-14;

/// Signed point masses `Σ λ_k δ_{x_k}`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PointMassSet {
    pub locations: Vec<Vec3>,
    pub masses: Vec<f64>,
}

impl PointMassSet {
    pub fn new(locations: Vec<Vec3>, masses: Vec<f64>) -> Result<Self> {
        if locations.len() != masses.len() {
            return Err(Error::Precondition("one mass per location is required".into()));
        }
        if let Some(k) = masses.iter().position(|m| *m == 0.0 || !m.is_finite()) {
            return Err(Error::Precondition(format!("mass {k} must be finite and nonzero")));
        }
        for a in 0..locations.len() {
            for b in a + 1..locations.len() {
                if (locations[a] - locations[b]).norm() <= COINCIDENCE {
                    return Err(Error::CoincidentPoints);
                }
            }
        }
        Ok(PointMassSet { locations, masses })
    }

    pub fn empty() -> Self {
        PointMassSet { locations: Vec::new(), masses: Vec::new() }
    }

    pub fn from_pairs(pairs: &[(Vec3, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|p| p.0).collect(), pairs.iter().map(|p| p.1).collect())
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for a in 0..self.len() {
            for b in a + 1..self.len() {
                best = best.min((self.locations[a] - self.locations[b]).norm());
            }
        }
        best
    }

    pub fn rotated(&self, rot: &crate::geom::Rotation) -> PointMassSet {
        PointMassSet { locations: self.locations.iter().map(|x| rot * x).collect(), masses: self.masses.clone() }
    }

    /// One line per mass: `x y z lambda`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (x, m) in self.locations.iter().zip(&self.masses) {
            let _ = writeln!(s, "{:.17e} {:.17e} {:.17e} {:.17e}", x.x, x.y, x.z, m);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (line_no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let v: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Format { offset: line_no as u64 + 1, message: e.to_string() })?;
            if v.len() != 4 {
                return Err(Error::Format { offset: line_no as u64 + 1, message: format!("expected 4 fields, found {}", v.len()) });
            }
            pairs.push((Vec3::new(v[0], v[1], v[2]), v[3]));
        }
        Self::from_pairs(&pairs)
    }
}

/// Dirichlet Green function of `−Δ` on the ball of radius `r`.
pub fn green_ball(x: &Vec3, y: &Vec3, r: f64) -> Result<f64> {
    let d = (x - y).norm();
    if d <= COINCIDENCE {
        return Err(Error::CoincidentPoints);
    }
    let ny = y.norm();
    let image = if ny <= COINCIDENCE {
        1.0 / (4.0 * PI * r)
    } else {
        let star = y * (r * r / (ny * ny));
        r / (4.0 * PI * ny * (x - star).norm())
    };
    Ok(1.0 / (4.0 * PI * d) - image)
}

/// `∇_x G(x, y; r)`.
pub fn green_ball_gradient(x: &Vec3, y: &Vec3, r: f64) -> Result<Vec3> {
    let dv = x - y;
    let d = dv.norm();
    if d <= COINCIDENCE {
        return Err(Error::CoincidentPoints);
    }
    let direct = -dv / (4.0 * PI * d.powi(3));
    let ny = y.norm();
    if ny <= COINCIDENCE {
        return Ok(direct);
    }
    let ev = x - y * (r * r / (ny * ny));
    let e = ev.norm();
    Ok(direct + ev * (r / (4.0 * PI * ny * e.powi(3))))
}

/// `v(x) = Σ λ_k G(x, x_k; r)`.
pub fn point_source_solution(masses: &PointMassSet, x: &Vec3, r: f64) -> Result<f64> {
    let mut acc = 0.0;
    for (y, m) in masses.locations.iter().zip(&masses.masses) {
        acc += m * green_ball(x, y, r)?;
    }
    Ok(acc)
}

/// Radial derivative `∇v · x/|x|` of the point-source solution at any point off the masses.
pub fn point_source_radial_derivative(masses: &PointMassSet, x: &Vec3, r: f64) -> Result<f64> {
    let n = x / x.norm();
    let mut acc = 0.0;
    for (y, m) in masses.locations.iter().zip(&masses.masses) {
        acc += m * green_ball_gradient(x, y, r)?.dot(&n);
    }
    Ok(acc)
}

/// `∂_ν v` on the sphere `|x| = r` via the Poisson kernel: `−Σ λ_k (r² − |x_k|²)/(4πr|x − x_k|³)`.
///
/// Points are projected radially onto the sphere.
pub fn conormal_point_source(masses: &PointMassSet, points: &[Vec3], r: f64) -> Result<Vec<f64>> {
    if let Some(k) = masses.locations.iter().position(|y| y.norm() >= r) {
        return Err(Error::Precondition(format!("mass {k} lies outside the open ball of radius {r}")));
    }
    Ok(points
        .iter()
        .map(|p| {
            let x = p * (r / p.norm());
            masses
                .locations
                .iter()
                .zip(&masses.masses)
                .map(|(y, m)| -m * (r * r - y.norm_squared()) / (4.0 * PI * r * (x - y).norm().powi(3)))
                .sum()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::Harmonic;
    use crate::geom::fibonacci_directions;
    use rand::{Rng, SeedableRng};

    fn random_point<R: Rng>(rng: &mut R, radius: f64) -> Vec3 {
        loop {
            let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            if v.norm() < 1.0 {
                return v * radius;
            }
        }
    }

    #[test]
    fn green_function_closed_forms() {
        let r = 0.8;
        let g = green_ball(&Vec3::new(0.0, r / 2.0, 0.0), &Vec3::zeros(), r).unwrap();
        assert!((g - 1.0 / (4.0 * PI * r)).abs() < 1e-15);
        let y = Vec3::new(0.1, -0.2, 0.3);
        for d in fibonacci_directions(20) {
            assert!(green_ball(&(d * r), &y, r).unwrap().abs() < 1e-14);
        }
        assert!(matches!(green_ball(&y, &y, r), Err(Error::CoincidentPoints)));
    }

    #[test]
    fn green_function_is_symmetric() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let (x, y) = (random_point(&mut rng, 0.7), random_point(&mut rng, 0.7));
            let (a, b) = (green_ball(&x, &y, 0.7).unwrap(), green_ball(&y, &x, 0.7).unwrap());
            assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn gradient_matches_differences() {
        let y = Vec3::new(0.1, 0.05, -0.2);
        let x = Vec3::new(-0.2, 0.3, 0.1);
        let g = green_ball_gradient(&x, &y, 0.6).unwrap();
        for a in 0..3 {
            let mut e = Vec3::zeros();
            e[a] = 1e-6;
            let fd = (green_ball(&(x + e), &y, 0.6).unwrap() - green_ball(&(x - e), &y, 0.6).unwrap()) / 2e-6;
            assert!((fd - g[a]).abs() < 1e-7);
        }
    }

    #[test]
    fn point_source_cases() {
        let r = 0.5;
        let x = Vec3::new(0.2, 0.1, 0.0);
        assert_eq!(point_source_solution(&PointMassSet::empty(), &x, r).unwrap(), 0.0);
        let single = PointMassSet::from_pairs(&[(Vec3::zeros(), 2.0)]).unwrap();
        let v = point_source_solution(&single, &x, r).unwrap();
        assert!((v - 2.0 * (1.0 / (4.0 * PI * x.norm()) - 1.0 / (4.0 * PI * r))).abs() < 1e-14);
        // ±λ at ±a: the origin is equidistant from both poles and both images
        let a = Vec3::new(0.0, 0.0, 0.2);
        let pair = PointMassSet::from_pairs(&[(a, 1.5), (-a, -1.5)]).unwrap();
        assert!(point_source_solution(&pair, &Vec3::zeros(), r).unwrap().abs() < 1e-14);
        let sum = 1.5 * green_ball(&Vec3::zeros(), &a, r).unwrap() - 1.5 * green_ball(&Vec3::zeros(), &-a, r).unwrap();
        assert!(sum.abs() < 1e-14);
    }

    #[test]
    fn conormal_flux_and_identity() {
        let r = 0.5;
        let single = PointMassSet::from_pairs(&[(Vec3::zeros(), 0.7)]).unwrap();
        let dirs = fibonacci_directions(512);
        for v in conormal_point_source(&single, &dirs, r).unwrap() {
            assert!((v + 0.7 / (4.0 * PI * r * r)).abs() < 1e-14);
        }
        let masses = PointMassSet::from_pairs(&[(Vec3::new(0.15, -0.1, 0.05), 0.8), (Vec3::new(-0.1, 0.2, -0.1), -0.5)]).unwrap();
        let dn = conormal_point_source(&masses, &dirs, r).unwrap();
        let w = 4.0 * PI * r * r / dirs.len() as f64;
        let flux: f64 = dn.iter().map(|v| v * w).sum();
        assert!((flux + masses.total_mass()).abs() < 5e-3 * masses.masses.iter().map(|m| m.abs()).sum::<f64>());
        let phi = Harmonic::power(1);
        let lhs: num_complex::Complex64 = dirs.iter().zip(&dn).map(|(d, v)| -phi.eval(&(d * r)) * *v * w).sum();
        let rhs: num_complex::Complex64 = masses.locations.iter().zip(&masses.masses).map(|(x, m)| phi.eval(x) * *m).sum();
        assert!((lhs - rhs).norm() < 5e-3 * rhs.norm(), "{lhs} vs {rhs}");
        // analytic radial derivative agrees with the Poisson-kernel form on the sphere
        for (d, v) in dirs.iter().zip(&dn).take(20) {
            let direct = point_source_radial_derivative(&masses, &(d * r), r).unwrap();
            assert!((direct - v).abs() < 1e-10 * v.abs().max(1.0));
        }
    }

    #[test]
    fn mass_set_text_round_trip() {
        let m = PointMassSet::from_pairs(&[(Vec3::new(0.1, 0.2, 0.3), -1e-3), (Vec3::new(-0.3, 0.0, 0.1), 2.5)]).unwrap();
        assert_eq!(PointMassSet::from_text(&m.to_text()).unwrap(), m);
        assert!(matches!(PointMassSet::from_text("0 0 0"), Err(Error::Format { offset: 1, .. })));
        assert!(PointMassSet::from_pairs(&[(Vec3::zeros(), 0.0)]).is_err());
        assert!(matches!(PointMassSet::from_pairs(&[(Vec3::zeros(), 1.0), (Vec3::zeros(), 2.0)]), Err(Error::CoincidentPoints)));
    }
}
