use crate::elliptic::PointMassSet;
use crate::error::{Error, Result};
use crate::medium::ball_volume;

/// `b = (b0⁻² + λ/|B_r|)^{-1/2}`, or `None` when the bracket is not positive.
pub fn speed_for_mass(mass: f64, r: f64, b0: f64) -> Option<f64> {
    let inv_speed_sq = b0.powi(-2) + mass / ball_volume(r);
    (inv_speed_sq > 0.0).then(|| inv_speed_sq.powf(-0.5))
}

/// `b_k = (b0⁻² + λ_k/|B_r|)^{-1/2}` under a common radius prior `r`.
pub fn recover_speeds(masses: &PointMassSet, r: f64, b0: f64) -> Result<Vec<f64>> {
    masses
        .masses
        .iter()
        .enumerate()
        .map(|(index, &mass)| {
            speed_for_mass(mass, r, b0)
                .ok_or(Error::InconsistentMass { index, mass, inv_speed_sq: b0.powi(-2) + mass / ball_volume(r) })
        })
        .collect()
}

/// `λ = (b⁻² − b0⁻²)|B_r|`.
pub fn mass_for_speed(b: f64, r: f64, b0: f64) -> f64 {
    (b.powi(-2) - b0.powi(-2)) * ball_volume(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec3;

    fn set(masses: &[f64]) -> PointMassSet {
        let pairs: Vec<_> = masses.iter().enumerate().map(|(i, m)| (Vec3::new(i as f64 * 0.2, 0.0, 0.0), *m)).collect();
        PointMassSet { locations: pairs.iter().map(|p| p.0).collect(), masses: pairs.iter().map(|p| p.1).collect() }
    }

    #[test]
    fn algebraic_round_trip() {
        let lambda = (1.0 / 0.64 - 1.0) * 4.0 / 3.0 * std::f64::consts::PI * 0.15f64.powi(3);
        assert!((mass_for_speed(0.8, 0.15, 1.0) - lambda).abs() < 1e-15);
        let b = recover_speeds(&set(&[lambda]), 0.15, 1.0).unwrap();
        assert!((b[0] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn sign_and_zero_contrast() {
        let b = recover_speeds(&set(&[0.0, -1e-3, 1e-3]), 0.12, 1.3).unwrap();
        assert!((b[0] - 1.3).abs() < 1e-15);
        assert!(b[1] > 1.3 && b[2] < 1.3);
        let err = recover_speeds(&set(&[-1.0]), 0.12, 1.0).unwrap_err();
        assert!(matches!(err, Error::InconsistentMass { index: 0, .. }));
    }
}
