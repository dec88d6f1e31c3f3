use super::moments::{contrast_moments, BEstimate};
use super::speeds::speed_for_mass;
use crate::elliptic::{CauchyData, Harmonic};
use crate::error::{Error, Result};
use crate::geom::{orthogonal_unit, Vec3};

/// Prior shared by both datasets: one inclusion of known radius.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SingleInclusionPrior {
    pub radius: f64,
}

/// Outcome of comparing two single-inclusion datasets.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StabilityEstimate {
    /// Centre of inclusion A from first moments.
    pub center_a: Vec3,
    /// Estimated `x_B − x_A`.
    pub displacement: Vec3,
    /// `|μ_A(v_ℓ) − μ_B(v_ℓ)|` for the three coordinate probes centred at `x_A`.
    pub coordinate_discrepancy: [f64; 3],
    /// `|μ_A(v) − μ_B(v)|` for the exponential probe.
    pub contrast_discrepancy: f64,
    pub speed_a: f64,
    pub speed_b: f64,
}

impl StabilityEstimate {
    pub fn displacement_norm(&self) -> f64 {
        self.displacement.norm()
    }

    pub fn speed_discrepancy(&self) -> f64 {
        (self.speed_a - self.speed_b).abs()
    }
}

/// Centre, mass and speed of a single inclusion from the moments `μ(1)` and `μ(x_ℓ)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SingleInclusionFit {
    pub center: Vec3,
    pub mass: f64,
    pub speed: f64,
}

/// Single-inclusion estimate: `λ = μ(1)`, `x = μ(x)/λ`, speed under the radius prior.
/// Uses only moments of degree ≤ 1, so it is far less noise sensitive than the pencil.
pub fn single_inclusion_fit(u4: &CauchyData, b: &BEstimate, b0: f64, prior: &SingleInclusionPrior) -> Result<SingleInclusionFit> {
    let mass = contrast_moments(u4, b, b0, &Harmonic::constant(1.0))?.re;
    if mass == 0.0 {
        return Err(Error::Precondition("vanishing contrast mass".into()));
    }
    let mut center = Vec3::zeros();
    for axis in 0..3 {
        center[axis] = contrast_moments(u4, b, b0, &Harmonic::coordinate(axis, Vec3::zeros()))?.re / mass;
    }
    let speed = speed_for_mass(mass, prior.radius, b0).ok_or(Error::InconsistentMass {
        index: 0,
        mass,
        inv_speed_sq: b0.powi(-2) + mass / crate::medium::ball_volume(prior.radius),
    })?;
    Ok(SingleInclusionFit { center, mass, speed })
}

/// Compares two single-inclusion datasets through coordinate and exponential probes.
///
/// With `v_ℓ = x_ℓ − (x_A)_ℓ` the difference functional reduces to
/// `−λ_B (x_B − x_A)_ℓ`, giving the displacement. The exponential probe is
/// centred at `x_A` with `ω₁` along the displacement, so that
/// `μ_B(v) = λ_B e^{|x_B − x_A|}` separates the contrast from the shift.
pub fn stability_probe(
    u4_a: &CauchyData,
    u4_b: &CauchyData,
    b_a: &BEstimate,
    b_b: &BEstimate,
    b0: f64,
    prior: &SingleInclusionPrior,
) -> Result<StabilityEstimate> {
    let mu_a = |phi: &Harmonic| contrast_moments(u4_a, b_a, b0, phi);
    let mu_b = |phi: &Harmonic| contrast_moments(u4_b, b_b, b0, phi);
    let one = Harmonic::constant(1.0);
    let (lambda_a, lambda_b) = (mu_a(&one)?.re, mu_b(&one)?.re);
    if lambda_a == 0.0 || lambda_b == 0.0 {
        return Err(Error::Precondition("stability probe needs an inclusion in both datasets".into()));
    }
    let mut center_a = Vec3::zeros();
    for axis in 0..3 {
        center_a[axis] = mu_a(&Harmonic::coordinate(axis, Vec3::zeros()))?.re / lambda_a;
    }
    let mut displacement = Vec3::zeros();
    let mut coordinate_discrepancy = [0.0; 3];
    for axis in 0..3 {
        let v = Harmonic::coordinate(axis, center_a);
        let d = (mu_a(&v)? - mu_b(&v)?).re;
        coordinate_discrepancy[axis] = d.abs();
        displacement[axis] = -d / lambda_b;
    }
    let dist = displacement.norm();
    let omega1 = if dist > 1e-12 { displacement / dist } else { Vec3::x() };
    let omega2 = orthogonal_unit(&omega1);
    let probe = Harmonic::exp_probe(center_a, omega1, omega2)?;
    let (pa, pb) = (mu_a(&probe)?, mu_b(&probe)?);
    let mass_b = pb.re * (-dist).exp();
    Ok(StabilityEstimate {
        center_a,
        displacement,
        coordinate_discrepancy,
        contrast_discrepancy: (pa - pb).norm(),
        speed_a: speed_for_mass(pa.re, prior.radius, b0).unwrap_or(f64::NAN),
        speed_b: speed_for_mass(mass_b, prior.radius, b0).unwrap_or(f64::NAN),
    })
}
