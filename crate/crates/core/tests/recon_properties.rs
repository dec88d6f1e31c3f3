mod common;

use common::*;
use paspeed::elliptic::{library, CauchyData, Harmonic};
use paspeed::error::Error;
use paspeed::forward::BoundaryTrace;
use paspeed::geom::{SurfaceRule, Vec3};
use paspeed::medium::{BallInclusion, Bump, SourceSpec, SpeedField};
use paspeed::recon::{
    contrast_moments, mass_for_speed, recover_b, reconstruct, roundtrip, stability_probe, time_reversal, BEstimate,
    PipelineOptions, ReconstructionReport, ReversalOptions, Scenario, SingleInclusionPrior,
};
use paspeed::spectra::{series_from_trace, MomentOptions, SeriesCoefficients};
use std::f64::consts::PI;
use std::sync::OnceLock;

fn series(trace: &BoundaryTrace) -> SeriesCoefficients {
    series_from_trace(trace, 4, &MomentOptions { taper: 0.15, ..Default::default() }).0
}

fn u4(trace: &BoundaryTrace) -> (CauchyData, BEstimate) {
    let s = series(trace);
    let b = recover_b(&s, 1.0).unwrap();
    (CauchyData::from_series(&s, 4, SurfaceRule::EqualWeight).unwrap(), b)
}

fn with_reference_reversal() -> PipelineOptions {
    PipelineOptions { reverse_with_reference: true, ..Default::default() }
}

fn two_inclusion_report() -> &'static ReconstructionReport {
    static CELL: OnceLock<ReconstructionReport> = OnceLock::new();
    CELL.get_or_init(|| {
        let s = scenario(two_inclusion());
        reconstruct(two_inclusion_trace(), &s.priors(RADIUS), &with_reference_reversal(), Some(&s.reference())).unwrap()
    })
}

#[test]
fn b_matches_the_source_integral_in_a_homogeneous_medium() {
    let b = recover_b(&series(homogeneous_trace()), 1.0).unwrap();
    let expected = source().bumps[0].integral() / (4.0 * PI);
    assert!(((b.value - expected) / expected).abs() < 1e-2, "B {} vs {expected}", b.value);
}

#[test]
fn doubling_the_source_doubles_b() {
    let mut s = scenario(homogeneous());
    let b1 = recover_b(&series(homogeneous_trace()), 1.0).unwrap().value;
    s.source = s.source.scaled_amplitude(2.0);
    let b2 = recover_b(&series(&run(&s)), 1.0).unwrap().value;
    assert!((b2 / b1 - 2.0).abs() < 1e-10);
}

#[test]
fn cancelling_source_is_degenerate() {
    let mut s = scenario(homogeneous());
    let bump = |x: f64, a: f64| Bump { center: Vec3::new(x, 0.0, 0.0), rho: 0.2, amplitude: a, m: 4 };
    s.source = SourceSpec { bumps: vec![bump(0.2, 1.0), bump(-0.2, -1.0)] };
    let b = recover_b(&series(&run(&s)), 1.0).unwrap();
    assert!(b.is_degenerate());
    let (data, _) = u4(homogeneous_trace());
    assert!(matches!(contrast_moments(&data, &b, 1.0, &Harmonic::constant(1.0)), Err(Error::DegenerateB { .. })));
}

#[test]
fn homogeneous_medium_has_no_contrast() {
    let (data, b) = u4(homogeneous_trace());
    let scale = mass_for_speed(1.1, RADIUS, 1.0).abs();
    for phi in library(4) {
        let mu = contrast_moments(&data, &b, 1.0, &phi).unwrap();
        // relative to the size of the probe on the measurement sphere
        let size = data.points().iter().map(|x| phi.eval(x).norm()).fold(0.0, f64::max);
        assert!(mu.norm() < 2e-2 * scale * size, "{phi:?}: {mu}");
    }
}

#[test]
fn one_inclusion_total_mass() {
    let field = fast_single(Vec3::new(0.1, 0.05, -0.02), 1.2);
    let s = scenario(field.clone());
    let (data, b) = u4(&run(&s));
    let mu = contrast_moments(&data, &b, 1.0, &Harmonic::constant(1.0)).unwrap().re;
    // against the slowness contrast of the sampled (staircase) ball
    let h = s.grid.h();
    let cells = (field.inclusions[0].radius / h).ceil() as i64 + 1;
    let c = field.inclusions[0].center;
    let mut lattice = 0.0;
    for i in -cells..=cells {
        for j in -cells..=cells {
            for k in -cells..=cells {
                let x = s.grid.lattice.center(
                    (s.grid.lattice.fractional(c.x) as i64 + i) as usize,
                    (s.grid.lattice.fractional(c.y) as i64 + j) as usize,
                    (s.grid.lattice.fractional(c.z) as i64 + k) as usize,
                );
                lattice += (field.eval_speed(&x).powi(-2) - 1.0) * h * h * h;
            }
        }
    }
    let analytic = mass_for_speed(1.2, RADIUS, 1.0);
    eprintln!("μ(1) = {mu:e}, sampled ball {lattice:e}, analytic {analytic:e}");
    assert!(((mu - lattice) / lattice).abs() < 2e-2);
}

#[test]
fn u1_flux_matches_b() {
    let r = two_inclusion_report();
    let v = r.residual_value("u1_flux_vs_b").unwrap();
    assert!(v < 2e-2, "{v}");
}

#[test]
fn center_shift_is_estimated() {
    let x = Vec3::new(0.05, 0.05, -0.02);
    let d = Vec3::new(0.05, 0.0, 0.0);
    let (a, ba) = u4(&run(&scenario(fast_single(x, 1.2))));
    let (b, bb) = u4(&run(&scenario(fast_single(x + d, 1.2))));
    let est = stability_probe(&a, &b, &ba, &bb, 1.0, &SingleInclusionPrior { radius: RADIUS }).unwrap();
    let got = est.displacement_norm();
    assert!((got / 0.05 - 1.0).abs() < 0.1, "displacement {got}");
}

#[test]
fn contrast_discrepancy_is_linear_in_speed() {
    let x = Vec3::new(0.05, 0.05, -0.02);
    let prior = SingleInclusionPrior { radius: RADIUS };
    let (base, b_base) = u4(&run(&scenario(fast_single(x, 0.8))));
    let pts: Vec<(f64, f64)> = [0.85, 0.9, 0.95]
        .iter()
        .map(|&b1| {
            let (d, b) = u4(&run(&scenario(fast_single(x, b1))));
            let est = stability_probe(&base, &d, &b_base, &b, 1.0, &prior).unwrap();
            (b1 - 0.8, est.contrast_discrepancy)
        })
        .collect();
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let r2 = sxy * sxy / (sxx * syy);
    assert!(r2 > 0.99, "R² = {r2}, points {pts:?}");
}

#[test]
fn time_reversal_with_exact_speed() {
    let s = scenario(homogeneous());
    let rev = time_reversal(homogeneous_trace(), &s.field, DURATION, &ReversalOptions::default()).unwrap();
    let err = rev.relative_error(&s.source, s.field.omega_radius);
    assert!(err < 0.1, "{err}");
}

#[test]
fn source_error_grows_with_speed_error() {
    let s = scenario(two_inclusion());
    let perturbed = |eps: f64| SpeedField {
        inclusions: s.field.inclusions.iter().enumerate().map(|(k, inc)| BallInclusion {
            speed: inc.speed * (1.0 + if k == 0 { eps } else { -eps }),
            ..inc.clone()
        }).collect(),
        ..s.field.clone()
    };
    let errors: Vec<f64> = [0.0, 0.05, 0.1, 0.2]
        .iter()
        .map(|&eps| {
            let rev = time_reversal(two_inclusion_trace(), &perturbed(eps), DURATION, &ReversalOptions::default()).unwrap();
            rev.relative_error(&s.source, s.field.omega_radius)
        })
        .collect();
    assert!(errors.windows(2).all(|w| w[1] > w[0]), "{errors:?}");
}

#[test]
fn homogeneous_roundtrip_finds_nothing() {
    let (r, _) = roundtrip(&scenario(homogeneous()), RADIUS, &PipelineOptions::default()).unwrap();
    assert_eq!(r.localization.as_ref().unwrap().rank, 0);
    assert!(r.source_error.unwrap() < 0.1);
    assert!(r.matching.as_ref().unwrap().is_complete());
}

#[test]
fn inclusion_order_does_not_change_matched_errors() {
    let r = two_inclusion_report();
    let mut field = two_inclusion();
    field.inclusions.reverse();
    let s = Scenario { field, ..scenario(two_inclusion()) };
    let swapped = reconstruct(two_inclusion_trace(), &s.priors(RADIUS), &PipelineOptions::default(), Some(&s.reference())).unwrap();
    let key = |r: &ReconstructionReport| {
        let m = r.matching.as_ref().unwrap();
        let mut e: Vec<(f64, Option<f64>)> = m.pairs.iter().map(|p| (p.center_error, p.speed_relative_error)).collect();
        e.sort_by(|a, b| a.0.total_cmp(&b.0));
        e
    };
    assert_eq!(key(r), key(&swapped));
}

#[test]
fn rotating_the_scenario_rotates_the_centers() {
    let rot = paspeed::geom::Rotation::from_axis_angle(&nalgebra::Unit::new_normalize(Vec3::new(1.0, 2.0, 0.5)), 0.7);
    let field = two_inclusion();
    let src = source();
    let rotated = Scenario {
        field: field.rotated(&rot),
        source: SourceSpec { bumps: src.bumps.iter().map(|b| Bump { center: rot * b.center, ..b.clone() }).collect() },
        ..scenario(field.clone())
    };
    let (r, _) = roundtrip(&rotated, RADIUS, &PipelineOptions::default()).unwrap();
    let base = two_inclusion_report();
    let h = rotated.grid.h();
    let m = r.matching.as_ref().unwrap();
    assert!(m.is_complete() && m.max_center_error() < 1.5 * h, "{m:?}");
    let speeds = |r: &ReconstructionReport| {
        let mut v = r.speeds.clone().unwrap();
        v.sort_by(f64::total_cmp);
        v
    };
    for (a, b) in speeds(base).iter().zip(&speeds(&r)) {
        assert!((a / b - 1.0).abs() < 0.05, "{a} vs {b}");
    }
    // recovered centres of the rotated run, rotated back, land near the unrotated ones
    let back: Vec<Vec3> = r.localization.as_ref().unwrap().masses.locations.iter().map(|x| rot.inverse() * x).collect();
    for x in &base.localization.as_ref().unwrap().masses.locations {
        let best = back.iter().map(|y| (y - x).norm()).fold(f64::INFINITY, f64::min);
        assert!(best < 1.5 * h, "{best}");
    }
}
