use super::config::Config;
use crate::elliptic::{
    green_identity_functional, library, point_source_radial_derivative, point_source_solution, CauchyData, Harmonic,
    PointMassSet,
};
use crate::error::{Error, Result};
use crate::forward::{kirchhoff_series, simulate, Grid, SensorShell};
use crate::geom::{fibonacci_directions, SurfaceRule, Vec3};
use crate::medium::{check_admissible, source_integral, Verdict};
use crate::recon::{prony_localize, recover_b, BEstimate, PronyOptions, CONSTANCY_TOL};
use crate::spectra::{
    aligned_lattice, cross_validate, default_delta_fit, elliptic_frequency_oracle, elliptic_samples, fit_frequencies,
    fit_series, homogeneous_frequency_value, series_from_trace, FrequencyOptions, MomentOptions,
};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Grid size of the reduced oracle run.
pub const ORACLE_N: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    /// Set when the configuration fails admissibility; no checks run then.
    pub rejected: Option<String>,
    pub checks: Vec<OracleCheck>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.rejected.is_none() && self.checks.iter().all(|c| c.pass)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        if let Some(r) = &self.rejected {
            s.push_str(&format!("REJECTED  {r}\n"));
        }
        for c in &self.checks {
            s.push_str(&format!(
                "{}  {:<24} measured {:.4e}  tolerance {:.4e}{}\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.measured,
                c.tolerance,
                c.note.as_ref().map(|n| format!("  ({n})")).unwrap_or_default()
            ));
        }
        s
    }
}

/// Fault injection for testing the suite itself.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OracleHooks {
    /// Negate `u^(2)` on every other sensor before `B` is recovered.
    pub flip_u2_sign: bool,
}

fn check(name: &str, measured: f64, tolerance: f64) -> OracleCheck {
    OracleCheck { name: name.into(), measured, tolerance, pass: measured <= tolerance, note: None }
}

fn failed(name: &str, tolerance: f64, e: &Error) -> OracleCheck {
    OracleCheck { name: name.into(), measured: f64::NAN, tolerance, pass: false, note: Some(e.to_string()) }
}

/// Runs the oracle and cross-route invariants for the configured medium and
/// source at `n = 64` (sponge and interior width from the configuration).
pub fn oracle_check(config: &Config, hooks: &OracleHooks) -> Result<OracleReport> {
    let field = config.speed_field();
    let src = config.source();
    let g = &config.grid;
    let c_max = g.c_max.unwrap_or(field.max_speed());
    let grid = Grid::new(ORACLE_N, g.half_width, g.sponge_width, c_max, g.safety, g.duration)
        .map_err(|e| Error::Config(e.to_string()))?;
    let admissible = match check_admissible(&field, &src, grid.h()) {
        Ok(a) => a,
        Err(e) => return Ok(OracleReport { rejected: Some(e.to_string()), checks: Vec::new() }),
    };
    if let Verdict::Fail(reasons) = &admissible.verdict {
        return Ok(OracleReport {
            rejected: Some(format!("admissibility failed: {reasons:?} (contrast norm {:.3})", admissible.contrast_norm)),
            checks: Vec::new(),
        });
    }
    let shell = SensorShell::fibonacci(config.sensors.count, config.sensors.radius, config.sensors.delta_r_cells * grid.h());
    let (trace, _) = simulate(&field, &src, &grid, &shell)?;
    let homogeneous = field.inclusions.is_empty();
    let b0 = field.b0;
    let mut checks = Vec::new();

    if homogeneous {
        let oracle = kirchhoff_series(&src, &trace.inner, trace.dt, trace.times(), b0, 64);
        let num: f64 = trace.u_inner.iter().zip(&oracle).map(|(a, b)| (a - b).powi(2)).sum();
        let den: f64 = oracle.iter().map(|b| b * b).sum();
        // the n = 128 budget of 2% times the largest admissible convergence ratio 5
        checks.push(check("kirchhoff_l2", (num / den).sqrt(), 0.10));
    }

    let moments = MomentOptions { taper: config.reconstruction.taper, ..Default::default() };
    let (mut series, _) = series_from_trace(&trace, 4, &moments);
    if homogeneous {
        let peak = trace.u_inner.iter().chain(&trace.u_outer).fold(0.0f64, |m, v| m.max(v.abs()));
        checks.push(check("u0_vanishes", series.max_abs(0) / peak, 1e-2));
    }
    if hooks.flip_u2_sign {
        for (s, v) in series.values[2].iter_mut().enumerate() {
            if s % 2 == 1 {
                *v = -*v;
            }
        }
    }
    let (mean, spread) = series.constancy(2);
    let b = match recover_b(&series, b0) {
        Ok(b) => {
            checks.push(check("u2_constancy", b.relative_std, CONSTANCY_TOL));
            b
        }
        Err(e) => {
            checks.push(OracleCheck { note: Some(e.to_string()), ..check("u2_constancy", spread, CONSTANCY_TOL) });
            BEstimate { value: -mean, std: spread * mean.abs(), relative_std: spread, threshold: 0.0 }
        }
    };
    let quad = source_integral(&field, &src, grid.h()) / (4.0 * PI * b0);
    checks.push(check("b_vs_quadrature", ((b.value - quad) / quad).abs(), if homogeneous { 1e-2 } else { 3e-2 }));
    match CauchyData::from_series(&series, 1, config.pipeline_options().surface_rule) {
        Ok(u1) => {
            let flux = green_identity_functional(&u1, &Harmonic::constant(1.0)).re;
            checks.push(check("u1_flux", (flux / (4.0 * PI * b0 * b.value) - 1.0).abs(), 2e-2));
        }
        Err(e) => checks.push(failed("u1_flux", 2e-2, &e)),
    }

    let lat = aligned_lattice(&grid.lattice, 0.8);
    if homogeneous {
        let p = default_delta_fit(b0, field.r0);
        let pts: Vec<Vec3> = trace.inner.iter().step_by((trace.sensors() / 8).max(1)).copied().collect();
        match elliptic_frequency_oracle(&field, &src, p, &lat, &pts, &FrequencyOptions::default()) {
            Ok(vals) => {
                let worst = pts
                    .iter()
                    .zip(&vals)
                    .map(|(x, v)| {
                        let exact = homogeneous_frequency_value(&src, b0, p, x, 0.5 * grid.h());
                        ((v - exact) / exact).abs()
                    })
                    .fold(0.0, f64::max);
                checks.push(check("elliptic_frequency", worst, 1e-2));
            }
            Err(e) => checks.push(failed("elliptic_frequency", 1e-2, &e)),
        }
    }
    let route = (|| -> Result<f64> {
        let ps = fit_frequencies(default_delta_fit(b0, field.r0), 12);
        let samples = elliptic_samples(&field, &src, &ps, &lat, &trace.inner, &trace.outer, &FrequencyOptions::default())?;
        let fit = fit_series(&samples, 8)?;
        let cv = cross_validate(&series, &fit.truncated(4), 0.05)?;
        Ok(cv.relative_rms[1..].iter().copied().fold(0.0, f64::max))
    })();
    match route {
        Ok(v) => checks.push(check("route_equivalence", v, 0.05)),
        Err(e) => checks.push(failed("route_equivalence", 0.05, &e)),
    }

    let masses = PointMassSet::from_pairs(&[
        (Vec3::new(0.15, -0.1, 0.05), 0.8),
        (Vec3::new(-0.12, 0.18, -0.08), -0.5),
        (Vec3::new(0.02, 0.05, 0.2), 0.3),
    ])?;
    let radius = config.sensors.radius;
    let green_radius = 1.2 * radius;
    let data = CauchyData::from_fn(
        radius,
        fibonacci_directions(config.sensors.count),
        |x| point_source_solution(&masses, x, green_radius).unwrap_or(f64::NAN),
        |x| point_source_radial_derivative(&masses, x, green_radius).unwrap_or(f64::NAN),
        SurfaceRule::EqualWeight,
    )?;
    let mut worst = 0.0f64;
    for phi in library(4) {
        let terms = masses.locations.iter().zip(&masses.masses).map(|(x, l)| phi.eval(x) * *l);
        let exact: num_complex::Complex64 = terms.clone().sum();
        // relative to Σ|λ_k φ(x_k)| so that cancelling signs do not inflate the error
        let scale: f64 = terms.map(|t| t.norm()).sum();
        worst = worst.max((green_identity_functional(&data, &phi) - exact).norm() / scale);
    }
    checks.push(check("green_identity", worst, 5e-3));

    let truth = PointMassSet::from_pairs(&[
        (Vec3::new(0.2, 0.1, 0.05), 2.0),
        (Vec3::new(-0.15, 0.12, -0.1), -1.0),
        (Vec3::new(0.05, -0.25, 0.2), 0.5),
        (Vec3::new(-0.2, -0.1, 0.15), -0.8),
    ])?;
    let sol = prony_localize(&truth, &PronyOptions::default())?;
    let mut err = if sol.rank == truth.len() { 0.0 } else { f64::INFINITY };
    for (x, l) in truth.locations.iter().zip(&truth.masses) {
        let best = (0..sol.masses.len())
            .map(|k| ((sol.masses.locations[k] - x).norm()).max((sol.masses.masses[k] - l).abs()))
            .fold(f64::INFINITY, f64::min);
        err = err.max(best);
    }
    checks.push(check("prony_exactness", err, 1e-10));
    Ok(OracleReport { rejected: None, checks })
}
