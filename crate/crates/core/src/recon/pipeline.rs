use super::moments::{background_mass, contrast_moments, recover_b, BEstimate, ContrastData};
use super::prony::{prony_localize, PronyOptions};
use super::reversal::{time_reversal, ReversalOptions};
use super::speeds::{recover_speeds, speed_for_mass};
use crate::elliptic::{green_identity_functional, CauchyData, Harmonic, PointMassSet};
use crate::error::{Error, Result, Warning};
use crate::forward::{simulate, BoundaryTrace, Grid, SensorShell, SimulationReport};
use crate::geom::{arr3, SurfaceRule};
use crate::lattice::Field3;
use crate::medium::{ball_intersection_volume, ball_volume, BallInclusion, SourceSpec, SpeedField};
use crate::spectra::{
    aligned_lattice, cross_validate, default_delta_fit, elliptic_samples, fit_frequencies, fit_series, series_from_trace,
    FrequencyOptions, MomentOptions, SeriesCoefficients,
};
use itertools::Itertools;
use std::f64::consts::PI;
use std::fmt::Write as _;

/// Information available to the inversion besides the trace.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Priors {
    pub b0: f64,
    /// Common inclusion radius.
    pub radius: f64,
    pub r0: f64,
    pub omega_radius: f64,
}

/// Settings of the elliptic-route cross-check.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CrossRouteOptions {
    /// Polynomial degree of the Laplace-domain fit.
    pub k_fit: usize,
    pub frequencies: usize,
    /// Upper fit frequency; `None` uses `0.5·b0/R0`.
    pub delta: Option<f64>,
    /// Half-width of the elliptic lattice.
    pub half_width: f64,
    pub tolerance: f64,
}

impl Default for CrossRouteOptions {
    fn default() -> Self {
        CrossRouteOptions { k_fit: 8, frequencies: 12, delta: None, half_width: 0.8, tolerance: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PipelineOptions {
    pub moments: MomentOptions,
    pub prony: PronyOptions,
    /// Relative moment noise floor `η` used by the rank decision.
    pub noise_rel: f64,
    pub surface_rule: SurfaceRule,
    pub reversal: ReversalOptions,
    /// Time-reversal horizon; `None` uses the whole trace.
    pub horizon: Option<f64>,
    /// Elliptic-route cross-check (needs the reference medium and source).
    pub cross_route: Option<CrossRouteOptions>,
    /// Also reverse with the reference speed field.
    pub reverse_with_reference: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            moments: MomentOptions { taper: 0.15, ..Default::default() },
            prony: PronyOptions::default(),
            noise_rel: 1e-4,
            surface_rule: SurfaceRule::EqualWeight,
            reversal: ReversalOptions::default(),
            horizon: None,
            cross_route: None,
            reverse_with_reference: false,
        }
    }
}

/// Ground truth for error reporting.
#[derive(Debug, Clone)]
pub struct Reference {
    pub field: SpeedField,
    pub source: SourceSpec,
}

/// A full forward configuration.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub field: SpeedField,
    pub source: SourceSpec,
    pub grid: Grid,
    pub shell: SensorShell,
}

impl Scenario {
    pub fn priors(&self, radius: f64) -> Priors {
        Priors { b0: self.field.b0, radius, r0: self.field.r0, omega_radius: self.field.omega_radius }
    }

    pub fn reference(&self) -> Reference {
        Reference { field: self.field.clone(), source: self.source.clone() }
    }
}

/// A measured quantity with its gate.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Residual {
    pub stage: String,
    pub name: String,
    pub value: f64,
    pub tolerance: Option<f64>,
}

impl Residual {
    pub fn pass(&self) -> Option<bool> {
        self.tolerance.map(|t| self.value <= t)
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Localization {
    pub masses: PointMassSet,
    pub rank: usize,
    /// Rank gap; `None` when nothing was discarded.
    pub gap: Option<f64>,
    pub singular_values: Vec<f64>,
    /// Rotation matrix (row major) of the accepted frame, if not the identity.
    pub frame: Option<[[f64; 3]; 3]>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MatchedPair {
    pub recovered: usize,
    pub reference: usize,
    pub center_error: f64,
    pub mass_relative_error: f64,
    /// Relative speed error under the radius prior, when both speeds exist.
    pub speed_relative_error: Option<f64>,
}

/// Minimal-cost, sign-compatible assignment between recovered and reference masses.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Matching {
    pub pairs: Vec<MatchedPair>,
    pub unmatched_recovered: Vec<usize>,
    pub unmatched_reference: Vec<usize>,
}

impl Matching {
    pub fn is_complete(&self) -> bool {
        self.unmatched_recovered.is_empty() && self.unmatched_reference.is_empty()
    }

    pub fn max_center_error(&self) -> f64 {
        self.pairs.iter().map(|p| p.center_error).fold(0.0, f64::max)
    }

    pub fn max_speed_error(&self) -> Option<f64> {
        self.pairs.iter().map(|p| p.speed_relative_error).collect::<Option<Vec<_>>>().map(|v| v.into_iter().fold(0.0, f64::max))
    }
}

/// Stage outputs of one reconstruction; a stage is present iff it ran.
#[derive(Debug, Clone, Default, serde::Serialize, serde::Deserialize)]
pub struct ReconstructionReport {
    pub priors: Option<Priors>,
    pub b: Option<BEstimate>,
    /// `F(1)` on `u^(1)` data, an estimate of `∫c⁻²f`.
    pub source_moment: Option<f64>,
    /// `μ(1)`, the total contrast mass.
    pub total_mass: Option<f64>,
    pub route_rms: Option<Vec<f64>>,
    pub localization: Option<Localization>,
    pub speeds: Option<Vec<f64>>,
    pub source_error: Option<f64>,
    pub source_error_reference_speed: Option<f64>,
    pub matching: Option<Matching>,
    pub residuals: Vec<Residual>,
    pub warnings: Vec<Warning>,
    /// Recovered initial pressure; persisted separately.
    #[serde(skip)]
    pub f_hat: Option<Field3>,
    /// Kept out of the serialised report so that reports are reproducible.
    #[serde(skip)]
    pub timings: Vec<StageTiming>,
}

impl ReconstructionReport {
    fn residual(&mut self, stage: &str, name: &str, value: f64, tolerance: Option<f64>) {
        self.residuals.push(Residual { stage: stage.into(), name: name.into(), value, tolerance });
    }

    pub fn residual_value(&self, name: &str) -> Option<f64> {
        self.residuals.iter().find(|r| r.name == name).map(|r| r.value)
    }

    /// Names of the stages that produced output.
    pub fn stages(&self) -> Vec<&'static str> {
        let mut s = Vec::new();
        if self.b.is_some() {
            s.push("recover_b");
        }
        if self.source_moment.is_some() {
            s.push("source_moment");
        }
        if self.total_mass.is_some() {
            s.push("contrast_moments");
        }
        if self.route_rms.is_some() {
            s.push("cross_route");
        }
        if self.localization.is_some() {
            s.push("localize");
        }
        if self.speeds.is_some() {
            s.push("speeds");
        }
        if self.f_hat.is_some() || self.source_error.is_some() {
            s.push("time_reversal");
        }
        if self.matching.is_some() {
            s.push("matching");
        }
        s
    }

    /// Recovered speed field under the radius prior: balls at the recovered centres.
    pub fn recovered_field(&self) -> Option<SpeedField> {
        let (priors, loc, speeds) = (self.priors?, self.localization.as_ref()?, self.speeds.as_ref()?);
        Some(rebuild_field(&priors, &loc.masses, speeds))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report fields are serializable") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format { offset: e.column() as u64, message: e.to_string() })
    }

    pub const CSV_HEADER: &'static str =
        "b,source_moment,total_mass,count,max_center_error,max_speed_error,source_error,source_error_reference_speed";

    /// One CSV row matching [`Self::CSV_HEADER`]; missing values are empty.
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.10e}")).unwrap_or_default();
        let mut s = String::new();
        let _ = write!(
            s,
            "{},{},{},{},{},{},{},{}",
            opt(self.b.map(|b| b.value)),
            opt(self.source_moment),
            opt(self.total_mass),
            self.localization.as_ref().map(|l| l.rank.to_string()).unwrap_or_default(),
            opt(self.matching.as_ref().map(|m| m.max_center_error())),
            opt(self.matching.as_ref().and_then(|m| m.max_speed_error())),
            opt(self.source_error),
            opt(self.source_error_reference_speed),
        );
        s
    }
}

pub fn rebuild_field(priors: &Priors, masses: &PointMassSet, speeds: &[f64]) -> SpeedField {
    SpeedField {
        b0: priors.b0,
        inclusions: masses.locations.iter().zip(speeds).map(|(x, b)| BallInclusion::ball(*x, priors.radius, *b)).collect(),
        r0: priors.r0,
        omega_radius: priors.omega_radius,
    }
}

/// Sign-compatible assignment minimising the summed centre distance; exhaustive over
/// injective maps of the smaller set into the larger one.
pub fn match_masses(recovered: &PointMassSet, reference: &PointMassSet, priors: &Priors) -> Matching {
    let (nr, nf) = (recovered.len(), reference.len());
    let compatible = |i: usize, j: usize| recovered.masses[i].signum() == reference.masses[j].signum();
    let dist = |i: usize, j: usize| (recovered.locations[i] - reference.locations[j]).norm();
    let k = nr.min(nf);
    let mut best: Option<(usize, f64, Vec<(usize, usize)>)> = None;
    let candidates: Vec<Vec<(usize, usize)>> = if nr <= nf {
        (0..nf).permutations(k).map(|p| (0..nr).zip(p).collect()).collect()
    } else {
        (0..nr).permutations(k).map(|p| p.into_iter().zip(0..nf).collect()).collect()
    };
    for cand in candidates {
        let kept: Vec<(usize, usize)> = cand.into_iter().filter(|(i, j)| compatible(*i, *j)).collect();
        let cost: f64 = kept.iter().map(|(i, j)| dist(*i, *j)).sum();
        // more matched pairs first, then lower cost
        let better = match &best {
            None => true,
            Some((count, c, _)) => kept.len() > *count || (kept.len() == *count && cost < *c),
        };
        if better {
            best = Some((kept.len(), cost, kept));
        }
    }
    let pairs_idx = best.map(|b| b.2).unwrap_or_default();
    let pairs = pairs_idx
        .iter()
        .map(|&(i, j)| {
            let (lr, lf) = (recovered.masses[i], reference.masses[j]);
            let speeds = speed_for_mass(lr, priors.radius, priors.b0).zip(speed_for_mass(lf, priors.radius, priors.b0));
            MatchedPair {
                recovered: i,
                reference: j,
                center_error: dist(i, j),
                mass_relative_error: ((lr - lf) / lf).abs(),
                speed_relative_error: speeds.map(|(a, b)| ((a - b) / b).abs()),
            }
        })
        .collect();
    Matching {
        pairs,
        unmatched_recovered: (0..nr).filter(|i| !pairs_idx.iter().any(|p| p.0 == *i)).collect(),
        unmatched_reference: (0..nf).filter(|j| !pairs_idx.iter().any(|p| p.1 == *j)).collect(),
    }
}

/// `‖c_a − c_b‖_{L^q}` for hole-free fields over a common background, from exact
/// ball–ball intersection volumes. Balls within each field must be disjoint.
pub fn speed_field_lq_error(a: &SpeedField, b: &SpeedField, q: f64) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(Error::Precondition(format!("L^q error needs q ≥ 1, got {q}")));
    }
    if a.b0 != b.b0 {
        return Err(Error::Precondition("fields have different backgrounds".into()));
    }
    if a.inclusions.iter().chain(&b.inclusions).any(|i| !i.holes.is_empty()) {
        return Err(Error::Precondition("L^q error is implemented for hole-free inclusions".into()));
    }
    for f in [a, b] {
        for (i, x) in f.inclusions.iter().enumerate() {
            for y in &f.inclusions[i + 1..] {
                if ball_intersection_volume(&x.center, x.radius, &y.center, y.radius) > 0.0 {
                    return Err(Error::Precondition("inclusions within one field overlap".into()));
                }
            }
        }
    }
    let b0 = a.b0;
    let mut acc = 0.0;
    let mut overlap_b = vec![0.0; b.inclusions.len()];
    for ia in &a.inclusions {
        let mut overlap_a = 0.0;
        for (j, ib) in b.inclusions.iter().enumerate() {
            let v = ball_intersection_volume(&ia.center, ia.radius, &ib.center, ib.radius);
            overlap_a += v;
            overlap_b[j] += v;
            acc += (ia.speed - ib.speed).abs().powf(q) * v;
        }
        acc += (ia.speed - b0).abs().powf(q) * (ball_volume(ia.radius) - overlap_a);
    }
    for (ib, ov) in b.inclusions.iter().zip(overlap_b) {
        acc += (ib.speed - b0).abs().powf(q) * (ball_volume(ib.radius) - ov);
    }
    Ok(acc.max(0.0).powf(1.0 / q))
}

fn frame_matrix(q: &crate::geom::Rotation) -> [[f64; 3]; 3] {
    let m = q.matrix();
    [[m[(0, 0)], m[(0, 1)], m[(0, 2)]], [m[(1, 0)], m[(1, 1)], m[(1, 2)]], [m[(2, 0)], m[(2, 1)], m[(2, 2)]]]
}

/// Runs every inversion stage on a stored trace. Errors carry the stage name.
pub fn reconstruct(
    trace: &BoundaryTrace,
    priors: &Priors,
    opts: &PipelineOptions,
    reference: Option<&Reference>,
) -> Result<ReconstructionReport> {
    let mut report = ReconstructionReport { priors: Some(*priors), ..Default::default() };
    let mut clock = StageClock::default();
    let b0 = priors.b0;

    let (series, warnings) = clock.run("coefficients", || Ok(series_from_trace(trace, 4, &opts.moments)))?;
    report.warnings.extend(warnings);

    if let (Some(cr), Some(r)) = (opts.cross_route, reference) {
        let rms = clock.run("cross_route", || cross_route(&series, trace, r, priors, &cr))?;
        let worst = rms.iter().copied().fold(0.0, f64::max);
        report.residual("cross_route", "route_rms_max", worst, Some(cr.tolerance));
        report.route_rms = Some(rms);
    }

    let b = clock.run("recover_b", || recover_b(&series, b0))?;
    report.residual("recover_b", "u2_relative_std", b.relative_std, Some(super::moments::CONSTANCY_TOL));
    report.b = Some(b);

    let bv = clock.run("source_moment", || b.checked())?;
    let u1 = clock.run("source_moment", || CauchyData::from_series(&series, 1, opts.surface_rule))?;
    let flux = green_identity_functional(&u1, &Harmonic::constant(1.0)).re;
    report.residual("source_moment", "u1_flux_vs_b", (flux / (4.0 * PI * b0 * bv) - 1.0).abs(), Some(2e-2));
    report.source_moment = Some(flux);

    let u4 = clock.run("contrast_moments", || CauchyData::from_series(&series, 4, opts.surface_rule))?;
    let total = clock.run("contrast_moments", || contrast_moments(&u4, &b, b0, &Harmonic::constant(1.0)))?.re;
    report.total_mass = Some(total);
    if let Some(r) = reference {
        let masses = r.field.point_masses();
        let expected: f64 = masses.iter().map(|p| p.1).sum();
        // mixed-sign masses cancel in the sum; normalise by the total absolute mass
        let abs_total: f64 = masses.iter().map(|p| p.1.abs()).sum();
        let scale = if abs_total > 0.0 { abs_total } else { background_mass(b0, u4.radius) };
        report.residual("contrast_moments", "total_mass_error", (total - expected).abs() / scale, Some(2e-2));
    }

    let data = ContrastData { u4, b, b0, noise_rel: opts.noise_rel };
    let sol = clock.run("localize", || prony_localize(&data, &opts.prony))?;
    report.localization = Some(Localization {
        masses: sol.masses.clone(),
        rank: sol.rank,
        gap: sol.gap.is_finite().then_some(sol.gap),
        singular_values: sol.singular_values.clone(),
        frame: sol.frame.as_ref().map(frame_matrix),
    });

    let speeds = clock.run("speeds", || recover_speeds(&sol.masses, priors.radius, b0))?;
    report.speeds = Some(speeds.clone());

    let recovered = rebuild_field(priors, &sol.masses, &speeds);
    if let Err(e) = recovered.validate_geometry() {
        report.warnings.push(Warning::Note(format!("recovered field: {e}")));
    }
    let horizon = opts.horizon.unwrap_or(trace.duration());
    let rev = clock.run("time_reversal", || time_reversal(trace, &recovered, horizon, &opts.reversal))?;
    if let Some(r) = reference {
        let err = rev.relative_error(&r.source, priors.omega_radius);
        report.residual("time_reversal", "source_error", err, Some(0.15));
        report.source_error = Some(err);
        if opts.reverse_with_reference {
            let exact = clock.run("time_reversal", || time_reversal(trace, &r.field, horizon, &opts.reversal))?;
            let err = exact.relative_error(&r.source, priors.omega_radius);
            report.residual("time_reversal", "source_error_reference_speed", err, Some(0.1));
            report.source_error_reference_speed = Some(err);
        }
    }
    report.f_hat = Some(rev.f_hat);

    if let Some(r) = reference {
        let truth = clock.run("matching", || PointMassSet::from_pairs(&r.field.point_masses()))?;
        let m = match_masses(&sol.masses, &truth, priors);
        report.residual("matching", "unmatched", (m.unmatched_recovered.len() + m.unmatched_reference.len()) as f64, Some(0.0));
        if !m.pairs.is_empty() {
            report.residual("matching", "max_center_error", m.max_center_error(), None);
        }
        if let Some(s) = m.max_speed_error() {
            report.residual("matching", "max_speed_error", s, Some(0.05));
        }
        report.matching = Some(m);
    }
    report.timings = clock.0;
    Ok(report)
}

/// Wall-clock time spent in one stage.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// Runs stages, annotating errors with the stage name and accumulating timings.
#[derive(Default)]
struct StageClock(Vec<StageTiming>);

impl StageClock {
    fn run<T>(&mut self, name: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = std::time::Instant::now();
        let out = f().map_err(|e| e.in_stage(name));
        let seconds = start.elapsed().as_secs_f64();
        match self.0.iter_mut().find(|t| t.stage == name) {
            Some(t) => t.seconds += seconds,
            None => self.0.push(StageTiming { stage: name.into(), seconds }),
        }
        out
    }
}

fn cross_route(
    series: &SeriesCoefficients,
    trace: &BoundaryTrace,
    r: &Reference,
    priors: &Priors,
    cr: &CrossRouteOptions,
) -> Result<Vec<f64>> {
    let h = 0.5 * trace.delta_r();
    let lat = aligned_lattice(&crate::lattice::CellGrid::covering(cr.half_width, h), cr.half_width);
    let ps = fit_frequencies(cr.delta.unwrap_or(default_delta_fit(priors.b0, priors.r0)), cr.frequencies);
    let samples = elliptic_samples(&r.field, &r.source, &ps, &lat, &trace.inner, &trace.outer, &FrequencyOptions::default())?;
    let fit = fit_series(&samples, cr.k_fit)?;
    let cv = cross_validate(series, &fit.truncated(4), cr.tolerance)?;
    Ok(cv.relative_rms[1..].to_vec())
}

/// Forward simulation followed by [`reconstruct`] against the scenario's own truth.
pub fn roundtrip(scenario: &Scenario, radius_prior: f64, opts: &PipelineOptions) -> Result<(ReconstructionReport, SimulationReport)> {
    let mut clock = StageClock::default();
    let (trace, sim) = clock.run("simulate", || simulate(&scenario.field, &scenario.source, &scenario.grid, &scenario.shell))?;
    let mut report = reconstruct(&trace, &scenario.priors(radius_prior), opts, Some(&scenario.reference()))?;
    report.warnings.extend(sim.warnings.iter().cloned());
    clock.0.append(&mut report.timings);
    report.timings = clock.0;
    Ok((report, sim))
}

/// Centres as plain arrays, for tabular output.
pub fn centers(masses: &PointMassSet) -> Vec<[f64; 3]> {
    masses.locations.iter().map(arr3).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec3;

    fn priors() -> Priors {
        Priors { b0: 1.0, radius: 0.12, r0: 0.6, omega_radius: 0.48 }
    }

    #[test]
    fn matching_is_sign_compatible_and_permutation_free() {
        let truth = PointMassSet::from_pairs(&[(Vec3::new(0.2, 0.0, 0.0), 1e-3), (Vec3::new(-0.2, 0.0, 0.0), -1e-3)]).unwrap();
        // the nearest candidate for truth 0 has the wrong sign
        let rec = PointMassSet::from_pairs(&[(Vec3::new(0.19, 0.0, 0.0), -1.1e-3), (Vec3::new(-0.1, 0.0, 0.0), 0.9e-3)]).unwrap();
        let m = match_masses(&rec, &truth, &priors());
        assert!(m.is_complete());
        assert!(m.pairs.iter().any(|p| p.recovered == 0 && p.reference == 1));
        let swapped = PointMassSet::from_pairs(&[(rec.locations[1], rec.masses[1]), (rec.locations[0], rec.masses[0])]).unwrap();
        let m2 = match_masses(&swapped, &truth, &priors());
        assert!((m.max_center_error() - m2.max_center_error()).abs() < 1e-15);
        let lonely = match_masses(&PointMassSet::from_pairs(&[(Vec3::zeros(), -1.0)]).unwrap(), &truth, &priors());
        assert_eq!(lonely.unmatched_reference, vec![0]);
    }

    #[test]
    fn lens_volume_limits() {
        let c = Vec3::zeros();
        assert_eq!(ball_intersection_volume(&c, 0.1, &Vec3::new(0.3, 0.0, 0.0), 0.1), 0.0);
        assert!((ball_intersection_volume(&c, 0.2, &Vec3::new(0.05, 0.0, 0.0), 0.1) - ball_volume(0.1)).abs() < 1e-15);
        // continuity at internal tangency and half-overlap of equal balls at d = r
        let touching = ball_intersection_volume(&c, 0.2, &Vec3::new(0.1 - 1e-12, 0.0, 0.0), 0.1);
        assert!((touching - ball_volume(0.1)).abs() < 1e-9);
        let v = ball_intersection_volume(&c, 1.0, &Vec3::new(1.0, 0.0, 0.0), 1.0);
        assert!((v - 5.0 * PI / 12.0).abs() < 1e-14);
    }

    #[test]
    fn lq_error_closed_forms() {
        let base = SpeedField { omega_radius: 0.48, ..SpeedField::homogeneous(1.0, 0.6) };
        let a = SpeedField { inclusions: vec![BallInclusion::ball(Vec3::zeros(), 0.1, 0.8)], ..base.clone() };
        assert_eq!(speed_field_lq_error(&a, &a, 2.0).unwrap(), 0.0);
        let e1 = speed_field_lq_error(&a, &base, 1.0).unwrap();
        assert!((e1 - 0.2 * ball_volume(0.1)).abs() < 1e-15);
        let b = SpeedField { inclusions: vec![BallInclusion::ball(Vec3::zeros(), 0.1, 0.9)], ..base.clone() };
        let e2 = speed_field_lq_error(&a, &b, 2.0).unwrap();
        assert!((e2 - (0.01 * ball_volume(0.1)).sqrt()).abs() < 1e-15);
        let far = SpeedField { inclusions: vec![BallInclusion::ball(Vec3::new(0.3, 0.0, 0.0), 0.1, 0.8)], ..base };
        let e = speed_field_lq_error(&a, &far, 1.0).unwrap();
        assert!((e - 2.0 * 0.2 * ball_volume(0.1)).abs() < 1e-15);
    }

    #[test]
    fn report_json_round_trip() {
        let mut r = ReconstructionReport { priors: Some(priors()), total_mass: Some(1e-3), ..Default::default() };
        r.residual("x", "y", 0.5, Some(1.0));
        let back = ReconstructionReport::from_json(&r.to_json()).unwrap();
        assert_eq!(back.to_json(), r.to_json());
        assert_eq!(r.csv_row().split(',').count(), ReconstructionReport::CSV_HEADER.split(',').count());
    }
}
