use super::noise::add_noise;
use crate::elliptic::CauchyData;
use crate::error::{Error, Result};
use crate::forward::BoundaryTrace;
use crate::geom::SurfaceRule;
use crate::medium::{BallInclusion, SpeedField};
use crate::recon::{
    recover_b, single_inclusion_fit, speed_field_lq_error, time_reversal, PipelineOptions, Priors, Reference, SingleInclusionPrior,
};
use crate::spectra::{series_from_trace, SeriesCoefficients};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use std::fmt::Write as _;

/// Sensor-quadrature L² distance between the `u^(2)`, `u^(4)` Cauchy data
/// (values and normal derivatives) of two coefficient sets.
pub fn data_discrepancy(a: &SeriesCoefficients, b: &SeriesCoefficients, rule: SurfaceRule) -> Result<f64> {
    if !a.same_layout(b) {
        return Err(Error::LayoutMismatch("discrepancy needs a common sensor layout".into()));
    }
    let mut acc = 0.0;
    for k in [2, 4] {
        let (ca, cb) = (CauchyData::from_series(a, k, rule)?, CauchyData::from_series(b, k, rule)?);
        for s in 0..ca.len() {
            acc += ca.weights[s] * ((ca.g[s] - cb.g[s]).powi(2) + (ca.g_nu[s] - cb.g_nu[s]).powi(2));
        }
    }
    Ok(acc.sqrt())
}

/// Errors of one noisy reconstruction; `failure` holds the stage error when it did not complete.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub eps: f64,
    pub seed: u64,
    pub discrepancy: f64,
    pub center_error: Option<f64>,
    pub speed_error: Option<f64>,
    /// One entry per configured `q`.
    pub lq_errors: Vec<Option<f64>>,
    pub source_error: Option<f64>,
    pub failure: Option<String>,
}

impl SweepPoint {
    /// Value of a named metric (`center`, `speed`, `source`, `lq<i>`).
    pub fn metric(&self, name: &Metric) -> Option<f64> {
        match name {
            Metric::Center => self.center_error,
            Metric::Speed => self.speed_error,
            Metric::Source => self.source_error,
            Metric::Lq(i) => self.lq_errors.get(*i).copied().flatten(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Metric {
    Center,
    Speed,
    Source,
    /// Index into the sweep's `q` list.
    Lq(usize),
}

/// Least-squares log-log slope of a metric against the data discrepancy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub metric: Metric,
    pub label: String,
    /// Noiseless value of the metric; only points above twice this value are fitted.
    pub floor: f64,
    pub points: usize,
    pub slope: Option<f64>,
    /// 95% confidence interval from the Student t distribution.
    pub ci: Option<(f64, f64)>,
}

impl SlopeFit {
    pub fn within(&self, lo: f64, hi: f64) -> bool {
        self.slope.is_some_and(|s| s >= lo && s <= hi)
    }
}

/// Minimum number of points for a slope.
pub const MIN_SLOPE_POINTS: usize = 4;

/// Fits `log y = a + s log x`; `None` below [`MIN_SLOPE_POINTS`] points.
pub fn fit_loglog(points: &[(f64, f64)]) -> Option<(f64, (f64, f64))> {
    let pts: Vec<(f64, f64)> = points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len();
    if n < MIN_SLOPE_POINTS {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let a = my - slope * mx;
    let rss: f64 = pts.iter().map(|p| (p.1 - a - slope * p.0).powi(2)).sum();
    let se = (rss / (n - 2) as f64 / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, (n - 2) as f64).map(|d| d.inverse_cdf(0.975)).unwrap_or(f64::NAN);
    Some((slope, (slope - t * se, slope + t * se)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityCurve {
    pub noise_levels: Vec<f64>,
    pub seeds: Vec<u64>,
    pub q: Vec<f64>,
    pub s: f64,
    /// Noiseless reconstruction.
    pub floor: SweepPoint,
    pub points: Vec<SweepPoint>,
    pub slopes: Vec<SlopeFit>,
}

impl StabilityCurve {
    pub fn slope(&self, metric: Metric) -> Option<&SlopeFit> {
        self.slopes.iter().find(|s| s.metric == metric)
    }

    /// Median of a metric over seeds at each noise level (failed points skipped).
    pub fn medians(&self, metric: Metric) -> Vec<Option<f64>> {
        self.noise_levels
            .iter()
            .map(|eps| {
                let mut v: Vec<f64> = self.points.iter().filter(|p| p.eps == *eps).filter_map(|p| p.metric(&metric)).collect();
                if v.is_empty() {
                    return None;
                }
                v.sort_by(|a, b| a.total_cmp(b));
                let m = v.len() / 2;
                Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("eps,seed,discrepancy,center_error,speed_error");
        for q in &self.q {
            let _ = write!(s, ",lq_error_q{q}");
        }
        s.push_str(",source_error,status\n");
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.10e}")).unwrap_or_default();
        for p in std::iter::once(&self.floor).chain(&self.points) {
            let _ = write!(s, "{:e},{},{:.10e},{},{}", p.eps, p.seed, p.discrepancy, opt(p.center_error), opt(p.speed_error));
            for e in &p.lq_errors {
                let _ = write!(s, ",{}", opt(*e));
            }
            let status = p.failure.as_deref().map(|f| format!("failed: {}", f.replace([',', '\n'], ";"))).unwrap_or("ok".into());
            let _ = writeln!(s, ",{},{status}", opt(p.source_error));
        }
        s
    }

    pub fn slopes_csv(&self) -> String {
        let mut s = String::from("metric,floor,points,slope,ci_low,ci_high\n");
        for f in &self.slopes {
            let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{:.6e},{},{},{},{}",
                f.label,
                f.floor,
                f.points,
                opt(f.slope),
                opt(f.ci.map(|c| c.0)),
                opt(f.ci.map(|c| c.1))
            );
        }
        s
    }
}

/// Inputs of a stability sweep around one clean trace.
#[derive(Debug, Clone)]
pub struct SweepSpec<'a> {
    pub clean: &'a BoundaryTrace,
    pub priors: Priors,
    pub reference: &'a Reference,
    pub options: PipelineOptions,
    pub noise_levels: Vec<f64>,
    pub seeds: Vec<u64>,
    pub q: Vec<f64>,
    pub s: f64,
}

fn run_point(spec: &SweepSpec, clean: &SeriesCoefficients, eps: f64, seed: u64) -> SweepPoint {
    let mut point = SweepPoint {
        eps,
        seed,
        discrepancy: 0.0,
        center_error: None,
        speed_error: None,
        lq_errors: vec![None; spec.q.len()],
        source_error: None,
        failure: None,
    };
    let truth = &spec.reference.field;
    let b0 = spec.priors.b0;
    let outcome = (|| -> Result<()> {
        let noisy = add_noise(spec.clean, eps, seed)?;
        let (series, _) = series_from_trace(&noisy, 4, &spec.options.moments);
        point.discrepancy = data_discrepancy(&series, clean, spec.options.surface_rule)?;
        let b = recover_b(&series, b0).map_err(|e| e.in_stage("recover_b"))?;
        let u4 = CauchyData::from_series(&series, 4, spec.options.surface_rule)?;
        let prior = SingleInclusionPrior { radius: spec.priors.radius };
        let fit = single_inclusion_fit(&u4, &b, b0, &prior).map_err(|e| e.in_stage("single_inclusion"))?;
        let inc = &truth.inclusions[0];
        point.center_error = Some((fit.center - inc.center).norm());
        point.speed_error = Some(((fit.speed - inc.speed) / inc.speed).abs());
        let field = SpeedField {
            inclusions: vec![BallInclusion::ball(fit.center, prior.radius, fit.speed)],
            ..truth.clone()
        };
        for (i, q) in spec.q.iter().enumerate() {
            point.lq_errors[i] = Some(speed_field_lq_error(&field, truth, *q)?);
        }
        let horizon = spec.options.horizon.unwrap_or(noisy.duration());
        let rev = time_reversal(&noisy, &field, horizon, &spec.options.reversal).map_err(|e| e.in_stage("time_reversal"))?;
        point.source_error = Some(rev.relative_error(&spec.reference.source, spec.priors.omega_radius));
        Ok(())
    })();
    if let Err(e) = outcome {
        point.failure = Some(e.to_string());
    }
    point
}

/// Noisy single-inclusion reconstructions for every (ε, seed), run in parallel;
/// failed points are kept and marked. Centre and speed come from the degree-≤1
/// moments ([`single_inclusion_fit`]), `f̂` from time reversal in the recovered medium.
pub fn stability_sweep(spec: &SweepSpec) -> Result<StabilityCurve> {
    let truth = &spec.reference.field;
    if truth.inclusions.len() != 1 || !truth.inclusions[0].holes.is_empty() {
        return Err(Error::Precondition("the stability sweep needs a single hole-free inclusion".into()));
    }
    if spec.noise_levels.len() < MIN_SLOPE_POINTS {
        return Err(Error::Precondition(format!("a sweep needs at least {MIN_SLOPE_POINTS} noise levels")));
    }
    if spec.noise_levels.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Precondition("noise levels must be strictly increasing".into()));
    }
    let (clean, _) = series_from_trace(spec.clean, 4, &spec.options.moments);
    let floor = run_point(spec, &clean, 0.0, spec.seeds.first().copied().unwrap_or(0));
    if let Some(f) = &floor.failure {
        return Err(Error::Precondition(format!("noiseless reconstruction failed: {f}")));
    }
    let jobs: Vec<(f64, u64)> = spec.noise_levels.iter().flat_map(|e| spec.seeds.iter().map(move |s| (*e, *s))).collect();
    let points: Vec<SweepPoint> = jobs.par_iter().map(|(eps, seed)| run_point(spec, &clean, *eps, *seed)).collect();

    let mut metrics = vec![(Metric::Center, "center".to_string()), (Metric::Speed, "speed".into()), (Metric::Source, "source".into())];
    metrics.extend(spec.q.iter().enumerate().map(|(i, q)| (Metric::Lq(i), format!("lq_q{q}"))));
    let slopes = metrics
        .into_iter()
        .map(|(metric, label)| {
            let floor_value = floor.metric(&metric).unwrap_or(0.0);
            let pts: Vec<(f64, f64)> = points
                .iter()
                .filter(|p| p.failure.is_none() && p.eps > 0.0)
                .filter_map(|p| p.metric(&metric).map(|y| (p.discrepancy, y)))
                .filter(|(_, y)| *y > 2.0 * floor_value)
                .collect();
            let fit = fit_loglog(&pts);
            SlopeFit { metric, label, floor: floor_value, points: pts.len(), slope: fit.map(|f| f.0), ci: fit.map(|f| f.1) }
        })
        .collect();
    Ok(StabilityCurve {
        noise_levels: spec.noise_levels.clone(),
        seeds: spec.seeds.clone(),
        q: spec.q.clone(),
        s: spec.s,
        floor,
        points,
        slopes,
    })
}
