use super::config::Config;
use super::manifest::{manifest_path, RunManifest};
use super::noise::add_noise;
use super::oracle::{oracle_check, OracleHooks, OracleReport};
use super::sweep::{stability_sweep, StabilityCurve, SweepSpec};
use crate::error::Error;
use crate::forward::{simulate, write_atomic, BoundaryTrace, TRACE_MAGIC};
use crate::medium::{check_admissible, Verdict};
use crate::recon::{reconstruct, ReconstructionReport};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// A failed command: process exit code plus the message for stderr.
#[derive(Debug)]
pub struct CommandError {
    pub code: i32,
    pub message: String,
}

impl std::fmt::Display for CommandError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

pub const EXIT_ORACLE_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_ADMISSIBILITY: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;
pub const EXIT_STAGE: i32 = 5;

/// Exit code of a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Format { .. } | Error::Io(_) => EXIT_CONFIG,
        Error::GeometryViolation(_) => EXIT_ADMISSIBILITY,
        Error::Stage { .. } => EXIT_STAGE,
        _ => EXIT_NUMERIC,
    }
}

impl From<Error> for CommandError {
    fn from(e: Error) -> Self {
        let message = match &e {
            Error::Stage { stage, source } => format!("stage `{stage}` failed: {source}"),
            other => other.to_string(),
        };
        CommandError { code: exit_code(&e), message }
    }
}

pub type CommandResult<T> = std::result::Result<T, CommandError>;

/// Command-line overrides applied on top of a configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub noise: Option<f64>,
    pub grid_n: Option<usize>,
    pub sensors: Option<usize>,
    pub q: Option<Vec<f64>>,
    pub s: Option<f64>,
}

pub fn load_config(path: &Path, o: &Overrides) -> CommandResult<Config> {
    let mut c = Config::load(path)?;
    if let Some(seed) = o.seed {
        c.seed = seed;
    }
    if let Some(n) = o.grid_n {
        c.grid.n = n;
    }
    if let Some(s) = o.sensors {
        c.sensors.count = s;
    }
    if let Some(sweep) = c.sweep.as_mut() {
        if let Some(q) = &o.q {
            sweep.q = q.clone();
        }
        if let Some(s) = o.s {
            sweep.s = s;
        }
    }
    Ok(c)
}

fn admissibility(config: &Config) -> CommandResult<()> {
    let scenario = config.scenario()?;
    let report = check_admissible(&scenario.field, &scenario.source, scenario.grid.h())?;
    if let Verdict::Fail(reasons) = report.verdict {
        return Err(CommandError {
            code: EXIT_ADMISSIBILITY,
            message: format!(
                "admissibility failed: {reasons:?} (contrast norm {:.4}, ∫f/c² = {:.4e})",
                report.contrast_norm, report.source_integral
            ),
        });
    }
    Ok(())
}

/// Noise seed derived from the run seed so that traces stay reproducible.
fn noise_seed(seed: u64) -> u64 {
    seed ^ 0x9e37_79b9_7f4a_7c15
}

/// Simulates the configured scenario and writes the trace plus its manifest.
pub fn cmd_simulate(config: &Config, noise: Option<f64>, out: &Path) -> CommandResult<RunManifest> {
    admissibility(config)?;
    let scenario = config.scenario()?;
    let mut manifest = RunManifest::new("simulate", config)?;
    let start = Instant::now();
    let (mut trace, _) = simulate(&scenario.field, &scenario.source, &scenario.grid, &scenario.shell)?;
    manifest.time("simulate", start.elapsed().as_secs_f64());
    if let Some(eps) = noise {
        trace = add_noise(&trace, eps, noise_seed(config.seed))?;
        manifest.noise = Some(eps);
    }
    trace.save(out)?;
    manifest.artifacts.push(out.to_path_buf());
    manifest.save(&manifest_path(out))?;
    Ok(manifest)
}

/// Rows `x,y,z,f_hat` of the reconstructed initial pressure inside the reversal ball.
pub fn f_hat_csv(report: &ReconstructionReport) -> Option<String> {
    let f = report.f_hat.as_ref()?;
    let g = f.grid;
    let mut s = String::from("x,y,z,f_hat\n");
    for i in 0..g.n {
        for j in 0..g.n {
            for k in 0..g.n {
                let v = f.data[g.index(i, j, k)];
                if v != 0.0 {
                    let x = g.center(i, j, k);
                    let _ = writeln!(s, "{:.6},{:.6},{:.6},{:.10e}", x.x, x.y, x.z, v);
                }
            }
        }
    }
    Some(s)
}

/// Runs every inversion stage on a stored trace. Writes the JSON report at
/// `out`, a CSV row at `out.csv`, `f̂` at `out.fhat.csv` and the manifest.
pub fn cmd_reconstruct(config: &Config, trace_path: &Path, noise: Option<f64>, out: &Path) -> CommandResult<ReconstructionReport> {
    let mut trace = BoundaryTrace::load(trace_path)?;
    if let Some(eps) = noise {
        trace = add_noise(&trace, eps, noise_seed(config.seed))?;
    }
    let scenario = config.scenario()?;
    let report = reconstruct(&trace, &config.priors(), &config.pipeline_options(), Some(&scenario.reference()))?;
    let mut manifest = RunManifest::new("reconstruct", config)?;
    manifest.noise = noise;
    manifest.timings = report.timings.clone();
    write_atomic(out, report.to_json().as_bytes())?;
    let csv = sibling(out, ".csv");
    write_atomic(&csv, format!("{}\n{}\n", ReconstructionReport::CSV_HEADER, report.csv_row()).as_bytes())?;
    manifest.artifacts.extend([trace_path.to_path_buf(), out.to_path_buf(), csv]);
    if let Some(text) = f_hat_csv(&report) {
        let path = sibling(out, ".fhat.csv");
        write_atomic(&path, text.as_bytes())?;
        manifest.artifacts.push(path);
    }
    manifest.save(&manifest_path(out))?;
    Ok(report)
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(suffix);
    path.with_file_name(name)
}

/// Noise sweep around the configured (single-inclusion) scenario. Writes the
/// point CSV at `out`, slopes at `out.slopes.csv` and the full curve as JSON.
pub fn cmd_sweep(config: &Config, out: &Path) -> CommandResult<StabilityCurve> {
    admissibility(config)?;
    let sweep = config.sweep()?.clone();
    let scenario = config.scenario()?;
    let mut manifest = RunManifest::new("sweep", config)?;
    let start = Instant::now();
    let (clean, _) = simulate(&scenario.field, &scenario.source, &scenario.grid, &scenario.shell)?;
    manifest.time("simulate", start.elapsed().as_secs_f64());
    let reference = scenario.reference();
    let spec = SweepSpec {
        clean: &clean,
        priors: config.priors(),
        reference: &reference,
        options: config.pipeline_options(),
        noise_levels: sweep.noise_levels,
        seeds: sweep.seeds,
        q: sweep.q,
        s: sweep.s,
    };
    let start = Instant::now();
    let curve = stability_sweep(&spec)?;
    manifest.time("sweep", start.elapsed().as_secs_f64());
    let slopes = sibling(out, ".slopes.csv");
    let json = sibling(out, ".json");
    write_atomic(out, curve.to_csv().as_bytes())?;
    write_atomic(&slopes, curve.slopes_csv().as_bytes())?;
    write_atomic(&json, (serde_json::to_string_pretty(&curve).expect("curve serialises") + "\n").as_bytes())?;
    manifest.artifacts.extend([out.to_path_buf(), slopes, json]);
    manifest.save(&manifest_path(out))?;
    Ok(curve)
}

/// Oracle suite at n = 64. Rejected configurations exit with the admissibility
/// code; failing checks exit with [`EXIT_ORACLE_FAILED`].
pub fn cmd_oracle_check(config: &Config, hooks: &OracleHooks) -> CommandResult<OracleReport> {
    let report = oracle_check(config, hooks)?;
    if let Some(reason) = &report.rejected {
        return Err(CommandError { code: EXIT_ADMISSIBILITY, message: format!("configuration rejected: {reason}") });
    }
    if !report.passed() {
        return Err(CommandError { code: EXIT_ORACLE_FAILED, message: report.to_text() });
    }
    Ok(report)
}

/// Converts a trace file (by magic) or a reconstruction report (JSON) to CSV.
pub fn cmd_export_csv(input: &Path, out: &Path) -> CommandResult<()> {
    let bytes = std::fs::read(input).map_err(Error::from)?;
    if bytes.starts_with(TRACE_MAGIC) {
        let trace = BoundaryTrace::from_bytes(&bytes)?;
        let mut buf = Vec::new();
        trace.write_csv(&mut buf)?;
        write_atomic(out, &buf)?;
    } else {
        let text = String::from_utf8(bytes).map_err(|e| Error::Format { offset: e.utf8_error().valid_up_to() as u64, message: "input is neither a trace nor a report".into() })?;
        let report = ReconstructionReport::from_json(&text)?;
        write_atomic(out, format!("{}\n{}\n", ReconstructionReport::CSV_HEADER, report.csv_row()).as_bytes())?;
    }
    Ok(())
}
