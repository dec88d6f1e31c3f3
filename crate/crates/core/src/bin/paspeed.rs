use clap::{Parser, Subcommand};
use paspeed::harness::commands::{
    cmd_export_csv, cmd_oracle_check, cmd_reconstruct, cmd_simulate, cmd_sweep, load_config, CommandError, CommandResult,
    Overrides, EXIT_CONFIG,
};
use paspeed::harness::OracleHooks;
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(name = "paspeed", version, about = "Sound-speed and initial-pressure recovery from boundary wave data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Relative Gaussian trace noise level.
    #[arg(long, global = true)]
    noise: Option<f64>,
    #[arg(long = "grid-n", global = true)]
    grid_n: Option<usize>,
    /// Sensors per sphere.
    #[arg(long, global = true)]
    sensors: Option<usize>,
    /// L^q exponents of the sweep (comma separated).
    #[arg(long, global = true, value_delimiter = ',')]
    q: Option<Vec<f64>>,
    /// Regularity index recorded with the sweep.
    #[arg(long, global = true)]
    s: Option<f64>,
    #[arg(long, global = true, env = "PASPEED_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the forward solver and store the boundary trace.
    Simulate,
    /// Run the inversion on a stored trace.
    Reconstruct {
        trace: PathBuf,
    },
    /// Noise sweep with log-log slope fits.
    Sweep,
    /// Oracle and cross-route invariants at n = 64.
    OracleCheck {
        /// Negate u^(2) on alternate sensors (fault injection).
        #[arg(long)]
        flip_u2: bool,
    },
    /// Convert a trace or report to CSV.
    ExportCsv {
        input: PathBuf,
    },
}

fn required<'a>(v: &'a Option<PathBuf>, flag: &str) -> CommandResult<&'a PathBuf> {
    v.as_ref().ok_or_else(|| CommandError { code: EXIT_CONFIG, message: format!("missing --{flag}") })
}

fn run(cli: Cli) -> CommandResult<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CommandError { code: EXIT_CONFIG, message: e.to_string() })?;
    }
    let overrides = Overrides { seed: cli.seed, noise: cli.noise, grid_n: cli.grid_n, sensors: cli.sensors, q: cli.q, s: cli.s };
    let config = || -> CommandResult<_> { load_config(required(&cli.config, "config")?, &overrides) };
    match &cli.command {
        Command::Simulate => {
            let out = required(&cli.out, "out")?;
            let m = cmd_simulate(&config()?, overrides.noise, out)?;
            eprintln!("wrote {} ({} steps, scenario {})", out.display(), m.grid.steps, &m.scenario_hash[..12]);
        }
        Command::Reconstruct { trace } => {
            let out = required(&cli.out, "out")?;
            let r = cmd_reconstruct(&config()?, trace, overrides.noise, out)?;
            eprintln!("wrote {} (stages: {})", out.display(), r.stages().join(", "));
        }
        Command::Sweep => {
            let out = required(&cli.out, "out")?;
            let curve = cmd_sweep(&config()?, out)?;
            print!("{}", curve.slopes_csv());
        }
        Command::OracleCheck { flip_u2 } => {
            let report = cmd_oracle_check(&config()?, &OracleHooks { flip_u2_sign: *flip_u2 })?;
            print!("{}", report.to_text());
        }
        Command::ExportCsv { input } => cmd_export_csv(input, required(&cli.out, "out")?)?,
    }
    Ok(())
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("paspeed: {}", e.message);
        std::process::exit(e.code);
    }
}
