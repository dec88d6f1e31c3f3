use crate::error::{Error, Result};
use crate::forward::{Grid, SensorShell};
use crate::geom::{vec3, SurfaceRule};
use crate::medium::{BallInclusion, Bump, Hole, SourceSpec, SpeedField};
use crate::recon::{PipelineOptions, Priors, Scenario};
use crate::spectra::MomentOptions;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoleConfig {
    pub center: [f64; 3],
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InclusionConfig {
    pub center: [f64; 3],
    pub radius: f64,
    pub speed: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub holes: Vec<HoleConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumConfig {
    pub b0: f64,
    pub r0: f64,
    pub omega_radius: f64,
    #[serde(default)]
    pub inclusions: Vec<InclusionConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpConfig {
    pub center: [f64; 3],
    pub rho: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "default_m")]
    pub m: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub bumps: Vec<BumpConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    /// Half-width of the sponge-free interior box.
    pub half_width: f64,
    #[serde(default = "default_sponge")]
    pub sponge_width: usize,
    /// CFL speed bound; the medium's maximum speed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_max: Option<f64>,
    #[serde(default = "default_safety")]
    pub safety: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorConfig {
    #[serde(default = "default_sensors")]
    pub count: usize,
    pub radius: f64,
    /// Shell separation in grid spacings.
    #[serde(default = "default_delta_cells")]
    pub delta_r_cells: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconConfig {
    /// Common inclusion radius assumed by the speed recovery.
    pub radius_prior: f64,
    #[serde(default = "default_taper")]
    pub taper: f64,
    #[serde(default = "default_noise_rel")]
    pub noise_rel: f64,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    /// Degree of exact harmonic integration; equal weights when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub harmonic_degree: Option<usize>,
    #[serde(default)]
    pub cross_route: bool,
    #[serde(default)]
    pub reverse_with_reference: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Relative trace noise levels; must be strictly increasing.
    pub noise_levels: Vec<f64>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_q")]
    pub q: Vec<f64>,
    /// Regularity index of the stability estimate; recorded, never asserted.
    #[serde(default = "default_s")]
    pub s: f64,
}

/// Complete run description, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub seed: u64,
    pub medium: MediumConfig,
    pub source: SourceConfig,
    pub grid: GridConfig,
    pub sensors: SensorConfig,
    pub reconstruction: ReconConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

fn one() -> f64 {
    1.0
}
fn default_m() -> u32 {
    4
}
fn default_sponge() -> usize {
    crate::forward::MIN_SPONGE_WIDTH
}
fn default_safety() -> f64 {
    0.9
}
fn default_sensors() -> usize {
    512
}
fn default_delta_cells() -> f64 {
    2.0
}
fn default_taper() -> f64 {
    0.15
}
fn default_noise_rel() -> f64 {
    1e-4
}
fn default_n_max() -> usize {
    4
}
fn default_q() -> Vec<f64> {
    vec![1.0, 2.0, 4.0]
}
fn default_s() -> f64 {
    0.25
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is representable in TOML")
    }

    /// SHA-256 of the canonical serialisation; independent of key order and
    /// formatting of the source file.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serialises");
        hex::encode(Sha256::digest(&canonical))
    }

    pub fn speed_field(&self) -> SpeedField {
        let m = &self.medium;
        SpeedField {
            b0: m.b0,
            r0: m.r0,
            omega_radius: m.omega_radius,
            inclusions: m
                .inclusions
                .iter()
                .map(|i| BallInclusion {
                    center: vec3(i.center),
                    radius: i.radius,
                    speed: i.speed,
                    holes: i.holes.iter().map(|h| Hole { center: vec3(h.center), radius: h.radius }).collect(),
                })
                .collect(),
        }
    }

    pub fn source(&self) -> SourceSpec {
        SourceSpec {
            bumps: self
                .source
                .bumps
                .iter()
                .map(|b| Bump { center: vec3(b.center), rho: b.rho, amplitude: b.amplitude, m: b.m })
                .collect(),
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        let g = &self.grid;
        let c_max = g.c_max.unwrap_or_else(|| self.speed_field().max_speed());
        Grid::new(g.n, g.half_width, g.sponge_width, c_max, g.safety, g.duration).map_err(|e| Error::Config(e.to_string()))
    }

    /// Builds the forward scenario. Value errors are configuration errors;
    /// geometry and admissibility are checked separately.
    pub fn scenario(&self) -> Result<Scenario> {
        let grid = self.grid()?;
        let s = &self.sensors;
        if s.count == 0 || !(s.radius > 0.0) || !(s.delta_r_cells > 0.0) {
            return Err(Error::Config("sensors: count, radius and delta_r_cells must be positive".into()));
        }
        Ok(Scenario {
            field: self.speed_field(),
            source: self.source(),
            shell: SensorShell::fibonacci(s.count, s.radius, s.delta_r_cells * grid.h()),
            grid,
        })
    }

    pub fn priors(&self) -> Priors {
        Priors {
            b0: self.medium.b0,
            radius: self.reconstruction.radius_prior,
            r0: self.medium.r0,
            omega_radius: self.medium.omega_radius,
        }
    }

    pub fn pipeline_options(&self) -> PipelineOptions {
        let r = &self.reconstruction;
        let mut opts = PipelineOptions {
            moments: MomentOptions { taper: r.taper, ..Default::default() },
            noise_rel: r.noise_rel,
            horizon: r.horizon,
            surface_rule: r.harmonic_degree.map_or(SurfaceRule::EqualWeight, |degree| SurfaceRule::HarmonicExact { degree }),
            reverse_with_reference: r.reverse_with_reference,
            cross_route: r.cross_route.then(Default::default),
            ..Default::default()
        };
        opts.prony.n_max = r.n_max;
        opts.prony.seed = self.seed;
        opts
    }

    /// Noise levels, seeds and exponents of the sweep section.
    pub fn sweep(&self) -> Result<&SweepConfig> {
        let s = self.sweep.as_ref().ok_or_else(|| Error::Config("missing [sweep] section".into()))?;
        if s.noise_levels.len() < 4 {
            return Err(Error::Config(format!("sweep needs at least 4 noise levels, got {}", s.noise_levels.len())));
        }
        if s.noise_levels.windows(2).any(|w| !(w[1] > w[0])) || s.noise_levels[0] < 0.0 {
            return Err(Error::Config("sweep noise levels must be non-negative and strictly increasing".into()));
        }
        if s.seeds.is_empty() || s.q.iter().any(|q| !(*q >= 1.0)) {
            return Err(Error::Config("sweep needs seeds and exponents q ≥ 1".into()));
        }
        Ok(s)
    }
}

/// Two-inclusion scenario at n = 128 used throughout the tests and README.
pub const TWO_INCLUSION_TOML: &str = r#"seed = 1

[medium]
b0 = 1.0
r0 = 0.6
omega_radius = 0.48

[[medium.inclusions]]
center = [0.22, 0.1, 0.05]
radius = 0.12
speed = 0.85

[[medium.inclusions]]
center = [-0.2, -0.15, -0.08]
radius = 0.12
speed = 1.1

[source]
bumps = [{ center = [0.01, -0.02, 0.015], rho = 0.42, amplitude = 1.0, m = 4 }]

[grid]
n = 128
half_width = 1.98
c_max = 1.1
duration = 3.0

[sensors]
count = 512
radius = 0.5

[reconstruction]
radius_prior = 0.12
"#;
