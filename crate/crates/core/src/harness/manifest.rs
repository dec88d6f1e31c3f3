use super::config::Config;
use crate::error::{Error, Result};
use crate::forward::write_atomic;
use crate::recon::StageTiming;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub n: usize,
    pub h: f64,
    pub dt: f64,
    pub steps: usize,
    pub sponge_width: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorSummary {
    pub count: usize,
    pub r_inner: f64,
    pub delta_r: f64,
}

/// Provenance of one CLI run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub scenario_hash: String,
    pub grid: GridSummary,
    pub sensors: SensorSummary,
    pub seed: u64,
    pub noise: Option<f64>,
    pub tool_version: String,
    pub timings: Vec<StageTiming>,
    pub artifacts: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(command: &str, config: &Config) -> Result<Self> {
        let scenario = config.scenario()?;
        Ok(RunManifest {
            command: command.into(),
            scenario_hash: config.hash(),
            grid: GridSummary {
                n: scenario.grid.n(),
                h: scenario.grid.h(),
                dt: scenario.grid.dt,
                steps: scenario.grid.steps,
                sponge_width: scenario.grid.sponge_width,
            },
            sensors: SensorSummary {
                count: scenario.shell.len(),
                r_inner: scenario.shell.r_inner,
                delta_r: scenario.shell.delta_r,
            },
            seed: config.seed,
            noise: None,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            timings: Vec::new(),
            artifacts: Vec::new(),
        })
    }

    pub fn time(&mut self, stage: &str, seconds: f64) {
        self.timings.push(StageTiming { stage: stage.into(), seconds });
    }

    /// Fails unless every referenced artifact exists.
    pub fn verify_artifacts(&self) -> Result<()> {
        match self.artifacts.iter().find(|p| !p.exists()) {
            Some(p) => Err(Error::Precondition(format!("artifact {} is missing", p.display()))),
            None => Ok(()),
        }
    }

    /// Checks the artifacts and writes the manifest as JSON.
    pub fn save(&self, path: &Path) -> Result<()> {
        self.verify_artifacts()?;
        let text = serde_json::to_string_pretty(self).expect("manifest serialises") + "\n";
        write_atomic(path, text.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Format { offset: e.column() as u64, message: e.to_string() })
    }
}

/// `<out>.manifest.json` next to an artifact.
pub fn manifest_path(artifact: &Path) -> PathBuf {
    let mut name = artifact.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    artifact.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::TWO_INCLUSION_TOML;

    #[test]
    fn manifest_refuses_missing_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let config = Config::from_toml(TWO_INCLUSION_TOML).unwrap();
        let mut m = RunManifest::new("simulate", &config).unwrap();
        m.artifacts.push(dir.path().join("absent.bin"));
        let out = dir.path().join("run.manifest.json");
        assert!(m.save(&out).is_err());
        std::fs::write(dir.path().join("absent.bin"), b"x").unwrap();
        m.time("simulate", 1.5);
        m.save(&out).unwrap();
        assert_eq!(RunManifest::load(&out).unwrap(), m);
        assert_eq!(manifest_path(Path::new("a/trace.bin")), PathBuf::from("a/trace.bin.manifest.json"));
    }
}
