use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::engine::{SolverConfig, Waveform};

use super::{CliError, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Binary,
    Manifest,
}

/// One output file held in memory until the run succeeds.
#[derive(Debug, Clone)]
pub struct Artifact {
    /// File name inside the output directory.
    pub name: String,
    pub bytes: Vec<u8>,
    /// Format gate; `None` is always written.
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Serialize)]
pub struct InputRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputRecord {
    pub file: String,
    pub sha256: String,
}

/// Everything needed to regenerate a run's artifacts.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub arguments: Vec<String>,
    pub seed: u64,
    pub solver: SolverConfig,
    pub solver_overrides: Vec<(String, String)>,
    pub inputs: Vec<InputRecord>,
    pub artifacts: Vec<OutputRecord>,
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Keeps generated names inside the output directory.
pub(crate) fn safe_name(s: &str) -> String {
    let out: String = s
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect();
    let out = out.trim_start_matches('.').to_string();
    if out.is_empty() {
        "_".into()
    } else {
        out
    }
}

#[derive(Debug)]
pub struct ArtifactSet {
    command: String,
    arguments: Vec<String>,
    seed: u64,
    inputs: Vec<InputRecord>,
    artifacts: Vec<Artifact>,
    deferred: Option<CliError>,
}

impl ArtifactSet {
    pub fn new(command: &str, arguments: Vec<String>, seed: u64) -> Self {
        Self { command: command.into(), arguments, seed, inputs: Vec::new(), artifacts: Vec::new(), deferred: None }
    }

    pub fn input(&mut self, path: &Path, bytes: &[u8]) {
        self.inputs.push(InputRecord {
            path: path.display().to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len(),
        });
    }

    pub fn push(&mut self, name: impl Into<String>, bytes: Vec<u8>, format: Option<Format>) {
        self.artifacts.push(Artifact { name: safe_name(&name.into()), bytes, format });
    }

    pub fn csv(&mut self, name: impl Into<String>, text: String) {
        self.push(name, text.into_bytes(), Some(Format::Csv));
    }

    pub fn json<T: Serialize>(&mut self, name: impl Into<String>, value: &T) {
        let mut text = serde_json::to_string_pretty(value).expect("artifact values serialize");
        text.push('\n');
        self.push(name, text.into_bytes(), None);
    }

    /// A waveform as CSV and, when asked for, in the binary format.
    pub fn waveform(&mut self, stem: &str, w: &Waveform) {
        self.csv(format!("{stem}.csv"), w.to_csv_string());
        self.push(format!("{stem}.bin"), w.to_binary(), Some(Format::Binary));
    }

    /// Reports `e` after the artifacts have been written.
    pub fn fail_after_write(&mut self, e: CliError) {
        self.deferred = Some(e);
    }

    pub fn artifacts(&self) -> &[Artifact] {
        &self.artifacts
    }

    fn selected(&self, cfg: &RunConfig) -> Vec<&Artifact> {
        self.artifacts.iter().filter(|a| a.format.is_none_or(|f| cfg.wants(f))).collect()
    }

    pub fn manifest(&self, cfg: &RunConfig) -> Manifest {
        Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: self.command.clone(),
            arguments: self.arguments.clone(),
            seed: self.seed,
            solver: cfg.solver,
            solver_overrides: cfg.overrides.clone(),
            inputs: self.inputs.clone(),
            artifacts: self
                .selected(cfg)
                .into_iter()
                .map(|a| OutputRecord { file: a.name.clone(), sha256: sha256_hex(&a.bytes) })
                .collect(),
        }
    }

    /// Writes the selected artifacts and the manifest.
    pub fn finish(self, cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
        let io = |path: &Path| {
            let path = path.display().to_string();
            move |source| CliError::Output { path, source }
        };
        fs::create_dir_all(&cfg.out).map_err(io(&cfg.out))?;
        let mut written = Vec::new();
        for a in self.selected(cfg) {
            let p = cfg.out.join(&a.name);
            fs::write(&p, &a.bytes).map_err(io(&p))?;
            written.push(p);
        }
        if cfg.wants(Format::Manifest) {
            let p = cfg.out.join(format!("{}.manifest.json", safe_name(&self.command)));
            let mut text = serde_json::to_string_pretty(&self.manifest(cfg)).expect("manifest serializes");
            text.push('\n');
            fs::write(&p, text).map_err(io(&p))?;
            written.push(p);
        }
        match self.deferred {
            Some(e) => Err(e),
            None => Ok(written),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_stay_inside_the_directory() {
        assert_eq!(safe_name("../etc/passwd"), "_etc_passwd");
        assert_eq!(safe_name("dev 1/a"), "dev_1_a");
        assert_eq!(safe_name(""), "_");
    }

    #[test]
    fn known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
