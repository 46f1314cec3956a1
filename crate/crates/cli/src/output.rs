//! Output artifacts: CSV and JSON writers plus the run manifest.
//!
//! Everything written here is a pure function of the command arguments and
//! seeds, so re-running a command reproduces every artifact byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use gradplay::dynamics::{SweepResult, TrajectoryRecord};
use gradplay::qnr::QnrEstimate;

/// Artifact name and content digest recorded in the manifest.
#[derive(Debug, Serialize)]
pub struct ArtifactEntry {
    pub file: String,
    pub sha256: String,
}

/// Record of one CLI invocation: inputs, parameters, destination, and
/// artifact digests. Identical manifests imply byte-identical artifacts.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub input: String,
    pub params: BTreeMap<String, serde_json::Value>,
    pub seed: Option<u64>,
    pub out_dir: String,
    pub artifacts: Vec<ArtifactEntry>,
}

impl RunManifest {
    pub fn new(command: &str, input: String, seed: Option<u64>) -> Self {
        Self {
            command: command.to_string(),
            input,
            params: BTreeMap::new(),
            seed,
            out_dir: String::new(),
            artifacts: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Into<serde_json::Value>) {
        self.params.insert(key.to_string(), value.into());
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Collects artifacts into an output directory and finalizes the manifest.
pub struct OutputDir {
    dir: PathBuf,
    manifest: RunManifest,
}

impl OutputDir {
    pub fn new(dir: &Path, mut manifest: RunManifest) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        manifest.out_dir = dir.display().to_string();
        Ok(Self { dir: dir.to_path_buf(), manifest })
    }

    pub fn write(&mut self, name: &str, content: &str) -> std::io::Result<()> {
        fs::write(self.dir.join(name), content)?;
        self.manifest.artifacts.push(ArtifactEntry {
            file: name.to_string(),
            sha256: sha256_hex(content.as_bytes()),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(value).expect("serializable artifact");
        text.push('\n');
        self.write(name, &text)
    }

    /// Write `manifest.json` last, covering every artifact written so far.
    pub fn finalize(self) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(&self.manifest).expect("serializable manifest");
        text.push('\n');
        fs::write(self.dir.join("manifest.json"), text)
    }
}

/// CSV of sampled points: `kind` is `nr` or `qnr`.
pub fn qnr_csv(estimate: &QnrEstimate) -> String {
    let mut out = String::from("kind,re,im\n");
    for p in &estimate.nr_points {
        let _ = writeln!(out, "nr,{},{}", p.re, p.im);
    }
    for p in &estimate.points {
        let _ = writeln!(out, "qnr,{},{}", p.re, p.im);
    }
    out
}

/// CSV of a trajectory: time, action coordinates, state norm.
pub fn trajectory_csv(record: &TrajectoryRecord, d1: usize, d2: usize) -> String {
    let mut out = String::from("t");
    for i in 1..=d1 {
        let _ = write!(out, ",x{i}");
    }
    for i in 1..=d2 {
        let _ = write!(out, ",y{i}");
    }
    out.push_str(",norm\n");
    for ((t, state), norm) in record.times.iter().zip(&record.states).zip(&record.norms) {
        let _ = write!(out, "{t}");
        for v in state.iter() {
            let _ = write!(out, ",{v}");
        }
        let _ = writeln!(out, ",{norm}");
    }
    out
}

/// CSV of a ratio sweep: per-tau spectral radius of the discrete map and the
/// continuous-time eigenvalues (in descending real-part order).
pub fn sweep_csv(sweep: &SweepResult) -> String {
    let dim = sweep.spectra_continuous.first().map(|s| s.len()).unwrap_or(0);
    let mut out = String::from("tau,rho");
    for i in 1..=dim {
        let _ = write!(out, ",re_l{i},im_l{i}");
    }
    out.push('\n');
    for ((tau, rho), spectrum) in
        sweep.taus.iter().zip(&sweep.rho_discrete).zip(&sweep.spectra_continuous)
    {
        let _ = write!(out, "{tau},{rho}");
        let mut eigs = spectrum.eigenvalues.clone();
        eigs.sort_by(|a, b| {
            b.re.partial_cmp(&a.re)
                .unwrap()
                .then(b.im.partial_cmp(&a.im).unwrap())
        });
        for e in &eigs {
            let _ = write!(out, ",{},{}", e.re, e.im);
        }
        out.push('\n');
    }
    out
}
