//! On-disk formats: JSON-lines samples, point descriptors and checkpoints.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use rydberg_core::engine::ChainState;
use rydberg_core::observables::{Moments, Sample};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{Point, RunConfig};

pub const CHECKPOINT_VERSION: u32 = 1;
pub const SAMPLES_FILE: &str = "samples.jsonl";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const POINT_FILE: &str = "point.json";

/// One line of `samples.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sweep_index: u64,
    pub seed: u64,
    pub params_hash: String,
    pub density: f64,
    pub diag_energy: f64,
    pub kink_count: u64,
    pub checkerboard: Moments,
    pub striated: Moments,
    pub star: Moments,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Moments>,
}

impl SampleRecord {
    pub fn new(s: &Sample, seed: u64, params_hash: &str) -> Self {
        Self {
            sweep_index: s.sweep,
            seed,
            params_hash: params_hash.to_owned(),
            density: s.density,
            diag_energy: s.diag_energy,
            kink_count: s.kink_count,
            checkerboard: s.checkerboard,
            striated: s.striated,
            star: s.star,
            boundary: s.boundary,
        }
    }

    pub fn into_sample(self) -> Sample {
        Sample {
            sweep: self.sweep_index,
            checkerboard: self.checkerboard,
            striated: self.striated,
            star: self.star,
            boundary: self.boundary,
            density: self.density,
            diag_energy: self.diag_energy,
            kink_count: self.kink_count,
        }
    }
}

/// Short SHA-256 digest of a point's parameters (seed excluded).
pub fn params_hash(point: &Point) -> String {
    let json = serde_json::to_vec(&(&point.lattice, &point.params, &point.schedule))
        .expect("point parameters serialize");
    Sha256::digest(&json)[..8]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Written once per point directory so analysis can recover β and the lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub params_hash: String,
    #[serde(flatten)]
    pub point: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub params_hash: String,
    pub seed: u64,
    pub config: RunConfig,
    pub point: Point,
    /// Lines of `samples.jsonl` belonging to the state below.
    pub samples_written: u64,
    pub complete: bool,
    pub state: ChainState,
}

impl Checkpoint {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read checkpoint {}", path.display()))?;
        let probe: serde_json::Value =
            serde_json::from_str(&text).with_context(|| format!("malformed checkpoint {}", path.display()))?;
        match probe.get("version").and_then(|v| v.as_u64()) {
            Some(v) if v == CHECKPOINT_VERSION as u64 => {}
            Some(v) => bail!(
                "checkpoint {} has version {v}, this build reads version {CHECKPOINT_VERSION}",
                path.display()
            ),
            None => bail!("checkpoint {} carries no version", path.display()),
        }
        serde_json::from_value(probe).with_context(|| format!("malformed checkpoint {}", path.display()))
    }

    /// Atomic replace through a temporary file.
    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &serde_json::to_vec(self)?)
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = File::create(&tmp).with_context(|| format!("cannot write {}", tmp.display()))?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// Parse a samples file; errors name the offending line.
pub fn read_samples(path: &Path) -> Result<Vec<SampleRecord>> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut out = Vec::new();
    for (k, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line)
            .with_context(|| format!("{}:{}: malformed sample record", path.display(), k + 1))?;
        out.push(rec);
    }
    Ok(out)
}

/// Keep only the first `n` lines of a samples file.
pub fn truncate_samples(path: &Path, n: u64) -> Result<()> {
    if !path.exists() {
        if n == 0 {
            return Ok(());
        }
        bail!("{} is missing but the checkpoint expects {n} samples", path.display());
    }
    let text = fs::read_to_string(path)?;
    let mut end = 0;
    let mut kept = 0;
    for line in text.split_inclusive('\n') {
        if kept == n {
            break;
        }
        end += line.len();
        kept += 1;
    }
    if kept < n {
        bail!("{} holds {kept} samples but the checkpoint expects {n}", path.display());
    }
    write_atomic(path, &text.as_bytes()[..end])
}
