//! Run configuration, read from TOML.
//!
//! ```toml
//! [lattice]
//! lx = 8
//! ly = 8
//! boundary = "pbc"              # or "obc"
//!
//! [physics]
//! rb = 1.2
//! delta = 1.1
//! r0 = 4.0
//! temperature_factor = 1.0      # T = c / lx; or `temperature = 0.125`
//! cutoff_policy = "strict"      # or "allow_half_length"
//!
//! [engine]
//! thermalization_sweeps = 2000
//! measurement_sweeps = 20000
//! measure_every = 1
//! seeds = [1, 2, 3]
//! initial_state = "all_ground"  # "random_product", { from_seed_phase = "striated" }
//! checkpoint_every = 5000
//! ramp = { from = 0.0, steps = 50, sweeps_per_step = 200 }
//!
//! [sweep]                       # only for `rydberg sweep`
//! delta = [1.0, 1.1, 1.2]
//! l = [8, 12]
//! ```

use std::path::Path;

use anyhow::{bail, Context, Result};
use rydberg_core::engine::{InitialState, QmcParams, RunPlan, Schedule};
use rydberg_core::lattice::{Boundary, CutoffPolicy, InteractionTable, LatticeSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lattice: LatticeConfig,
    pub physics: PhysicsConfig,
    pub engine: EngineConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepAxes>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub lx: usize,
    pub ly: usize,
    pub boundary: Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    pub rb: f64,
    pub delta: f64,
    pub r0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    /// `T = temperature_factor / lx`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature_factor: Option<f64>,
    #[serde(default)]
    pub cutoff_policy: CutoffPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    pub thermalization_sweeps: u64,
    pub measurement_sweeps: u64,
    #[serde(default = "one")]
    pub measure_every: u64,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub initial_state: InitialState,
    /// Sweeps between checkpoints; a final checkpoint is always written.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint_every: Option<u64>,
    /// Linear detuning ramp from `from` to the point's detuning before thermalization.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ramp: Option<Ramp>,
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ramp {
    pub from: f64,
    pub steps: usize,
    pub sweeps_per_step: u64,
}

/// Grid axes; each present axis replaces the corresponding scalar setting.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxes {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rb: Option<Vec<f64>>,
    /// Linear sizes; sets `lx = ly = l`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<std::path::PathBuf>,
}

/// One parameter point of a run or sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub index: usize,
    pub lattice: LatticeSpec,
    /// Chain parameters with `rng_seed` left at 0.
    pub params: QmcParams,
    pub schedule: Schedule,
}

impl Point {
    pub fn with_seed(&self, seed: u64) -> QmcParams {
        QmcParams {
            rng_seed: seed,
            ..self.params.clone()
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Every parameter point, validated against the engine's preconditions.
    pub fn points(&self) -> Result<Vec<Point>> {
        if self.engine.seeds.is_empty() {
            bail!("engine.seeds is empty");
        }
        let mut seen = self.engine.seeds.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.engine.seeds.len() {
            bail!("engine.seeds contains duplicates");
        }
        if self.engine.checkpoint_every == Some(0) {
            bail!("engine.checkpoint_every must be at least 1");
        }
        if self.engine.initial_state == InitialState::FromCheckpoint {
            bail!("initial_state = \"from_checkpoint\" is not a config option; use --resume");
        }
        match (self.physics.temperature, self.physics.temperature_factor) {
            (Some(_), Some(_)) => bail!("set either physics.temperature or physics.temperature_factor, not both"),
            (None, None) if self.sweep.as_ref().is_none_or(|s| s.temperature.is_none()) => {
                bail!("physics.temperature or physics.temperature_factor is required")
            }
            _ => {}
        }

        let axes = self.sweep.clone().unwrap_or_default();
        let nonempty = |name: &str, len: Option<usize>| match len {
            Some(0) => bail!("sweep.{name} is empty"),
            _ => Ok(()),
        };
        nonempty("delta", axes.delta.as_ref().map(Vec::len))?;
        nonempty("rb", axes.rb.as_ref().map(Vec::len))?;
        nonempty("l", axes.l.as_ref().map(Vec::len))?;
        nonempty("temperature", axes.temperature.as_ref().map(Vec::len))?;

        let sizes: Vec<(usize, usize)> = match &axes.l {
            Some(ls) => ls.iter().map(|&l| (l, l)).collect(),
            None => vec![(self.lattice.lx, self.lattice.ly)],
        };
        let rbs = axes.rb.clone().unwrap_or_else(|| vec![self.physics.rb]);
        let deltas = axes.delta.clone().unwrap_or_else(|| vec![self.physics.delta]);
        let temps: Vec<Option<f64>> = match &axes.temperature {
            Some(ts) => ts.iter().map(|&t| Some(t)).collect(),
            None => vec![None],
        };

        let mut points = Vec::new();
        for &(lx, ly) in &sizes {
            let lattice = LatticeSpec::new(lx, ly, self.lattice.boundary)?;
            for &rb in &rbs {
                for &delta in &deltas {
                    for &t in &temps {
                        let temperature = match (t, self.physics.temperature, self.physics.temperature_factor) {
                            (Some(t), _, _) => t,
                            (None, Some(t), _) => t,
                            (None, None, Some(c)) => c / lx as f64,
                            (None, None, None) => unreachable!("checked above"),
                        };
                        let params = QmcParams {
                            rb,
                            delta,
                            r0: self.physics.r0,
                            temperature,
                            thermalization_sweeps: self.engine.thermalization_sweeps,
                            measurement_sweeps: self.engine.measurement_sweeps,
                            measure_every: self.engine.measure_every,
                            rng_seed: 0,
                            initial_state: self.engine.initial_state,
                            cutoff_policy: self.physics.cutoff_policy,
                        };
                        let schedule = match self.engine.ramp {
                            Some(r) => Schedule::delta_ramp(r.from, delta, r.steps, r.sweeps_per_step),
                            None => Schedule::none(),
                        };
                        let index = points.len();
                        let context = || format!("point {index} (L={lx}x{ly}, Rb={rb}, delta={delta}, T={temperature})");
                        params.validate().with_context(context)?;
                        RunPlan::new(&params, &schedule).with_context(context)?;
                        InteractionTable::build_with(&lattice, rb, params.r0, params.cutoff_policy)
                            .with_context(context)?;
                        points.push(Point { index, lattice, params, schedule });
                    }
                }
            }
        }
        Ok(points)
    }
}
