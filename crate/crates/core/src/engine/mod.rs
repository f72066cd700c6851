//! The QMC Markov chain: sweeps, schedules, equilibration and measurement.
//!
//! The transverse field is taken as `-(Ω/2) Σ σ_x`, which is unitarily
//! equivalent to the `+` sign (conjugation by `Π σ_z`) and makes every
//! worldline weight positive. Diagonal observables are identical under both.

mod update;

pub use update::{diagonal_action, SiteUpdater, CUT_RATE};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{CutoffPolicy, InteractionTable, LatticeSpec};
use crate::observables::{Measurer, ObservableSeries, Order, Sample};
use crate::worldline::Configuration;

/// Couplings and temperature of one simulation point (units of Ω).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalPoint {
    pub rb: f64,
    pub delta: f64,
    pub r0: f64,
    pub temperature: f64,
}

impl PhysicalPoint {
    pub fn beta(&self) -> f64 {
        1.0 / self.temperature
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::Config(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        if !self.delta.is_finite() {
            return Err(Error::Config("detuning must be finite".into()));
        }
        if !(self.rb > 0.0 && self.r0 > 0.0) {
            return Err(Error::Config(format!(
                "Rb and R0 must be positive, got Rb={} R0={}",
                self.rb, self.r0
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    #[default]
    AllGround,
    RandomProduct,
    /// Resume from a supplied configuration.
    FromCheckpoint,
    /// Start from the ideal classical pattern of an order.
    FromSeedPhase(Order),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QmcParams {
    pub rb: f64,
    pub delta: f64,
    pub r0: f64,
    pub temperature: f64,
    pub thermalization_sweeps: u64,
    pub measurement_sweeps: u64,
    pub measure_every: u64,
    pub rng_seed: u64,
    #[serde(default)]
    pub initial_state: InitialState,
    #[serde(default)]
    pub cutoff_policy: CutoffPolicy,
}

impl QmcParams {
    pub fn point(&self) -> PhysicalPoint {
        PhysicalPoint {
            rb: self.rb,
            delta: self.delta,
            r0: self.r0,
            temperature: self.temperature,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.point().validate()?;
        if self.measure_every == 0 {
            return Err(Error::Config("measure_every must be >= 1".into()));
        }
        Ok(())
    }
}

/// Partial override of the physical point for a schedule stage.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PointOverride {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rb: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
}

impl PointOverride {
    pub fn apply(&self, p: PhysicalPoint) -> PhysicalPoint {
        PhysicalPoint {
            rb: self.rb.unwrap_or(p.rb),
            delta: self.delta.unwrap_or(p.delta),
            r0: p.r0,
            temperature: self.temperature.unwrap_or(p.temperature),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    #[serde(default)]
    pub overrides: PointOverride,
    pub sweeps: u64,
}

/// Stages run in order before thermalization and measurement.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Schedule {
    pub stages: Vec<Stage>,
}

impl Schedule {
    pub fn none() -> Self {
        Self::default()
    }

    /// Linear ramp of the detuning from `from` towards the target in `steps` stages.
    pub fn delta_ramp(from: f64, to: f64, steps: usize, sweeps_per_step: u64) -> Self {
        let stages = (0..steps)
            .map(|k| Stage {
                overrides: PointOverride {
                    delta: Some(from + (to - from) * k as f64 / steps as f64),
                    ..Default::default()
                },
                sweeps: sweeps_per_step,
            })
            .collect();
        Self { stages }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phase {
    pub point: PhysicalPoint,
    pub sweeps: u64,
    pub measure: bool,
}

/// Flattened run: schedule stages, thermalization, then measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct RunPlan {
    pub phases: Vec<Phase>,
    pub measure_every: u64,
}

impl RunPlan {
    pub fn new(params: &QmcParams, schedule: &Schedule) -> Result<Self> {
        params.validate()?;
        let base = params.point();
        let mut phases: Vec<Phase> = schedule
            .stages
            .iter()
            .map(|s| Phase {
                point: s.overrides.apply(base),
                sweeps: s.sweeps,
                measure: false,
            })
            .collect();
        for p in &phases {
            p.point.validate()?;
        }
        phases.push(Phase {
            point: base,
            sweeps: params.thermalization_sweeps,
            measure: false,
        });
        phases.push(Phase {
            point: base,
            sweeps: params.measurement_sweeps,
            measure: true,
        });
        Ok(Self {
            phases,
            measure_every: params.measure_every,
        })
    }

    pub fn total_sweeps(&self) -> u64 {
        self.phases.iter().map(|p| p.sweeps).sum()
    }

    /// Phase index and sweeps already done inside it, for a global sweep count.
    fn locate(&self, done: u64) -> Option<(usize, u64)> {
        let mut start = 0;
        for (k, p) in self.phases.iter().enumerate() {
            if done < start + p.sweeps {
                return Some((k, done - start));
            }
            start += p.sweeps;
        }
        None
    }
}

/// Serializable state of a chain, sufficient for bit-exact resumption.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    pub config: Configuration,
    pub rng: ChaCha8Rng,
    pub point: PhysicalPoint,
    pub cutoff_policy: CutoffPolicy,
    pub sweeps_done: u64,
    pub diag_action: f64,
}

/// One Markov chain owning its configuration and random stream.
#[derive(Debug, Clone)]
pub struct Chain {
    config: Configuration,
    table: InteractionTable,
    point: PhysicalPoint,
    cutoff_policy: CutoffPolicy,
    rng: ChaCha8Rng,
    updater: SiteUpdater,
    order: Vec<usize>,
    action: f64,
    sweeps_done: u64,
}

impl Chain {
    pub fn new(
        spec: LatticeSpec,
        point: PhysicalPoint,
        policy: CutoffPolicy,
        seed: u64,
        initial: InitialState,
    ) -> Result<Self> {
        point.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let beta = point.beta();
        let config = match initial {
            InitialState::AllGround => Configuration::uniform(spec, beta, false)?,
            InitialState::RandomProduct => {
                let occ: Vec<bool> = (0..spec.num_sites()).map(|_| rng.random()).collect();
                Configuration::from_occupations(spec, beta, &occ)?
            }
            InitialState::FromSeedPhase(order) => {
                Configuration::from_occupations(spec, beta, &order.ideal_pattern(&spec))?
            }
            InitialState::FromCheckpoint => {
                return Err(Error::Config(
                    "checkpoint start needs a configuration; use Chain::from_configuration".into(),
                ))
            }
        };
        Self::assemble(config, point, policy, rng, 0)
    }

    /// Start from an existing configuration; its β is rescaled to the point's temperature.
    pub fn from_configuration(
        mut config: Configuration,
        point: PhysicalPoint,
        policy: CutoffPolicy,
        seed: u64,
    ) -> Result<Self> {
        point.validate()?;
        config.validate()?;
        rescale_beta(&mut config, point.beta());
        Self::assemble(config, point, policy, ChaCha8Rng::seed_from_u64(seed), 0)
    }

    pub fn from_state(state: ChainState) -> Result<Self> {
        state.config.validate()?;
        let table = InteractionTable::build_with(
            &state.config.lattice,
            state.point.rb,
            state.point.r0,
            state.cutoff_policy,
        )?;
        let n = state.config.num_sites();
        Ok(Self {
            config: state.config,
            table,
            point: state.point,
            cutoff_policy: state.cutoff_policy,
            rng: state.rng,
            updater: SiteUpdater::new(),
            order: (0..n).collect(),
            action: state.diag_action,
            sweeps_done: state.sweeps_done,
        })
    }

    fn assemble(
        config: Configuration,
        point: PhysicalPoint,
        policy: CutoffPolicy,
        rng: ChaCha8Rng,
        sweeps_done: u64,
    ) -> Result<Self> {
        let table = InteractionTable::build_with(&config.lattice, point.rb, point.r0, policy)?;
        let action = diagonal_action(&config, &table, point.delta);
        let n = config.num_sites();
        Ok(Self {
            config,
            table,
            point,
            cutoff_policy: policy,
            rng,
            updater: SiteUpdater::new(),
            order: (0..n).collect(),
            action,
            sweeps_done,
        })
    }

    pub fn state(&self) -> ChainState {
        ChainState {
            config: self.config.clone(),
            rng: self.rng.clone(),
            point: self.point,
            cutoff_policy: self.cutoff_policy,
            sweeps_done: self.sweeps_done,
            diag_action: self.action,
        }
    }

    pub fn config(&self) -> &Configuration {
        &self.config
    }

    pub fn into_config(self) -> Configuration {
        self.config
    }

    pub fn table(&self) -> &InteractionTable {
        &self.table
    }

    pub fn point(&self) -> PhysicalPoint {
        self.point
    }

    pub fn sweeps_done(&self) -> u64 {
        self.sweeps_done
    }

    /// Incrementally tracked `∫ H_0 dτ`.
    pub fn diag_action(&self) -> f64 {
        self.action
    }

    pub fn recompute_action(&self) -> f64 {
        diagonal_action(&self.config, &self.table, self.point.delta)
    }

    /// Move to a new physical point, keeping the worldlines.
    ///
    /// A new Rb or R0 rebuilds the interaction table; a new temperature
    /// stretches all kink times to the new β.
    pub fn set_point(&mut self, point: PhysicalPoint) -> Result<()> {
        point.validate()?;
        if point.rb != self.point.rb || point.r0 != self.point.r0 {
            self.table = InteractionTable::build_with(
                &self.config.lattice,
                point.rb,
                point.r0,
                self.cutoff_policy,
            )?;
        }
        if point.temperature != self.point.temperature {
            rescale_beta(&mut self.config, point.beta());
        }
        self.point = point;
        self.action = self.recompute_action();
        Ok(())
    }

    pub fn update_site(&mut self, i: usize) {
        self.action += self.updater.update(
            &mut self.config,
            i,
            &self.table,
            self.point.delta,
            &mut self.rng,
        );
    }

    /// One site update per site in a fresh random order.
    pub fn sweep(&mut self) {
        // reset first so the permutation depends only on the RNG state
        for (k, slot) in self.order.iter_mut().enumerate() {
            *slot = k;
        }
        self.order.shuffle(&mut self.rng);
        for k in 0..self.order.len() {
            let i = self.order[k];
            self.update_site(i);
        }
        self.sweeps_done += 1;
    }

    /// Advance through `plan` from the current sweep count up to `until`
    /// (or the end), calling `on_sample` at each measurement.
    pub fn advance(
        &mut self,
        plan: &RunPlan,
        until: Option<u64>,
        measurer: &mut Measurer,
        on_sample: &mut dyn FnMut(&Chain, Sample),
    ) -> Result<()> {
        let end = until.unwrap_or(u64::MAX).min(plan.total_sweeps());
        while self.sweeps_done < end {
            let (k, inner) = plan
                .locate(self.sweeps_done)
                .expect("sweep index inside plan");
            let phase = plan.phases[k];
            if phase.point != self.point {
                self.set_point(phase.point)?;
            }
            self.sweep();
            let local = inner + 1;
            if phase.measure && local % plan.measure_every == 0 {
                let sample = measurer.measure(&self.config, self.sweeps_done, self.action);
                on_sample(self, sample);
            }
        }
        Ok(())
    }
}

fn rescale_beta(config: &mut Configuration, beta: f64) {
    if config.beta == beta {
        return;
    }
    let s = beta / config.beta;
    for line in &mut config.lines {
        for k in &mut line.kinks {
            *k *= s;
        }
        // rounding can push the last kink onto β
        while line.kinks.last().is_some_and(|&k| k >= beta) {
            let last = line.kinks.len() - 1;
            line.kinks[last] = f64::from_bits(beta.to_bits() - 1);
            if line.kinks.len() > 1 && line.kinks[last - 1] >= line.kinks[last] {
                line.kinks.truncate(last - 1);
            } else {
                break;
            }
        }
    }
    config.beta = beta;
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub series: ObservableSeries,
    pub config: Configuration,
}

/// Execute a full run: schedule stages, thermalization, measurement.
///
/// `hook` sees every sample and the configuration it was taken from.
pub fn run(
    spec: LatticeSpec,
    params: &QmcParams,
    schedule: &Schedule,
    hook: &mut dyn FnMut(&Sample, &Configuration),
) -> Result<RunOutput> {
    let plan = RunPlan::new(params, schedule)?;
    let start = plan.phases[0].point;
    let chain = Chain::new(
        spec,
        start,
        params.cutoff_policy,
        params.rng_seed,
        params.initial_state,
    )?;
    drive(chain, &plan, params.rng_seed, hook)
}

/// As [`run`], continuing from a supplied configuration.
pub fn run_from(
    config: Configuration,
    params: &QmcParams,
    schedule: &Schedule,
    hook: &mut dyn FnMut(&Sample, &Configuration),
) -> Result<RunOutput> {
    let plan = RunPlan::new(params, schedule)?;
    let chain = Chain::from_configuration(
        config,
        plan.phases[0].point,
        params.cutoff_policy,
        params.rng_seed,
    )?;
    drive(chain, &plan, params.rng_seed, hook)
}

fn drive(
    mut chain: Chain,
    plan: &RunPlan,
    seed: u64,
    hook: &mut dyn FnMut(&Sample, &Configuration),
) -> Result<RunOutput> {
    let spec = chain.config().lattice;
    let beta = plan.phases.last().map_or(chain.config.beta, |p| p.point.beta());
    let mut series = ObservableSeries::new(seed, beta, spec.num_sites());
    let mut measurer = Measurer::new(&spec);
    chain.advance(plan, None, &mut measurer, &mut |c, s| {
        hook(&s, c.config());
        series.samples.push(s);
    })?;
    Ok(RunOutput {
        series,
        config: chain.into_config(),
    })
}

/// Seed a chain deep in one phase, then switch couplings and measure.
///
/// Stage 1 equilibrates at `seed_params` for its thermalization sweeps; the
/// interaction table is then rebuilt for the target couplings while keeping
/// the configuration, and `schedule` plus the target thermalization and
/// measurement follow.
pub fn seeded_run(
    spec: LatticeSpec,
    seed_params: &QmcParams,
    target_params: &QmcParams,
    schedule: &Schedule,
) -> Result<ObservableSeries> {
    if seed_params.temperature != target_params.temperature
        || seed_params.r0 != target_params.r0
        || seed_params.cutoff_policy != target_params.cutoff_policy
    {
        return Err(Error::Config(
            "seed and target must share temperature, R0 and cutoff policy".into(),
        ));
    }
    seed_params.validate()?;
    let mut stages = vec![Stage {
        overrides: PointOverride {
            rb: Some(seed_params.rb),
            delta: Some(seed_params.delta),
            temperature: None,
        },
        sweeps: seed_params.thermalization_sweeps,
    }];
    stages.extend(schedule.stages.iter().copied());
    let mut params = target_params.clone();
    params.initial_state = seed_params.initial_state;
    params.rng_seed = seed_params.rng_seed;
    let out = run(spec, &params, &Schedule { stages }, &mut |_, _| {})?;
    Ok(out.series)
}
