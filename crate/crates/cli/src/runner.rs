//! Chain orchestration for `run` and `sweep`.

use std::fs::{self, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rydberg_core::engine::{Chain, RunPlan};
use rydberg_core::exec::{self, Execution};
use rydberg_core::observables::Measurer;

use crate::analysis::{summarize, write_rows, PointData};
use crate::config::{Point, RunConfig};
use crate::records::{
    params_hash, truncate_samples, write_atomic, Checkpoint, PointRecord, SampleRecord, CHECKPOINT_FILE,
    CHECKPOINT_VERSION, POINT_FILE, SAMPLES_FILE,
};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Continue chains from the checkpoints found in the output directory.
    pub resume: bool,
    /// Stop every chain after this many sweeps in total, leaving a checkpoint.
    pub max_sweeps: Option<u64>,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub points: usize,
    pub chains: usize,
    pub failures: Vec<String>,
    pub summary: PathBuf,
}

pub fn point_dir(out: &Path, p: &Point) -> PathBuf {
    out.join(format!("point-{:03}", p.index))
}

pub fn seed_dir(out: &Path, p: &Point, seed: u64) -> PathBuf {
    point_dir(out, p).join(format!("seed-{seed}"))
}

/// Run every `(point, seed)` chain of `config` and write `summary.csv`.
pub fn execute(config: &RunConfig, out: &Path, opts: &RunOptions) -> Result<RunReport> {
    let points = config.points()?;
    fs::create_dir_all(out).with_context(|| format!("cannot create output directory {}", out.display()))?;
    let probe = out.join(".write-test");
    fs::write(&probe, b"").with_context(|| format!("output directory {} is not writable", out.display()))?;
    fs::remove_file(&probe)?;

    for p in &points {
        let dir = point_dir(out, p);
        fs::create_dir_all(&dir)?;
        let record = PointRecord {
            params_hash: params_hash(p),
            point: p.clone(),
        };
        write_atomic(&dir.join(POINT_FILE), serde_json::to_string_pretty(&record)?.as_bytes())?;
    }

    let tasks: Vec<(usize, u64)> = points
        .iter()
        .flat_map(|p| config.engine.seeds.iter().map(move |&s| (p.index, s)))
        .collect();
    let results = exec::with_workers(opts.workers, || {
        exec::map(Execution::default(), &tasks, |&(k, seed)| {
            let r = run_chain(config, &points[k], seed, out, opts);
            match &r {
                Ok(n) => eprintln!("point {k} seed {seed}: {n} samples"),
                Err(e) => eprintln!("point {k} seed {seed}: failed: {e:#}"),
            }
            r.map_err(|e| format!("point {k} seed {seed}: {e:#}"))
        })
    })?;
    let failures: Vec<String> = results.into_iter().filter_map(|r| r.err()).collect();

    let mut rows = Vec::new();
    for p in &points {
        let data = PointData::load(&point_dir(out, p))?;
        if data.num_samples() > 0 {
            rows.push(summarize(&data));
        }
    }
    let summary = out.join("summary.csv");
    write_rows(&summary, &rows)?;
    Ok(RunReport {
        points: points.len(),
        chains: tasks.len(),
        failures,
        summary,
    })
}

/// Run or continue one chain; returns the number of samples on disk.
fn run_chain(config: &RunConfig, point: &Point, seed: u64, out: &Path, opts: &RunOptions) -> Result<u64> {
    let dir = seed_dir(out, point, seed);
    fs::create_dir_all(&dir)?;
    let samples_path = dir.join(SAMPLES_FILE);
    let ckpt_path = dir.join(CHECKPOINT_FILE);
    let hash = params_hash(point);
    let params = point.with_seed(seed);
    let plan = RunPlan::new(&params, &point.schedule)?;

    let (mut chain, mut written) = if opts.resume && ckpt_path.exists() {
        let ck = Checkpoint::load(&ckpt_path)?;
        if ck.params_hash != hash || ck.seed != seed {
            bail!(
                "checkpoint {} belongs to parameters {} seed {}, expected {hash} seed {seed}",
                ckpt_path.display(),
                ck.params_hash,
                ck.seed
            );
        }
        truncate_samples(&samples_path, ck.samples_written)?;
        if ck.complete {
            return Ok(ck.samples_written);
        }
        (Chain::from_state(ck.state)?, ck.samples_written)
    } else {
        if samples_path.exists() {
            fs::remove_file(&samples_path)?;
        }
        let chain = Chain::new(
            point.lattice,
            plan.phases[0].point,
            params.cutoff_policy,
            seed,
            params.initial_state,
        )?;
        (chain, 0)
    };

    let total = plan.total_sweeps();
    let stop = opts.max_sweeps.map_or(total, |m| m.min(total));
    let every = config.engine.checkpoint_every.unwrap_or(total.max(1));
    let mut measurer = Measurer::new(&point.lattice);
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&samples_path)
        .with_context(|| format!("cannot write {}", samples_path.display()))?;
    let mut sink = BufWriter::new(file);
    loop {
        let until = (chain.sweeps_done() / every + 1).saturating_mul(every).min(stop);
        if until > chain.sweeps_done() {
            let mut io_error = None;
            chain.advance(&plan, Some(until), &mut measurer, &mut |_, s| {
                if io_error.is_some() {
                    return;
                }
                let line = serde_json::to_string(&SampleRecord::new(&s, seed, &hash)).expect("record serializes");
                if let Err(e) = writeln!(sink, "{line}") {
                    io_error = Some(e);
                }
                written += 1;
            })?;
            if let Some(e) = io_error {
                return Err(e).context(format!("cannot write {}", samples_path.display()));
            }
        }
        sink.flush()?;
        let done = chain.sweeps_done() >= total;
        Checkpoint {
            version: CHECKPOINT_VERSION,
            params_hash: hash.clone(),
            seed,
            config: config.clone(),
            point: point.clone(),
            samples_written: written,
            complete: done,
            state: chain.state(),
        }
        .save(&ckpt_path)?;
        if chain.sweeps_done() >= stop {
            return Ok(written);
        }
    }
}
