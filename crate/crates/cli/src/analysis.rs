//! Summaries, histograms and bimodality reports over run directories.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rydberg_core::lattice::Boundary;
use rydberg_core::observables::{
    bimodality, binder_from_moments, binned_error, histogram, Bimodality, Histogram, Moments, Order, Sample,
};
use serde::Serialize;

use crate::records::{read_samples, PointRecord, CHECKPOINT_FILE, POINT_FILE, SAMPLES_FILE};

/// All seeds of one parameter point.
#[derive(Debug, Clone)]
pub struct PointData {
    pub dir: PathBuf,
    pub record: PointRecord,
    pub seeds: Vec<(u64, Vec<Sample>)>,
}

impl PointData {
    /// Read `point.json` and every `seed-*/samples.jsonl` below `dir`.
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(POINT_FILE);
        let text = fs::read_to_string(&path).with_context(|| format!("cannot read {}", path.display()))?;
        let record: PointRecord =
            serde_json::from_str(&text).with_context(|| format!("malformed {}", path.display()))?;
        let mut seeds = Vec::new();
        for entry in sorted_entries(dir)? {
            let samples = entry.join(SAMPLES_FILE);
            if !entry.is_dir() || !samples.exists() {
                continue;
            }
            let records = read_samples(&samples)?;
            let mut seed = None;
            for r in &records {
                if r.params_hash != record.params_hash {
                    bail!("{}: sample from a different parameter set ({})", samples.display(), r.params_hash);
                }
                if *seed.get_or_insert(r.seed) != r.seed {
                    bail!("{}: mixed seeds in one file", samples.display());
                }
            }
            if let Some(seed) = seed {
                seeds.push((seed, records.into_iter().map(|r| r.into_sample()).collect()));
            }
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            record,
            seeds,
        })
    }

    pub fn num_samples(&self) -> usize {
        self.seeds.iter().map(|s| s.1.len()).sum()
    }

    fn pooled(&self) -> impl Iterator<Item = &Sample> {
        self.seeds.iter().flat_map(|s| s.1.iter())
    }

    fn column(&self, f: impl Fn(&Sample) -> f64) -> Vec<f64> {
        self.pooled().map(f).collect()
    }

    /// Chains whose checkpoint marks them finished.
    pub fn complete_chains(&self) -> usize {
        sorted_entries(&self.dir)
            .unwrap_or_default()
            .iter()
            .filter(|d| {
                fs::read_to_string(d.join(CHECKPOINT_FILE))
                    .ok()
                    .and_then(|t| serde_json::from_str::<serde_json::Value>(&t).ok())
                    .and_then(|v| v.get("complete").and_then(|c| c.as_bool()))
                    .unwrap_or(false)
            })
            .count()
    }
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("cannot list {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    out.sort();
    Ok(out)
}

/// Every point directory below `root`, in path order.
pub fn discover(root: &Path) -> Result<Vec<PathBuf>> {
    if !root.is_dir() {
        bail!("{} is not a directory", root.display());
    }
    let mut found = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        if dir.join(POINT_FILE).is_file() {
            found.push(dir);
            continue;
        }
        for e in sorted_entries(&dir)? {
            if e.is_dir() {
                stack.push(e);
            }
        }
    }
    found.sort();
    Ok(found)
}

/// Ordered `(column, value)` pairs of one CSV row.
pub type Row = Vec<(String, String)>;

fn push(row: &mut Row, name: impl Into<String>, value: impl ToString) {
    row.push((name.into(), value.to_string()));
}

/// Mean and binned error, or an empty error cell for short series.
fn push_stat(row: &mut Row, name: &str, series: &[f64]) {
    let mean = if series.is_empty() {
        String::new()
    } else {
        (series.iter().sum::<f64>() / series.len() as f64).to_string()
    };
    let err = binned_error(series).map(|e| e.stderr.to_string()).unwrap_or_default();
    push(row, name, mean);
    push(row, format!("{name}_err"), err);
}

fn push_moments(row: &mut Row, prefix: &str, moments: &[Moments]) {
    let abs: Vec<f64> = moments.iter().map(|m| m.abs).collect();
    let f2: Vec<f64> = moments.iter().map(|m| m.sq).collect();
    let f4: Vec<f64> = moments.iter().map(|m| m.quart).collect();
    push_stat(row, &format!("{prefix}_abs"), &abs);
    // sqrt⟨F²⟩ with a propagated error
    let (rms, rms_err) = match binned_error(&f2) {
        Ok(e) if e.mean > 0.0 => (e.mean.sqrt().to_string(), (e.stderr / (2.0 * e.mean.sqrt())).to_string()),
        _ => (String::new(), String::new()),
    };
    push(row, format!("{prefix}_rms"), rms);
    push(row, format!("{prefix}_rms_err"), rms_err);
    let (u4, u4_err) = match binder_from_moments(&f2, &f4) {
        Ok((u, e)) => (u.to_string(), e.to_string()),
        Err(_) => (String::new(), String::new()),
    };
    push(row, format!("{prefix}_u4"), u4);
    push(row, format!("{prefix}_u4_err"), u4_err);
}

/// One summary row: coordinates, then means and errors pooled over seeds.
pub fn summarize(p: &PointData) -> Row {
    let pt = &p.record.point;
    let beta = 1.0 / pt.params.temperature;
    let n = pt.lattice.num_sites();
    let mut row = Row::new();
    push(&mut row, "point", pt.index);
    push(&mut row, "params_hash", &p.record.params_hash);
    push(&mut row, "lx", pt.lattice.lx);
    push(&mut row, "ly", pt.lattice.ly);
    push(
        &mut row,
        "boundary",
        match pt.lattice.boundary {
            Boundary::Pbc => "pbc",
            Boundary::Obc => "obc",
        },
    );
    push(&mut row, "rb", pt.params.rb);
    push(&mut row, "delta", pt.params.delta);
    push(&mut row, "r0", pt.params.r0);
    push(&mut row, "temperature", pt.params.temperature);
    push(&mut row, "seeds", p.seeds.len());
    push(&mut row, "complete_chains", p.complete_chains());
    push(&mut row, "samples", p.num_samples());
    push_stat(&mut row, "density", &p.column(|s| s.density));
    push_stat(&mut row, "energy", &p.column(|s| s.energy(beta, n)));
    for o in Order::ALL {
        let m: Vec<Moments> = p.pooled().map(|s| *s.order(o)).collect();
        push_moments(&mut row, o.name(), &m);
    }
    let b: Vec<Moments> = p.pooled().filter_map(|s| s.boundary).collect();
    push_moments(&mut row, "boundary", &b);
    row
}

#[derive(Debug, Clone, Serialize)]
pub struct BimodalityReport {
    pub point: usize,
    pub params_hash: String,
    pub delta: f64,
    pub rb: f64,
    pub block: usize,
    pub measurements: usize,
    pub is_bimodal: bool,
    pub dip_score: f64,
    pub significance: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct HistogramOptions {
    pub bins: usize,
    /// Consecutive samples of one seed averaged into one measurement.
    pub block: usize,
    pub dip_threshold: f64,
    pub min_peak_fraction: f64,
}

/// Density histogram over block-averaged samples of all seeds.
pub fn density_histogram(p: &PointData, opts: HistogramOptions) -> Result<(Histogram, Bimodality, usize)> {
    if opts.block == 0 {
        bail!("block size must be at least 1");
    }
    let values: Vec<f64> = p
        .seeds
        .iter()
        .flat_map(|(_, s)| {
            s.chunks_exact(opts.block)
                .map(|c| c.iter().map(|x| x.density).sum::<f64>() / c.len() as f64)
                .collect::<Vec<_>>()
        })
        .collect();
    let hist = histogram(&values, opts.bins).with_context(|| format!("point {}", p.record.point.index))?;
    let b = bimodality(&hist, opts.dip_threshold, opts.min_peak_fraction);
    Ok((hist, b, values.len()))
}

pub fn write_rows(path: &Path, rows: &[Row]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    if let Some(first) = rows.first() {
        w.write_record(first.iter().map(|c| c.0.as_str()))?;
    }
    for r in rows {
        w.write_record(r.iter().map(|c| c.1.as_str()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_histogram(path: &Path, h: &Histogram) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(["bin_left", "bin_right", "count"])?;
    for k in 0..h.counts.len() {
        w.write_record([h.left[k].to_string(), h.right[k].to_string(), h.counts[k].to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `rydberg analyze`: summary, histograms and bimodality for every point below `root`.
pub fn analyze(root: &Path, out: &Path, opts: HistogramOptions) -> Result<Vec<BimodalityReport>> {
    let dirs = discover(root)?;
    if dirs.is_empty() {
        bail!("no run output found in {}", root.display());
    }
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for d in dirs {
        let p = PointData::load(&d)?;
        if p.num_samples() == 0 {
            bail!("{} holds no samples", d.display());
        }
        let mut row = summarize(&p);
        let (hist, b, measurements) = density_histogram(&p, opts)?;
        let idx = p.record.point.index;
        write_histogram(&out.join(format!("histogram-point-{idx:03}.csv")), &hist)?;
        push(&mut row, "dip_score", b.dip_score);
        push(&mut row, "dip_significance", b.significance());
        push(&mut row, "bimodal", b.is_bimodal);
        rows.push(row);
        reports.push(BimodalityReport {
            point: idx,
            params_hash: p.record.params_hash.clone(),
            delta: p.record.point.params.delta,
            rb: p.record.point.params.rb,
            block: opts.block,
            measurements,
            is_bimodal: b.is_bimodal,
            dip_score: b.dip_score,
            significance: b.significance(),
        });
    }
    write_rows(&out.join("analysis.csv"), &rows)?;
    fs::write(out.join("bimodality.json"), serde_json::to_string_pretty(&reports)?)?;
    Ok(reports)
}
