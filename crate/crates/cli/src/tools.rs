//! File-level wrappers for scaling fits, data collapse, Landau maps and the exact oracle.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rydberg_core::exec::Execution;
use rydberg_core::lattice::LatticeSpec;
use rydberg_core::lgw::{phase_diagram, tricritical_points, GridAxis, LgwCouplings, TricriticalPoints};
use rydberg_core::oracle::{self, OrderExpectation};
use rydberg_core::scaling::{
    bootstrap, collapse_score, fit_binder, fit_order, BootstrapSummary, FitResult, ObservableKind, ScalingDataset,
    ScalingRow,
};
use serde::{Deserialize, Serialize};

/// Read a `L,g,y,y_err` CSV; errors carry the line number.
pub fn read_dataset(path: &Path, kind: ObservableKind) -> Result<ScalingDataset> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut rows = Vec::new();
    for rec in rdr.deserialize::<ScalingRow>() {
        let row = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            anyhow::anyhow!("{}:{line}: {e}", path.display())
        })?;
        let line = rows.len() + 2;
        if row.l == 0 || !(row.g.is_finite() && row.y.is_finite()) {
            bail!("{}:{line}: L must be positive and g, y finite", path.display());
        }
        if !(row.y_err > 0.0 && row.y_err.is_finite()) {
            bail!("{}:{line}: y_err must be positive, got {}", path.display(), row.y_err);
        }
        rows.push(row);
    }
    ScalingDataset::new(kind, rows).with_context(|| format!("invalid dataset {}", path.display()))
}

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    #[serde(flatten)]
    pub fit: FitResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<BootstrapSummary>,
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub k: usize,
    pub l_min: u32,
    /// Required for order-parameter fits.
    pub g_c: Option<f64>,
    pub nu: Option<f64>,
    pub bootstrap: usize,
    pub seed: u64,
}

pub fn fit(data: &ScalingDataset, o: FitOptions) -> Result<FitReport> {
    let run = |d: &ScalingDataset| match d.kind {
        ObservableKind::Binder => fit_binder(d, o.k, o.l_min),
        ObservableKind::OrderParam => fit_order(d, o.g_c.unwrap_or(f64::NAN), o.nu.unwrap_or(f64::NAN), o.k, o.l_min),
    };
    if data.kind == ObservableKind::OrderParam && (o.g_c.is_none() || o.nu.is_none()) {
        bail!("order-parameter fits need --g-c and --nu (from a Binder fit)");
    }
    let fit = run(data)?;
    let bootstrap = (o.bootstrap > 0).then(|| bootstrap(data, o.bootstrap, o.seed, Execution::default(), run));
    Ok(FitReport { fit, bootstrap })
}

#[derive(Debug, Clone, Serialize)]
pub struct CollapseReport {
    pub g_c: f64,
    pub nu: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub score: f64,
}

pub fn collapse(data: &ScalingDataset, g_c: f64, nu: f64, beta: Option<f64>) -> Result<CollapseReport> {
    Ok(CollapseReport {
        g_c,
        nu,
        beta,
        score: collapse_score(data, g_c, nu, beta)?,
    })
}

/// Landau map settings; every key is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LgwConfig {
    #[serde(default = "reference")]
    pub couplings: Couplings,
    #[serde(default)]
    pub grid: Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Couplings {
    pub g: f64,
    pub u1: f64,
    pub u2: f64,
    pub v: f64,
    pub w: f64,
}

fn reference() -> Couplings {
    let c = LgwCouplings::reference();
    Couplings {
        g: c.g,
        u1: c.u1,
        u2: c.u2,
        v: c.v,
        w: c.w,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub r_min: f64,
    pub r_max: f64,
    pub r_points: usize,
    pub s_min: f64,
    pub s_max: f64,
    pub s_points: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            r_min: -0.2,
            r_max: 0.6,
            r_points: 200,
            s_min: -0.4,
            s_max: 0.4,
            s_points: 200,
        }
    }
}

impl Default for LgwConfig {
    fn default() -> Self {
        Self {
            couplings: reference(),
            grid: Grid::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LgwSummary {
    pub labels: Vec<String>,
    pub cells: usize,
    pub first_order_edges: usize,
    pub tricritical: Option<TricriticalPoints>,
}

/// Write `phase_map.csv` and `tricritical.json` into `out`.
pub fn lgw(cfg: &LgwConfig, out: &Path) -> Result<LgwSummary> {
    let c = LgwCouplings {
        r: 0.0,
        s: 0.0,
        g: cfg.couplings.g,
        u1: cfg.couplings.u1,
        u2: cfg.couplings.u2,
        v: cfg.couplings.v,
        w: cfg.couplings.w,
    };
    let g = cfg.grid;
    let d = phase_diagram(
        &c,
        GridAxis::new(g.r_min, g.r_max, g.r_points)?,
        GridAxis::new(g.s_min, g.s_max, g.s_points)?,
        Execution::default(),
    )?;
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let path = out.join("phase_map.csv");
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(["r", "s", "phase_label", "psi1", "psi2", "phi", "V", "order_flag"])?;
    for cell in &d.cells {
        w.write_record([
            cell.r.to_string(),
            cell.s.to_string(),
            cell.phase.name().to_string(),
            cell.field.psi1.to_string(),
            cell.field.psi2.to_string(),
            cell.field.phi.to_string(),
            cell.value.to_string(),
            cell.flag.name().to_string(),
        ])?;
    }
    w.flush()?;
    // the closed forms need g != 0 and u2 > 0
    let tricritical = tricritical_points(&c).ok();
    fs::write(out.join("tricritical.json"), serde_json::to_string_pretty(&tricritical)?)?;
    Ok(LgwSummary {
        labels: d.labels().iter().map(|l| l.name().to_string()).collect(),
        cells: d.cells.len(),
        first_order_edges: d.boundaries.first_order_segments(g.r_points).iter().map(Vec::len).sum(),
        tricritical,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct OracleParams {
    pub lattice: LatticeSpec,
    pub rb: f64,
    pub r0: f64,
    pub delta: f64,
    pub beta: f64,
}

/// Exact thermal expectations as an `observable,value` CSV.
pub fn oracle_csv(p: OracleParams, out: &Path) -> Result<()> {
    let t = oracle::solve(&p.lattice, p.rb, p.r0, p.delta, p.beta)?;
    let mut w = csv::Writer::from_path(out).with_context(|| format!("cannot write {}", out.display()))?;
    w.write_record(["observable", "value"])?;
    let mut put = |k: &str, v: f64| w.write_record([k.to_string(), v.to_string()]);
    put("lx", p.lattice.lx as f64)?;
    put("ly", p.lattice.ly as f64)?;
    put("rb", p.rb)?;
    put("r0", p.r0)?;
    put("delta", p.delta)?;
    put("beta", p.beta)?;
    put("density", t.density)?;
    put("energy", t.energy)?;
    put("diag_energy", t.diag_energy)?;
    let mut order = |name: &str, o: &OrderExpectation| -> csv::Result<()> {
        put(&format!("{name}_abs"), o.f_abs)?;
        put(&format!("{name}_f2"), o.f2)?;
        put(&format!("{name}_f4"), o.f4)?;
        put(&format!("{name}_u4"), o.u4)
    };
    for o in &t.orders {
        order(o.order.name(), o)?;
    }
    if let Some(b) = &t.boundary {
        order("boundary", b)?;
    }
    w.flush()?;
    Ok(())
}
