//! Finite-size-scaling fits.
//!
//! Near a critical coupling `g_c` the Binder ratio is fitted to
//! `U4 = Σ_k a_k x^k` and the order parameter to `F = L^{-β/ν} Σ_k b_k x^k`,
//! both in the scaling variable `x = (g − g_c) L^{1/ν}`.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};

/// Polynomial order used unless a caller asks otherwise.
pub const DEFAULT_K: usize = 4;

/// Starting values for `ν` in the Binder fit.
pub const NU_STARTS: [f64; 4] = [0.5, 0.63, 0.8, 1.0];

const MIN_G_PER_SIZE: usize = 5;
const MAX_ITERATIONS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableKind {
    Binder,
    OrderParam,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    #[serde(rename = "L")]
    pub l: u32,
    pub g: f64,
    pub y: f64,
    pub y_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingDataset {
    pub kind: ObservableKind,
    pub rows: Vec<ScalingRow>,
    /// `c` in `T = c / L`, when the data were taken on that schedule.
    pub temperature_factor: Option<f64>,
}

impl ScalingDataset {
    pub fn new(kind: ObservableKind, rows: Vec<ScalingRow>) -> Result<Self> {
        let data = Self {
            kind,
            rows,
            temperature_factor: None,
        };
        data.validate()?;
        Ok(data)
    }

    pub fn with_temperature_factor(mut self, c: f64) -> Self {
        self.temperature_factor = Some(c);
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (n, row) in self.rows.iter().enumerate() {
            if row.l == 0 {
                return Err(Error::Validation(format!("row {n}: L must be positive")));
            }
            if !(row.g.is_finite() && row.y.is_finite()) {
                return Err(Error::Validation(format!("row {n}: non-finite g or y")));
            }
            if !(row.y_err > 0.0 && row.y_err.is_finite()) {
                return Err(Error::Validation(format!(
                    "row {n}: y_err must be positive, got {}",
                    row.y_err
                )));
            }
        }
        let sizes = self.sizes();
        if sizes.len() < 2 {
            return Err(Error::Validation(format!(
                "need at least 2 system sizes, got {sizes:?}; nu is unidentifiable"
            )));
        }
        for &l in &sizes {
            let gs: BTreeSet<u64> = self
                .rows
                .iter()
                .filter(|r| r.l == l)
                .map(|r| r.g.to_bits())
                .collect();
            if gs.len() < MIN_G_PER_SIZE {
                return Err(Error::Validation(format!(
                    "L = {l} has {} coupling values, need {MIN_G_PER_SIZE}",
                    gs.len()
                )));
            }
        }
        Ok(())
    }

    /// Distinct system sizes in ascending order.
    pub fn sizes(&self) -> Vec<u32> {
        let set: BTreeSet<u32> = self.rows.iter().map(|r| r.l).collect();
        set.into_iter().collect()
    }

    /// The dataset without sizes below `l_min`.
    pub fn restrict(&self, l_min: u32) -> Result<Self> {
        let rows: Vec<ScalingRow> = self.rows.iter().copied().filter(|r| r.l >= l_min).collect();
        let out = Self {
            kind: self.kind,
            rows,
            temperature_factor: self.temperature_factor,
        };
        out.validate().map_err(|e| match e {
            Error::Validation(m) => Error::Insufficient(format!("after L_min = {l_min}: {m}")),
            other => other,
        })?;
        Ok(out)
    }

    fn expect_kind(&self, kind: ObservableKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::Usage(format!(
                "expected a {kind:?} dataset, got {:?}",
                self.kind
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub kind: ObservableKind,
    pub g_c: f64,
    pub g_c_err: f64,
    pub nu: f64,
    pub nu_err: f64,
    pub beta: Option<f64>,
    pub beta_err: Option<f64>,
    /// `a_k` for Binder fits, `b_k` for order-parameter fits.
    pub coefficients: Vec<f64>,
    pub coefficient_errors: Vec<f64>,
    pub k: usize,
    pub l_min: u32,
    pub points: usize,
    pub chi2: f64,
    pub dof: usize,
    pub chi2_per_dof: f64,
}

/// `Σ_k a_k x^k` with `x = (g − g_c) L^{1/ν}`.
pub fn binder_ansatz(g: f64, l: u32, g_c: f64, nu: f64, a: &[f64]) -> f64 {
    polynomial(a, scaling_variable(g, l, g_c, nu))
}

/// `L^{-β/ν} Σ_k b_k x^k` with `x = (g − g_c) L^{1/ν}`.
pub fn order_ansatz(g: f64, l: u32, g_c: f64, nu: f64, beta: f64, b: &[f64]) -> f64 {
    f64::from(l).powf(-beta / nu) * polynomial(b, scaling_variable(g, l, g_c, nu))
}

pub fn scaling_variable(g: f64, l: u32, g_c: f64, nu: f64) -> f64 {
    (g - g_c) * f64::from(l).powf(1.0 / nu)
}

fn polynomial(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck)
}

fn polynomial_slope(c: &[f64], x: f64) -> f64 {
    c.iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (k, &ck)| acc * x + k as f64 * ck)
}

/// Weighted linear least squares: returns the solution, `χ²` and `(AᵀA)⁻¹`.
fn weighted_linear(design: &DMatrix<f64>, target: &DVector<f64>) -> Option<(DVector<f64>, f64, DMatrix<f64>)> {
    let svd = design.clone().svd(true, true);
    let coeffs = svd.solve(target, 1e-14).ok()?;
    let resid = design * &coeffs - target;
    let normal = design.transpose() * design;
    let cov = normal.pseudo_inverse(1e-300).ok()?;
    Some((coeffs, resid.norm_squared(), cov))
}

fn check_points(n: usize, params: usize) -> Result<()> {
    if n <= params {
        return Err(Error::Insufficient(format!(
            "{n} data points for {params} parameters"
        )));
    }
    Ok(())
}

/// Residuals `(model − y)/σ` and their Jacobian for `p = (g_c, ν, a_0..a_K)`.
fn binder_system(rows: &[ScalingRow], p: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
    let (g_c, nu, a) = (p[0], p[1], &p[2..]);
    let mut r = DVector::zeros(rows.len());
    let mut jac = DMatrix::zeros(rows.len(), p.len());
    for (n, row) in rows.iter().enumerate() {
        let lnl = f64::from(row.l).ln();
        let scale = (lnl / nu).exp();
        let x = (row.g - g_c) * scale;
        let w = 1.0 / row.y_err;
        r[n] = (polynomial(a, x) - row.y) * w;
        let slope = polynomial_slope(a, x);
        jac[(n, 0)] = -scale * slope * w;
        jac[(n, 1)] = -x * lnl / (nu * nu) * slope * w;
        let mut xk = 1.0;
        for k in 0..a.len() {
            jac[(n, 2 + k)] = xk * w;
            xk *= x;
        }
    }
    (r, jac)
}

fn binder_linear_start(rows: &[ScalingRow], g_c: f64, nu: f64, k: usize) -> Option<Vec<f64>> {
    let design = DMatrix::from_fn(rows.len(), k + 1, |n, j| {
        let row = &rows[n];
        scaling_variable(row.g, row.l, g_c, nu).powi(j as i32) / row.y_err
    });
    let target = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.y / r.y_err));
    let (a, _, _) = weighted_linear(&design, &target)?;
    let mut p = vec![g_c, nu];
    p.extend(a.iter());
    Some(p)
}

struct LmOutcome {
    params: Vec<f64>,
    chi2: f64,
    converged: bool,
}

/// Levenberg–Marquardt with Marquardt's diagonal scaling. `admissible`
/// rejects steps leaving the parameter domain.
fn levenberg_marquardt<F, A>(mut p: Vec<f64>, system: F, admissible: A) -> LmOutcome
where
    F: Fn(&[f64]) -> (DVector<f64>, DMatrix<f64>),
    A: Fn(&[f64]) -> bool,
{
    let (mut r, mut jac) = system(&p);
    let mut chi2 = r.norm_squared();
    if !chi2.is_finite() {
        return LmOutcome {
            params: p,
            chi2,
            converged: false,
        };
    }
    let mut lambda = 1e-3;
    for _ in 0..MAX_ITERATIONS {
        let jt = jac.transpose();
        let normal = &jt * &jac;
        let grad = &jt * &r;
        let mut damped = normal.clone();
        for i in 0..p.len() {
            damped[(i, i)] += lambda * normal[(i, i)].max(1e-300);
        }
        let step = match damped.clone().cholesky() {
            Some(ch) => ch.solve(&(-&grad)),
            None => match damped.svd(true, true).solve(&(-&grad), 1e-300) {
                Ok(s) => s,
                Err(_) => break,
            },
        };
        let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        let small_step = step
            .iter()
            .zip(&p)
            .all(|(d, x)| d.abs() <= 1e-13 * (x.abs() + 1e-13));
        if admissible(&trial) {
            let (tr, tj) = system(&trial);
            let trial_chi2 = tr.norm_squared();
            if trial_chi2.is_finite() && trial_chi2 <= chi2 {
                let gain = chi2 - trial_chi2;
                p = trial;
                r = tr;
                jac = tj;
                chi2 = trial_chi2;
                lambda = (lambda / 10.0).max(1e-15);
                if small_step || gain <= 1e-15 * chi2 + f64::MIN_POSITIVE {
                    return LmOutcome {
                        params: p,
                        chi2,
                        converged: true,
                    };
                }
                continue;
            }
        }
        if small_step {
            return LmOutcome {
                params: p,
                chi2,
                converged: true,
            };
        }
        lambda *= 10.0;
        if lambda > 1e16 {
            // No descent direction left at this precision.
            return LmOutcome {
                params: p,
                chi2,
                converged: true,
            };
        }
    }
    LmOutcome {
        params: p,
        chi2,
        converged: false,
    }
}

fn standard_errors(cov: &DMatrix<f64>) -> Vec<f64> {
    (0..cov.nrows()).map(|i| cov[(i, i)].max(0.0).sqrt()).collect()
}

fn unique_couplings(rows: &[ScalingRow]) -> Vec<f64> {
    let set: BTreeSet<u64> = rows.iter().map(|r| r.g.to_bits()).collect();
    let mut gs: Vec<f64> = set.into_iter().map(f64::from_bits).collect();
    gs.sort_by(f64::total_cmp);
    gs.dedup();
    gs
}

/// Fit `(g_c, ν, a_0..a_K)` to Binder-ratio data with `L ≥ l_min`.
pub fn fit_binder(data: &ScalingDataset, k: usize, l_min: u32) -> Result<FitResult> {
    data.expect_kind(ObservableKind::Binder)?;
    let data = data.restrict(l_min)?;
    let rows = &data.rows;
    let n_params = k + 3;
    check_points(rows.len(), n_params)?;

    let mut best: Option<LmOutcome> = None;
    let mut best_any = f64::INFINITY;
    for g_c in unique_couplings(rows) {
        for nu in NU_STARTS {
            let Some(start) = binder_linear_start(rows, g_c, nu, k) else {
                continue;
            };
            let out = levenberg_marquardt(start, |p| binder_system(rows, p), |p| {
                p[1] > 1e-3 && p[1] < 1e3 && p.iter().all(|v| v.is_finite())
            });
            if out.chi2.is_finite() {
                best_any = best_any.min(out.chi2);
            }
            if out.converged
                && out.chi2.is_finite()
                && best.as_ref().is_none_or(|b| out.chi2 < b.chi2)
            {
                best = Some(out);
            }
        }
    }
    let Some(best) = best else {
        return Err(Error::FitFailure {
            reason: "no start converged".into(),
            best_chi2: best_any,
        });
    };
    let p = best.params;
    let (_, jac) = binder_system(rows, &p);
    let cov = (jac.transpose() * &jac)
        .pseudo_inverse(1e-300)
        .map_err(|e| Error::FitFailure {
            reason: format!("singular covariance: {e}"),
            best_chi2: best.chi2,
        })?;
    let errs = standard_errors(&cov);
    let dof = rows.len() - n_params;
    if !(p[1] > 0.0) {
        return Err(Error::FitFailure {
            reason: format!("non-positive nu = {}", p[1]),
            best_chi2: best.chi2,
        });
    }
    Ok(FitResult {
        kind: ObservableKind::Binder,
        g_c: p[0],
        g_c_err: errs[0],
        nu: p[1],
        nu_err: errs[1],
        beta: None,
        beta_err: None,
        coefficients: p[2..].to_vec(),
        coefficient_errors: errs[2..].to_vec(),
        k,
        l_min,
        points: rows.len(),
        chi2: best.chi2,
        dof,
        chi2_per_dof: best.chi2 / dof as f64,
    })
}

/// Range of `β` scanned before refinement.
const BETA_SCAN: (f64, f64, usize) = (-1.0, 3.0, 401);

/// Fit `(β, b_0..b_K)` to order-parameter data at fixed `g_c` and `ν`.
pub fn fit_order(data: &ScalingDataset, g_c: f64, nu: f64, k: usize, l_min: u32) -> Result<FitResult> {
    data.expect_kind(ObservableKind::OrderParam)?;
    if !(nu > 0.0 && nu.is_finite() && g_c.is_finite()) {
        return Err(Error::Domain(format!("need finite g_c and nu > 0, got ({g_c}, {nu})")));
    }
    let mut data = data.restrict(l_min)?;
    // Canonical order makes the result independent of the input row order.
    data.rows.sort_by(|a, b| {
        a.l.cmp(&b.l)
            .then(a.g.total_cmp(&b.g))
            .then(a.y.total_cmp(&b.y))
            .then(a.y_err.total_cmp(&b.y_err))
    });
    let rows = &data.rows;
    let n_params = k + 2;
    check_points(rows.len(), n_params)?;

    let xs: Vec<f64> = rows.iter().map(|r| scaling_variable(r.g, r.l, g_c, nu)).collect();
    let target = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.y / r.y_err));
    let solve = |beta: f64| {
        let design = DMatrix::from_fn(rows.len(), k + 1, |n, j| {
            f64::from(rows[n].l).powf(-beta / nu) * xs[n].powi(j as i32) / rows[n].y_err
        });
        weighted_linear(&design, &target)
    };
    let chi2 = |beta: f64| solve(beta).map_or(f64::INFINITY, |s| s.1);

    let (lo, hi, n) = BETA_SCAN;
    let grid: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let values: Vec<f64> = grid.iter().map(|&b| chi2(b)).collect();
    let (imin, &vmin) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty scan");
    if !vmin.is_finite() {
        return Err(Error::FitFailure {
            reason: "linear solve failed for every beta".into(),
            best_chi2: vmin,
        });
    }
    if imin == 0 || imin == n - 1 {
        return Err(Error::FitFailure {
            reason: format!("beta minimum at scan edge {}", grid[imin]),
            best_chi2: vmin,
        });
    }
    let beta = golden_section(&chi2, grid[imin - 1], grid[imin + 1]);
    let (coeffs, best_chi2, cov) = solve(beta).ok_or_else(|| Error::FitFailure {
        reason: "linear solve failed at optimum".into(),
        best_chi2: vmin,
    })?;
    let h = 1e-4 * beta.abs().max(1.0);
    let curvature = (chi2(beta + h) - 2.0 * best_chi2 + chi2(beta - h)) / (h * h);
    let beta_err = if curvature > 0.0 {
        (2.0 / curvature).sqrt()
    } else {
        f64::INFINITY
    };
    let dof = rows.len() - n_params;
    Ok(FitResult {
        kind: ObservableKind::OrderParam,
        g_c,
        g_c_err: 0.0,
        nu,
        nu_err: 0.0,
        beta: Some(beta),
        beta_err: Some(beta_err),
        coefficients: coeffs.iter().copied().collect(),
        coefficient_errors: standard_errors(&cov),
        k,
        l_min,
        points: rows.len(),
        chi2: best_chi2,
        dof,
        chi2_per_dof: best_chi2 / dof as f64,
    })
}

fn golden_section<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-14 * (a.abs() + b.abs()).max(1e-300) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        c
    } else {
        d
    }
}

/// Quality of the data collapse in `x = (g − g_c) L^{1/ν}`,
/// `y = F L^{β/ν}` (or `y` unchanged when `beta` is `None`).
///
/// Points in the x-range shared by all sizes are pooled and fitted by a
/// polynomial of degree up to [`DEFAULT_K`]; the score is the mean squared
/// residual divided by the variance of the pooled `y`.
pub fn collapse_score(data: &ScalingDataset, g_c: f64, nu: f64, beta: Option<f64>) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(Error::Domain(format!("nu must be positive, got {nu}")));
    }
    let points: Vec<(u32, f64, f64)> = data
        .rows
        .iter()
        .map(|r| {
            let x = scaling_variable(r.g, r.l, g_c, nu);
            let y = match beta {
                Some(b) => r.y * f64::from(r.l).powf(b / nu),
                None => r.y,
            };
            (r.l, x, y)
        })
        .collect();
    let sizes = data.sizes();
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for &l in &sizes {
        let xs = points.iter().filter(|p| p.0 == l).map(|p| p.1);
        let (mn, mx) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
        lo = lo.max(mn);
        hi = hi.min(mx);
    }
    let pooled: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.1 >= lo && p.1 <= hi)
        .map(|p| (p.1, p.2))
        .collect();
    if pooled.len() < 3 || !(hi > lo) {
        return Err(Error::Insufficient(format!(
            "{} points in the shared x-range",
            pooled.len()
        )));
    }
    let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    let degree = DEFAULT_K.min(pooled.len() - 2);
    let design = DMatrix::from_fn(pooled.len(), degree + 1, |n, j| {
        ((pooled[n].0 - mid) / half).powi(j as i32)
    });
    let target = DVector::from_iterator(pooled.len(), pooled.iter().map(|p| p.1));
    let (_, ss, _) = weighted_linear(&design, &target).ok_or_else(|| {
        Error::Insufficient("reference curve could not be fitted".into())
    })?;
    let m = pooled.len() as f64;
    let mean = pooled.iter().map(|p| p.1).sum::<f64>() / m;
    let var = pooled.iter().map(|p| (p.1 - mean).powi(2)).sum::<f64>() / m;
    let msd = ss / m;
    if var > 0.0 {
        Ok(msd / var)
    } else if msd == 0.0 {
        Ok(0.0)
    } else {
        Err(Error::UndefinedRatio("pooled y has zero variance".into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub mean: f64,
    pub std: f64,
}

impl Spread {
    fn of(xs: &[f64]) -> Option<Self> {
        if xs.len() < 2 {
            return None;
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Some(Self { mean, std: var.sqrt() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub replicas: usize,
    pub failures: usize,
    pub g_c: Option<Spread>,
    pub nu: Option<Spread>,
    pub beta: Option<Spread>,
}

/// Refit `replicas` datasets whose rows are resampled with replacement
/// within each system size.
pub fn bootstrap<F>(
    data: &ScalingDataset,
    replicas: usize,
    seed: u64,
    execution: Execution,
    fit: F,
) -> BootstrapSummary
where
    F: Fn(&ScalingDataset) -> Result<FitResult> + Sync + Send,
{
    let sizes = data.sizes();
    let groups: Vec<Vec<ScalingRow>> = sizes
        .iter()
        .map(|&l| data.rows.iter().copied().filter(|r| r.l == l).collect())
        .collect();
    let fits = exec::map_range(execution, replicas, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let rows = groups
            .iter()
            .flat_map(|g| {
                (0..g.len())
                    .map(|_| g[rng.random_range(0..g.len())])
                    .collect::<Vec<_>>()
            })
            .collect();
        let replica = ScalingDataset {
            kind: data.kind,
            rows,
            temperature_factor: data.temperature_factor,
        };
        fit(&replica).ok()
    });
    let ok: Vec<FitResult> = fits.into_iter().flatten().collect();
    let pick = |f: &dyn Fn(&FitResult) -> Option<f64>| {
        let xs: Vec<f64> = ok.iter().filter_map(f).collect();
        Spread::of(&xs)
    };
    BootstrapSummary {
        replicas,
        failures: replicas - ok.len(),
        g_c: pick(&|r| Some(r.g_c)),
        nu: pick(&|r| Some(r.nu)),
        beta: pick(&|r| r.beta),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(kind: ObservableKind, f: impl Fn(f64, u32) -> f64) -> ScalingDataset {
        let mut rows = Vec::new();
        for l in [8, 12, 16] {
            for i in 0..9 {
                let g = 0.9 + 0.025 * i as f64;
                rows.push(ScalingRow { l, g, y: f(g, l), y_err: 1e-3 });
            }
        }
        ScalingDataset::new(kind, rows).unwrap()
    }

    #[test]
    fn polynomial_helpers() {
        let c = [1.0, -2.0, 0.5];
        assert_eq!(polynomial(&c, 2.0), 1.0 - 4.0 + 2.0);
        assert_eq!(polynomial_slope(&c, 2.0), -2.0 + 2.0);
        assert_eq!(polynomial(&[], 3.0), 0.0);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let a = [0.6, 0.1, -0.02, 0.003];
        let data = grid(ObservableKind::Binder, |g, l| binder_ansatz(g, l, 1.0, 0.7, &a) + 0.01);
        let p = vec![0.98, 0.75, 0.5, 0.12, -0.01, 0.002];
        let (r0, jac) = binder_system(&data.rows, &p);
        for j in 0..p.len() {
            let h = 1e-6 * p[j].abs().max(1.0);
            let (mut up, mut down) = (p.clone(), p.clone());
            up[j] += h;
            down[j] -= h;
            let (r1, _) = binder_system(&data.rows, &up);
            let (r2, _) = binder_system(&data.rows, &down);
            for n in 0..r0.len() {
                let fd = (r1[n] - r2[n]) / (2.0 * h);
                assert!((fd - jac[(n, j)]).abs() <= 1e-4 * (1.0 + fd.abs()), "param {j} row {n}: {fd} vs {}", jac[(n, j)]);
            }
        }
    }

    #[test]
    fn validation() {
        let row = |l, g| ScalingRow { l, g, y: 0.5, y_err: 0.01 };
        let five = |l| (0..5).map(move |i| row(l, i as f64));
        let ok: Vec<_> = five(8).chain(five(12)).collect();
        assert!(ScalingDataset::new(ObservableKind::Binder, ok.clone()).is_ok());
        let single: Vec<_> = five(8).collect();
        assert!(ScalingDataset::new(ObservableKind::Binder, single).is_err());
        let mut bad = ok.clone();
        bad[3].y_err = 0.0;
        assert!(ScalingDataset::new(ObservableKind::Binder, bad).is_err());
        let four: Vec<_> = five(8).chain(five(12).take(4)).collect();
        assert!(ScalingDataset::new(ObservableKind::Binder, four).is_err());
        let d = ScalingDataset::new(ObservableKind::Binder, ok).unwrap();
        assert!(matches!(d.restrict(12), Err(Error::Insufficient(_))));
        assert!(matches!(fit_binder(&d, 2, 10), Err(Error::Insufficient(_))));
        assert!(matches!(fit_order(&d, 1.0, 0.7, 2, 0), Err(Error::Usage(_))));
    }

    #[test]
    fn collapse_needs_overlap() {
        let mut rows = Vec::new();
        for i in 0..5 {
            rows.push(ScalingRow { l: 8, g: i as f64, y: 1.0, y_err: 1.0 });
            rows.push(ScalingRow { l: 12, g: 10.0 + i as f64, y: 1.0, y_err: 1.0 });
        }
        let d = ScalingDataset::new(ObservableKind::Binder, rows).unwrap();
        assert!(matches!(collapse_score(&d, 0.0, 1.0, None), Err(Error::Insufficient(_))));
    }
}
