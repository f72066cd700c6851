//! Density-wave order parameters, densities and sample series.

mod stats;

pub use stats::{
    binder, binder_from_moments, binned_error, bimodality, histogram, BinnedError, Bimodality,
    Histogram, DEFAULT_DIP_THRESHOLD, DEFAULT_MIN_PEAK_FRACTION,
};

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lattice::{Boundary, LatticeSpec};
use crate::worldline::Configuration;

/// The three bulk density-wave orders and their momenta.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Order {
    Checkerboard,
    Striated,
    Star,
}

impl Order {
    pub const ALL: [Order; 3] = [Order::Checkerboard, Order::Striated, Order::Star];

    pub fn momentum(self) -> (f64, f64) {
        match self {
            Order::Checkerboard => (PI, PI),
            Order::Striated => (0.0, PI),
            Order::Star => (PI, FRAC_PI_2),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Order::Checkerboard => "checkerboard",
            Order::Striated => "striated",
            Order::Star => "star",
        }
    }

    /// Occupation of the ideal classical pattern of this order at `(x, y)`.
    pub fn ideal_occupation(self, x: usize, y: usize) -> bool {
        match self {
            Order::Checkerboard => (x + y) % 2 == 0,
            Order::Striated => x % 2 == 0 && y % 2 == 0,
            Order::Star => (x % 4 == 0 && y % 2 == 0) || (x % 4 == 2 && y % 2 == 1),
        }
    }

    pub fn ideal_pattern(self, spec: &LatticeSpec) -> Vec<bool> {
        (0..spec.num_sites())
            .map(|i| {
                let (x, y) = spec.coords(i);
                self.ideal_occupation(x, y)
            })
            .collect()
    }
}

/// Per-site complex weights so that `F = |Σ_j n_j w_j|`.
#[derive(Debug, Clone)]
pub struct FourierWeights {
    weights: Vec<Complex64>,
    sites: Vec<usize>,
}

impl FourierWeights {
    /// Symmetrized bulk weights `[e^{i(kx x + ky y)} + e^{i(ky x + kx y)}] / (2 N_a)`.
    pub fn bulk(spec: &LatticeSpec, k: (f64, f64)) -> Self {
        let n = spec.num_sites() as f64;
        let weights = (0..spec.num_sites())
            .map(|i| {
                let (x, y) = spec.coords(i);
                let (x, y) = (x as f64, y as f64);
                (Complex64::cis(k.0 * x + k.1 * y) + Complex64::cis(k.1 * x + k.0 * y)) / (2.0 * n)
            })
            .collect();
        Self {
            weights,
            sites: (0..spec.num_sites()).collect(),
        }
    }

    /// Weights restricted to the perimeter at momentum (π, π), normalized by `N_B`.
    pub fn boundary(spec: &LatticeSpec) -> Result<Self> {
        let sites = spec.boundary_sites()?;
        let nb = sites.len() as f64;
        let weights = sites
            .iter()
            .map(|&i| {
                let (x, y) = spec.coords(i);
                Complex64::cis(PI * (x + y) as f64) / nb
            })
            .collect();
        Ok(Self { weights, sites })
    }

    #[inline]
    pub fn evaluate(&self, snapshot: &[bool]) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (&site, w) in self.sites.iter().zip(&self.weights) {
            if snapshot[site] {
                acc += w;
            }
        }
        acc.norm()
    }
}

/// Symmetrized Fourier amplitude `|[F̃(kx,ky) + F̃(ky,kx)] / 2|` of a snapshot.
pub fn fourier_order(snapshot: &[bool], spec: &LatticeSpec, k: (f64, f64)) -> f64 {
    FourierWeights::bulk(spec, k).evaluate(snapshot)
}

/// Largest symmetrized amplitude over all translations of the snapshot by
/// `(a, b)` with `0 ≤ a, b < 4`.
///
/// The symmetrized `F(0, π)` of a perfect striated pattern vanishes for two of
/// its four translations; this variant identifies every translated copy of an
/// ordered pattern. A translation only multiplies each unsymmetrized component
/// by a phase, so the snapshot itself is never shifted.
pub fn translation_max_order(snapshot: &[bool], spec: &LatticeSpec, k: (f64, f64)) -> f64 {
    let n = spec.num_sites() as f64;
    let (mut a, mut b) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for (j, &occ) in snapshot.iter().enumerate() {
        if occ {
            let (x, y) = spec.coords(j);
            let (x, y) = (x as f64, y as f64);
            a += Complex64::cis(k.0 * x + k.1 * y);
            b += Complex64::cis(k.1 * x + k.0 * y);
        }
    }
    let mut best: f64 = 0.0;
    for sx in 0..4 {
        for sy in 0..4 {
            let (sx, sy) = (f64::from(sx), f64::from(sy));
            let v = a * Complex64::cis(k.0 * sx + k.1 * sy) + b * Complex64::cis(k.1 * sx + k.0 * sy);
            best = best.max(v.norm() / (2.0 * n));
        }
    }
    best
}

/// `|F̃_B(π, π)|` over the open-boundary perimeter.
pub fn boundary_order(snapshot: &[bool], spec: &LatticeSpec) -> Result<f64> {
    Ok(FourierWeights::boundary(spec)?.evaluate(snapshot))
}

/// Time-averaged Rydberg density from exact worldline integrals.
pub fn density(config: &Configuration) -> f64 {
    let total: f64 = config.lines.iter().map(|l| l.occupied_time(config.beta)).sum();
    total / (config.beta * config.num_sites() as f64)
}

/// Order whose amplitude is largest relative to its ideal-pattern amplitude.
///
/// Orders whose ideal pattern does not fit the lattice (zero amplitude) are
/// skipped. Returns `None` if no order fits.
pub fn dominant_order(spec: &LatticeSpec, means: &[(Order, f64)]) -> Option<(Order, f64)> {
    means
        .iter()
        .filter_map(|&(order, value)| {
            let ideal = fourier_order(&order.ideal_pattern(spec), spec, order.momentum());
            (ideal > 1e-12).then_some((order, value / ideal))
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
}

/// Slice-averaged moments `⟨|F|⟩, ⟨F²⟩, ⟨F⁴⟩` of one order parameter.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Moments {
    pub abs: f64,
    pub sq: f64,
    pub quart: f64,
}

impl Moments {
    fn accumulate(&mut self, f: f64) {
        let f2 = f * f;
        self.abs += f;
        self.sq += f2;
        self.quart += f2 * f2;
    }

    fn scale(&mut self, s: f64) {
        self.abs *= s;
        self.sq *= s;
        self.quart *= s;
    }
}

/// One measurement of a Markov chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub sweep: u64,
    pub checkerboard: Moments,
    pub striated: Moments,
    pub star: Moments,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Moments>,
    pub density: f64,
    /// Diagonal energy per site.
    pub diag_energy: f64,
    pub kink_count: u64,
}

impl Sample {
    pub fn order(&self, order: Order) -> &Moments {
        match order {
            Order::Checkerboard => &self.checkerboard,
            Order::Striated => &self.striated,
            Order::Star => &self.star,
        }
    }

    /// Total energy per site: diagonal part plus `-⟨kinks⟩ / (β N_a)`.
    pub fn energy(&self, beta: f64, num_sites: usize) -> f64 {
        self.diag_energy - self.kink_count as f64 / (beta * num_sites as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ObservableSeries {
    pub seed: u64,
    pub beta: f64,
    pub num_sites: usize,
    pub samples: Vec<Sample>,
}

impl ObservableSeries {
    pub fn new(seed: u64, beta: f64, num_sites: usize) -> Self {
        Self {
            seed,
            beta,
            num_sites,
            samples: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn column(&self, f: impl Fn(&Sample) -> f64) -> Vec<f64> {
        self.samples.iter().map(f).collect()
    }

    pub fn densities(&self) -> Vec<f64> {
        self.column(|s| s.density)
    }

    /// `(F², F⁴)` columns of one order, for Binder analysis.
    pub fn moment_columns(&self, order: Order) -> (Vec<f64>, Vec<f64>) {
        (
            self.column(|s| s.order(order).sq),
            self.column(|s| s.order(order).quart),
        )
    }

    pub fn boundary_columns(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        self.samples
            .iter()
            .map(|s| s.boundary.map(|b| (b.sq, b.quart)))
            .collect::<Option<Vec<_>>>()
            .map(|v| v.into_iter().unzip())
    }
}

/// Number of equal-time slices per measurement.
pub const DEFAULT_TIME_SLICES: usize = 8;

/// Precomputed weights for measuring a configuration.
#[derive(Debug, Clone)]
pub struct Measurer {
    orders: [FourierWeights; 3],
    boundary: Option<FourierWeights>,
    slices: usize,
    scratch: Vec<bool>,
}

impl Measurer {
    pub fn new(spec: &LatticeSpec) -> Self {
        Self::with_slices(spec, DEFAULT_TIME_SLICES)
    }

    pub fn with_slices(spec: &LatticeSpec, slices: usize) -> Self {
        let orders = Order::ALL.map(|o| FourierWeights::bulk(spec, o.momentum()));
        let boundary = match spec.boundary {
            Boundary::Obc => FourierWeights::boundary(spec).ok(),
            Boundary::Pbc => None,
        };
        Self {
            orders,
            boundary,
            slices: slices.max(1),
            scratch: Vec::with_capacity(spec.num_sites()),
        }
    }

    /// Measure order moments on evenly spaced slices; `diag_action` is `∫ H_0 dτ`.
    pub fn measure(&mut self, config: &Configuration, sweep: u64, diag_action: f64) -> Sample {
        let mut moments = [Moments::default(); 3];
        let mut boundary = self.boundary.as_ref().map(|_| Moments::default());
        for k in 0..self.slices {
            let tau = config.beta * k as f64 / self.slices as f64;
            config.snapshot_into(tau, &mut self.scratch);
            for (m, w) in moments.iter_mut().zip(&self.orders) {
                m.accumulate(w.evaluate(&self.scratch));
            }
            if let (Some(b), Some(w)) = (boundary.as_mut(), self.boundary.as_ref()) {
                b.accumulate(w.evaluate(&self.scratch));
            }
        }
        let inv = 1.0 / self.slices as f64;
        moments.iter_mut().for_each(|m| m.scale(inv));
        if let Some(b) = boundary.as_mut() {
            b.scale(inv);
        }
        let n = config.num_sites() as f64;
        Sample {
            sweep,
            checkerboard: moments[0],
            striated: moments[1],
            star: moments[2],
            boundary,
            density: density(config),
            diag_energy: diag_action / (config.beta * n),
            kink_count: config.total_kinks() as u64,
        }
    }
}
