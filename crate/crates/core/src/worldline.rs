//! Continuous imaginary-time worldlines.
//!
//! A worldline is the occupation `n(τ)` of one site on `[0, β)`, stored as
//! its value at `τ = 0` plus the sorted times at which it flips. The value
//! at a kink time is the post-kink value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Worldline {
    pub spin0: bool,
    pub kinks: Vec<f64>,
}

impl Worldline {
    pub fn constant(occupied: bool) -> Self {
        Self {
            spin0: occupied,
            kinks: Vec::new(),
        }
    }

    pub fn new(spin0: bool, kinks: Vec<f64>) -> Self {
        Self { spin0, kinks }
    }

    pub fn validate(&self, beta: f64) -> Result<()> {
        if self.kinks.len() % 2 != 0 {
            return Err(Error::Validation(format!(
                "odd kink count {}",
                self.kinks.len()
            )));
        }
        if let Some(&first) = self.kinks.first() {
            if first < 0.0 {
                return Err(Error::Validation(format!("kink at negative time {first}")));
            }
        }
        if let Some(&last) = self.kinks.last() {
            if last >= beta {
                return Err(Error::Validation(format!("kink at {last} >= beta {beta}")));
            }
        }
        if self.kinks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation("kink times not strictly increasing".into()));
        }
        Ok(())
    }

    /// Occupation at `tau`, without range checks.
    #[inline]
    pub fn value_at(&self, tau: f64) -> bool {
        let passed = self.kinks.partition_point(|&k| k <= tau);
        self.spin0 ^ (passed % 2 == 1)
    }

    pub fn occupation_at(&self, beta: f64, tau: f64) -> Result<bool> {
        if !(0.0..beta).contains(&tau) {
            return Err(Error::Domain(format!("tau={tau} outside [0, {beta})")));
        }
        Ok(self.value_at(tau))
    }

    /// Total occupied time on `[0, beta)`.
    pub fn occupied_time(&self, beta: f64) -> f64 {
        let mut total = 0.0;
        let mut on = self.spin0;
        let mut last = 0.0;
        for &k in &self.kinks {
            if on {
                total += k - last;
            }
            on = !on;
            last = k;
        }
        if on {
            total += beta - last;
        }
        total
    }

    /// Maximal intervals in `[a, b)` where the line is occupied.
    fn occupied_intervals(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let start = self.kinks.partition_point(|&k| k <= a);
        let mut on = self.spin0 ^ (start % 2 == 1);
        let mut left = a;
        for &k in &self.kinks[start..] {
            if k >= b {
                break;
            }
            if on {
                out.push((left, k));
            }
            on = !on;
            left = k;
        }
        if on {
            out.push((left, b));
        }
        out
    }
}

/// Length of `{τ ∈ [a, b) : n_i(τ) = n_j(τ) = 1}`.
pub fn overlap_integral(line_i: &Worldline, line_j: &Worldline, a: f64, b: f64) -> Result<f64> {
    if !(a < b) {
        return Err(Error::Domain(format!("empty window [{a}, {b})")));
    }
    let xs = line_i.occupied_intervals(a, b);
    let ys = line_j.occupied_intervals(a, b);
    let (mut p, mut q) = (0, 0);
    let mut total = 0.0;
    while p < xs.len() && q < ys.len() {
        let lo = xs[p].0.max(ys[q].0);
        let hi = xs[p].1.min(ys[q].1);
        if hi > lo {
            total += hi - lo;
        }
        if xs[p].1 < ys[q].1 {
            p += 1;
        } else {
            q += 1;
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub beta: f64,
    pub lattice: LatticeSpec,
    pub lines: Vec<Worldline>,
}

impl Configuration {
    pub fn uniform(lattice: LatticeSpec, beta: f64, occupied: bool) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Config(format!("beta must be positive, got {beta}")));
        }
        Ok(Self {
            beta,
            lattice,
            lines: vec![Worldline::constant(occupied); lattice.num_sites()],
        })
    }

    pub fn from_occupations(lattice: LatticeSpec, beta: f64, occ: &[bool]) -> Result<Self> {
        let mut c = Self::uniform(lattice, beta, false)?;
        if occ.len() != c.lines.len() {
            return Err(Error::Config(format!(
                "{} occupations for {} sites",
                occ.len(),
                c.lines.len()
            )));
        }
        for (line, &o) in c.lines.iter_mut().zip(occ) {
            line.spin0 = o;
        }
        Ok(c)
    }

    pub fn num_sites(&self) -> usize {
        self.lines.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lines.len() != self.lattice.num_sites() {
            return Err(Error::Validation(format!(
                "{} worldlines for {} sites",
                self.lines.len(),
                self.lattice.num_sites()
            )));
        }
        for (i, line) in self.lines.iter().enumerate() {
            line.validate(self.beta)
                .map_err(|e| Error::Validation(format!("site {i}: {e}")))?;
        }
        Ok(())
    }

    pub fn snapshot(&self, tau: f64) -> Result<Vec<bool>> {
        if !(0.0..self.beta).contains(&tau) {
            return Err(Error::Domain(format!("tau={tau} outside [0, {})", self.beta)));
        }
        Ok(self.lines.iter().map(|l| l.value_at(tau)).collect())
    }

    pub fn snapshot_into(&self, tau: f64, out: &mut Vec<bool>) {
        out.clear();
        out.extend(self.lines.iter().map(|l| l.value_at(tau)));
    }

    pub fn total_kinks(&self) -> usize {
        self.lines.iter().map(|l| l.kinks.len()).sum()
    }
}
