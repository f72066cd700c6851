//! Single-site cluster update in continuous imaginary time.
//!
//! For site `i` the cut set is the union of its existing kinks and a Poisson
//! process of rate `Ω/2` on `[0, β)`. Consecutive cuts (cyclically) bound
//! segments whose occupations can be flipped independently, because with
//! all other lines fixed the diagonal action is additive over segments.

use rand::Rng;

use crate::lattice::InteractionTable;
use crate::worldline::{overlap_integral, Configuration};

/// Rate of candidate cuts: the transverse-field matrix element `Ω/2` with `Ω = 1`.
pub const CUT_RATE: f64 = 0.5;

/// Scratch buffers reused across site updates.
#[derive(Debug, Clone, Default)]
pub struct SiteUpdater {
    /// (time, change of the local field) from neighbor kinks.
    events: Vec<(f64, f64)>,
    candidates: Vec<f64>,
    cuts: Vec<f64>,
    cut_is_kink: Vec<bool>,
    cumulative: Vec<f64>,
    values: Vec<bool>,
}

impl SiteUpdater {
    pub fn new() -> Self {
        Self::default()
    }

    /// Update the worldline of site `i`; returns the change in diagonal action.
    pub fn update<R: Rng + ?Sized>(
        &mut self,
        config: &mut Configuration,
        i: usize,
        table: &InteractionTable,
        delta: f64,
        rng: &mut R,
    ) -> f64 {
        let beta = config.beta;

        // Local field h(τ) = Σ_j V_ij n_j(τ) - Δ as a base value plus jumps.
        self.events.clear();
        let mut base = -delta;
        for &(j, v) in table.neighbors(i) {
            let line = &config.lines[j];
            if line.spin0 {
                base += v;
            }
            for (k, &t) in line.kinks.iter().enumerate() {
                let becomes_occupied = line.spin0 ^ (k % 2 == 0);
                self.events.push((t, if becomes_occupied { v } else { -v }));
            }
        }
        self.events.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

        // Candidate cuts, redrawn on (measure-zero) collisions with kinks.
        self.candidates.clear();
        let own = &config.lines[i].kinks;
        let mut t = 0.0;
        loop {
            let gap = -(1.0 - rng.random::<f64>()).ln() / CUT_RATE;
            let next = t + gap;
            if next >= beta {
                break;
            }
            if own.binary_search_by(|k| k.total_cmp(&next)).is_ok() {
                continue;
            }
            t = next;
            self.candidates.push(t);
        }

        // Merge kinks and candidates into the sorted cut list.
        self.cuts.clear();
        self.cut_is_kink.clear();
        let (mut a, mut b) = (0, 0);
        while a < own.len() || b < self.candidates.len() {
            let take_kink = b >= self.candidates.len()
                || (a < own.len() && own[a] < self.candidates[b]);
            if take_kink {
                self.cuts.push(own[a]);
                self.cut_is_kink.push(true);
                a += 1;
            } else {
                self.cuts.push(self.candidates[b]);
                self.cut_is_kink.push(false);
                b += 1;
            }
        }

        // ∫_0^c h at every cut, plus ∫_0^β h.
        self.cumulative.clear();
        let (mut acc, mut pos, mut h, mut e) = (0.0, 0.0, base, 0);
        let events = &self.events;
        let mut integrate_to = |c: f64| {
            while e < events.len() && events[e].0 <= c {
                acc += h * (events[e].0 - pos);
                pos = events[e].0;
                h += events[e].1;
                e += 1;
            }
            acc + h * (c - pos)
        };
        for &c in &self.cuts {
            self.cumulative.push(integrate_to(c));
        }
        let total = integrate_to(beta);

        let line = &mut config.lines[i];
        let m = self.cuts.len();
        if m == 0 {
            let ds = if line.spin0 { -total } else { total };
            if accept(ds, rng) {
                line.spin0 = !line.spin0;
                return ds;
            }
            return 0.0;
        }

        // Segment k starts at cut k; segment m-1 wraps through τ = 0.
        self.values.clear();
        let mut v = line.spin0;
        for k in 0..m {
            if self.cut_is_kink[k] {
                v = !v;
            }
            self.values.push(v);
        }
        debug_assert_eq!(v, line.spin0, "kink parity");

        let mut delta_action = 0.0;
        for k in 0..m {
            let integral = if k + 1 < m {
                self.cumulative[k + 1] - self.cumulative[k]
            } else {
                total - self.cumulative[m - 1] + self.cumulative[0]
            };
            let ds = if self.values[k] { -integral } else { integral };
            if accept(ds, rng) {
                self.values[k] = !self.values[k];
                delta_action += ds;
            }
        }

        line.kinks.clear();
        for k in 0..m {
            let before = self.values[(k + m - 1) % m];
            if self.values[k] != before {
                line.kinks.push(self.cuts[k]);
            }
        }
        line.spin0 = self.values[m - 1];
        delta_action
    }
}

/// Heat-bath flip probability `1 / (1 + e^{ΔS})`. Unlike Metropolis it does
/// not flip every segment when `ΔS = 0`, which would freeze the kink set of a
/// line in zero local field.
#[inline]
fn accept<R: Rng + ?Sized>(ds: f64, rng: &mut R) -> bool {
    let p = if ds > 0.0 {
        let e = (-ds).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + ds.exp())
    };
    rng.random::<f64>() < p
}

/// `∫_0^β H_0 dτ` recomputed pair by pair from worldline overlaps.
pub fn diagonal_action(config: &Configuration, table: &InteractionTable, delta: f64) -> f64 {
    let beta = config.beta;
    let mut s = 0.0;
    for p in table.pairs() {
        // windows are never empty since beta > 0
        s += p.v * overlap_integral(&config.lines[p.i], &config.lines[p.j], 0.0, beta).unwrap_or(0.0);
    }
    let occupied: f64 = config.lines.iter().map(|l| l.occupied_time(beta)).sum();
    s - delta * occupied
}
