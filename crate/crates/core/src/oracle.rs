//! Exact thermal averages for small clusters by dense diagonalization.
//!
//! Basis state `s` has site `i` occupied iff bit `i` of `s` is set.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Boundary, InteractionTable, LatticeSpec};
use crate::observables::{FourierWeights, Order};

/// Largest cluster accepted by [`build_hamiltonian`].
pub const MAX_SITES: usize = 16;

/// Sign in front of `(Ω/2) Σ σ_x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FieldSign {
    #[default]
    Minus,
    Plus,
}

pub fn build_hamiltonian(spec: &LatticeSpec, table: &InteractionTable, delta: f64) -> Result<DMatrix<f64>> {
    build_hamiltonian_with(spec, table, delta, FieldSign::Minus)
}

pub fn build_hamiltonian_with(
    spec: &LatticeSpec,
    table: &InteractionTable,
    delta: f64,
    sign: FieldSign,
) -> Result<DMatrix<f64>> {
    let n = spec.num_sites();
    if n > MAX_SITES {
        return Err(Error::TooLarge { sites: n, cap: MAX_SITES });
    }
    if table.num_sites() != n {
        return Err(Error::Validation(format!(
            "interaction table has {} sites, lattice has {n}",
            table.num_sites()
        )));
    }
    let dim = 1usize << n;
    let off = match sign {
        FieldSign::Minus => -0.5,
        FieldSign::Plus => 0.5,
    };
    let mut h = DMatrix::zeros(dim, dim);
    for s in 0..dim {
        h[(s, s)] = diagonal_energy(s, table, delta);
        for i in 0..n {
            h[(s ^ (1 << i), s)] = off;
        }
    }
    Ok(h)
}

/// Classical energy `Σ V_ij n_i n_j − Δ Σ n_i` of a basis state.
pub fn diagonal_energy(state: usize, table: &InteractionTable, delta: f64) -> f64 {
    let mut e = -delta * state.count_ones() as f64;
    for p in table.pairs() {
        if state >> p.i & 1 == 1 && state >> p.j & 1 == 1 {
            e += p.v;
        }
    }
    e
}

pub fn basis_occupations(state: usize, n: usize) -> Vec<bool> {
    (0..n).map(|i| state >> i & 1 == 1).collect()
}

/// Gibbs state restricted to what diagonal observables need.
#[derive(Debug, Clone)]
pub struct ThermalEnsemble {
    /// `⟨s|ρ|s⟩` for every basis state.
    pub probabilities: Vec<f64>,
    /// `⟨H⟩`.
    pub energy: f64,
    /// Spectrum in ascending order.
    pub eigenvalues: Vec<f64>,
}

impl ThermalEnsemble {
    pub fn new(h: &DMatrix<f64>, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Domain(format!("beta must be positive, got {beta}")));
        }
        if !h.is_square() {
            return Err(Error::Validation("Hamiltonian is not square".into()));
        }
        let scale = h.amax().max(1.0);
        let asym = (h - h.transpose()).amax();
        if asym > 1e-12 * scale {
            return Err(Error::Validation(format!(
                "Hamiltonian is not Hermitian (max asymmetry {asym:e})"
            )));
        }
        let eig = SymmetricEigen::new(h.clone());
        let e0 = eig.eigenvalues.min();
        let boltz: Vec<f64> = eig.eigenvalues.iter().map(|&e| (-beta * (e - e0)).exp()).collect();
        let z: f64 = boltz.iter().sum();
        let dim = h.nrows();
        let mut probabilities = vec![0.0; dim];
        for (k, &w) in boltz.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let col = eig.eigenvectors.column(k);
            for (s, p) in probabilities.iter_mut().enumerate() {
                *p += w * col[s] * col[s];
            }
        }
        for p in &mut probabilities {
            *p /= z;
        }
        let energy = eig.eigenvalues.iter().zip(&boltz).map(|(e, w)| e * w).sum::<f64>() / z;
        let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        eigenvalues.sort_by(f64::total_cmp);
        Ok(Self {
            probabilities,
            energy,
            eigenvalues,
        })
    }

    /// `⟨O⟩` for an observable diagonal in the occupation basis.
    pub fn expect(&self, f: impl Fn(usize) -> f64) -> f64 {
        self.probabilities.iter().enumerate().map(|(s, p)| p * f(s)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderExpectation {
    pub order: Order,
    pub f_abs: f64,
    pub f2: f64,
    pub f4: f64,
    pub u4: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalExpectations {
    pub beta: f64,
    pub density: f64,
    pub orders: Vec<OrderExpectation>,
    pub boundary: Option<OrderExpectation>,
    /// `⟨H⟩ / N_a`.
    pub energy: f64,
    /// Diagonal part `⟨Σ V n n − Δ Σ n⟩ / N_a`.
    pub diag_energy: f64,
}

impl ThermalExpectations {
    pub fn order(&self, order: Order) -> &OrderExpectation {
        self.orders
            .iter()
            .find(|o| o.order == order)
            .expect("all orders are evaluated")
    }
}

fn order_expectation(ens: &ThermalEnsemble, n: usize, w: &FourierWeights, order: Order) -> OrderExpectation {
    let f = |s: usize| w.evaluate(&basis_occupations(s, n));
    let f_abs = ens.expect(f);
    let f2 = ens.expect(|s| f(s).powi(2));
    let f4 = ens.expect(|s| f(s).powi(4));
    let u4 = if f2 > 0.0 { 0.5 * (3.0 - f4 / (f2 * f2)) } else { f64::NAN };
    OrderExpectation { order, f_abs, f2, f4, u4 }
}

/// Thermal averages of density, order-parameter moments and energy.
pub fn thermal_expectations(
    h: &DMatrix<f64>,
    beta: f64,
    spec: &LatticeSpec,
    table: &InteractionTable,
    delta: f64,
) -> Result<ThermalExpectations> {
    let n = spec.num_sites();
    if h.nrows() != 1 << n {
        return Err(Error::Validation(format!(
            "matrix dimension {} does not match 2^{n}",
            h.nrows()
        )));
    }
    let ens = ThermalEnsemble::new(h, beta)?;
    let density = ens.expect(|s| s.count_ones() as f64) / n as f64;
    let orders = Order::ALL
        .iter()
        .map(|&o| order_expectation(&ens, n, &FourierWeights::bulk(spec, o.momentum()), o))
        .collect();
    let boundary = match spec.boundary {
        Boundary::Obc => Some(order_expectation(
            &ens,
            n,
            &FourierWeights::boundary(spec)?,
            Order::Checkerboard,
        )),
        Boundary::Pbc => None,
    };
    let diag = ens.expect(|s| diagonal_energy(s, table, delta));
    Ok(ThermalExpectations {
        beta,
        density,
        orders,
        boundary,
        energy: ens.energy / n as f64,
        diag_energy: diag / n as f64,
    })
}

/// Build, diagonalize and average in one call.
pub fn solve(
    spec: &LatticeSpec,
    rb: f64,
    r0: f64,
    delta: f64,
    beta: f64,
) -> Result<ThermalExpectations> {
    let table = InteractionTable::build(spec, rb, r0)?;
    let h = build_hamiltonian(spec, &table, delta)?;
    thermal_expectations(&h, beta, spec, &table, delta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single() -> (LatticeSpec, InteractionTable) {
        // a 2x1 strip is not allowed, so isolate site 0 of a 2x2 cluster by
        // building only its own 2x2 block
        let spec = LatticeSpec::square(2, Boundary::Obc).unwrap();
        (spec, InteractionTable::empty(4))
    }

    #[test]
    fn one_site_blocks() {
        let (spec, table) = single();
        let h = build_hamiltonian(&spec, &table, 1.0).unwrap();
        // site 0 couples states 0 and 1
        assert_eq!(h[(0, 0)], 0.0);
        assert_eq!(h[(1, 1)], -1.0);
        assert_eq!(h[(0, 1)], -0.5);
        assert_eq!(h[(1, 0)], -0.5);
    }

    #[test]
    fn two_site_assembly() {
        let spec = LatticeSpec::square(2, Boundary::Obc).unwrap();
        let table = InteractionTable::build(&spec, 1.2, 1.0).unwrap();
        let h = build_hamiltonian(&spec, &table, 0.0).unwrap();
        // states 0b0011 (sites 0,1 at distance 1)
        assert!((h[(3, 3)] - 2.985984).abs() < 1e-12);
        assert_eq!(h[(0, 0)], 0.0);
        assert_eq!(h[(1, 1)], 0.0);
        // sites 0 and 3 are diagonal neighbors at d = √2 > R0
        assert_eq!(h[(9, 9)], 0.0);
        assert_eq!(h[(1, 0)], -0.5);
        assert_eq!(h[(3, 0)], 0.0);
    }

    #[test]
    fn decoupled_sites_match_two_level_formula() {
        let (spec, table) = single();
        for (delta, beta) in [(0.0, 0.7), (1.0, 5.0), (-2.0, 3.0)] {
            let h = build_hamiltonian(&spec, &table, delta).unwrap();
            let t = thermal_expectations(&h, beta, &spec, &table, delta).unwrap();
            let exact = two_level_density(delta, beta);
            assert!((t.density - exact).abs() < 1e-12, "Δ={delta}");
        }
    }

    /// `⟨n⟩` for `[[0, −1/2], [−1/2, −Δ]]` from its closed-form spectrum.
    fn two_level_density(delta: f64, beta: f64) -> f64 {
        let r = (delta * delta + 1.0).sqrt();
        let (em, ep) = ((-delta - r) / 2.0, (-delta + r) / 2.0);
        // occupation weight of each eigenvector: (1 ± Δ/r)/2
        let (nm, np) = ((1.0 + delta / r) / 2.0, (1.0 - delta / r) / 2.0);
        let (wm, wp) = (1.0, (-beta * (ep - em)).exp());
        (nm * wm + np * wp) / (wm + wp)
    }

    #[test]
    fn closed_form_spectrum_at_unit_detuning() {
        let (spec, table) = single();
        let h = build_hamiltonian(&spec, &table, 1.0).unwrap();
        let ens = ThermalEnsemble::new(&h, 5.0).unwrap();
        let lo = (-1.0 - 2f64.sqrt()) / 2.0;
        assert!((ens.eigenvalues[0] - 4.0 * lo).abs() < 1e-12);
    }

    #[test]
    fn zero_detuning_half_filling() {
        let (spec, table) = single();
        for beta in [0.1, 1.0, 10.0] {
            let h = build_hamiltonian(&spec, &table, 0.0).unwrap();
            let t = thermal_expectations(&h, beta, &spec, &table, 0.0).unwrap();
            assert!((t.density - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn detuning_limits() {
        let (spec, table) = single();
        let d = |delta: f64| {
            let h = build_hamiltonian(&spec, &table, delta).unwrap();
            thermal_expectations(&h, 2.0, &spec, &table, delta).unwrap().density
        };
        assert!(d(200.0) > 1.0 - 1e-5);
        assert!(d(-200.0) < 1e-5);
    }

    #[test]
    fn strong_detuning_fills_blockade_compatible_pattern() {
        // On 3x3 with nearest-neighbor blockade only, the maximum independent
        // set is the 5-site checkerboard.
        let spec = LatticeSpec::square(3, Boundary::Obc).unwrap();
        let t = solve(&spec, 1.8, 1.0, 4.0, 40.0).unwrap();
        assert!((t.density - 5.0 / 9.0).abs() < 0.02, "{}", t.density);
        assert!(t.order(Order::Checkerboard).f2 > 0.2);
    }

    #[test]
    fn field_sign_does_not_change_diagonal_observables() {
        let spec = LatticeSpec::square(3, Boundary::Obc).unwrap();
        let table = InteractionTable::build(&spec, 1.2, 4.0).unwrap();
        let a = build_hamiltonian_with(&spec, &table, 1.3, FieldSign::Minus).unwrap();
        let b = build_hamiltonian_with(&spec, &table, 1.3, FieldSign::Plus).unwrap();
        let ta = thermal_expectations(&a, 3.0, &spec, &table, 1.3).unwrap();
        let tb = thermal_expectations(&b, 3.0, &spec, &table, 1.3).unwrap();
        assert!((ta.density - tb.density).abs() < 1e-10);
        assert!((ta.energy - tb.energy).abs() < 1e-10);
        for o in Order::ALL {
            assert!((ta.order(o).f2 - tb.order(o).f2).abs() < 1e-10);
            assert!((ta.order(o).u4 - tb.order(o).u4).abs() < 1e-8);
        }
    }

    /// `e^{A}` by scaling, Taylor series and squaring.
    fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
        let norm = a.amax() * a.nrows() as f64;
        let squarings = (norm.max(1.0).log2().ceil() as i32 + 4).max(0);
        let b = a / 2f64.powi(squarings);
        let mut term = DMatrix::identity(a.nrows(), a.nrows());
        let mut sum = term.clone();
        for k in 1..30 {
            term = &term * &b / k as f64;
            sum += &term;
        }
        for _ in 0..squarings {
            sum = &sum * &sum;
        }
        sum
    }

    #[test]
    fn eigenbasis_trace_matches_matrix_exponential() {
        let spec = LatticeSpec::square(2, Boundary::Obc).unwrap();
        let table = InteractionTable::build(&spec, 1.2, 4.0).unwrap();
        let (delta, beta) = (3.0, 5.0);
        let h = build_hamiltonian(&spec, &table, delta).unwrap();
        let ens = ThermalEnsemble::new(&h, beta).unwrap();
        let rho = expm(&(-beta * &h));
        let z = rho.trace();
        for s in 0..16 {
            assert!((rho[(s, s)] / z - ens.probabilities[s]).abs() < 1e-10);
        }
        let e = (&rho * &h).trace() / z;
        assert!((e - ens.energy).abs() < 1e-9);
    }

    #[test]
    fn rejects_asymmetric_and_oversized_input() {
        let mut h = DMatrix::zeros(2, 2);
        h[(0, 1)] = 1.0;
        assert!(matches!(ThermalEnsemble::new(&h, 1.0), Err(Error::Validation(_))));
        let spec = LatticeSpec::new(17, 2, Boundary::Obc).unwrap();
        let table = InteractionTable::empty(34);
        assert!(matches!(
            build_hamiltonian(&spec, &table, 0.0),
            Err(Error::TooLarge { sites: 34, cap: 16 })
        ));
    }
}
