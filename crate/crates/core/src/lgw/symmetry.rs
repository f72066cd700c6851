//! Invariance of the Landau potentials under the lattice symmetry generators.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{potential, potential_star, FieldPoint, LgwCouplings, StarCouplings, StarFieldPoint};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub name: &'static str,
    pub matrix: DMatrix<Complex64>,
}

fn real_diag(name: &'static str, d: &[f64]) -> Generator {
    let v: Vec<Complex64> = d.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    Generator {
        name,
        matrix: DMatrix::from_diagonal(&DVector::from_vec(v)),
    }
}

/// Action on `(Ψ1, Ψ2, Φ)`.
pub fn checkerboard_striated_generators() -> Vec<Generator> {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    vec![
        real_diag("Tx", &[-1.0, 1.0, -1.0]),
        real_diag("Ty", &[1.0, -1.0, -1.0]),
        real_diag("Rx", &[1.0, 1.0, 1.0]),
        real_diag("Ry", &[1.0, 1.0, 1.0]),
        Generator {
            name: "C4",
            matrix: DMatrix::from_row_slice(3, 3, &[zero, one, zero, one, zero, zero, zero, zero, one]),
        },
    ]
}

/// Action on `(Ψ1, Ψ2, Ψ1*, Ψ2*)`.
pub fn star_generators() -> Vec<Generator> {
    let o = Complex64::new(0.0, 0.0);
    let l = Complex64::new(1.0, 0.0);
    let m = Complex64::new(-1.0, 0.0);
    let i = Complex64::i();
    let mi = -Complex64::i();
    let g = |name, rows: [[Complex64; 4]; 4]| Generator {
        name,
        matrix: DMatrix::from_fn(4, 4, |r, c| rows[r][c]),
    };
    vec![
        g("Tx", [[i, o, o, o], [o, m, o, o], [o, o, mi, o], [o, o, o, m]]),
        g("Ty", [[m, o, o, o], [o, i, o, o], [o, o, m, o], [o, o, o, mi]]),
        g("Rx", [[l, o, o, o], [o, o, o, l], [o, o, l, o], [o, l, o, o]]),
        g("Ry", [[o, o, l, o], [o, l, o, o], [l, o, o, o], [o, o, o, l]]),
        g("C4", [[o, o, o, l], [l, o, o, o], [o, l, o, o], [o, o, l, o]]),
    ]
}

/// Largest `|V(O f) − V(f)|` over `trials` sampled points and every product
/// `O` of at most three generators.
pub fn symmetry_check<V, S>(
    potential: V,
    mut sample: S,
    generators: &[Generator],
    trials: usize,
) -> Result<f64>
where
    V: Fn(&DVector<Complex64>) -> f64,
    S: FnMut() -> DVector<Complex64>,
{
    let Some(first) = generators.first() else {
        return Ok(0.0);
    };
    let dim = first.matrix.nrows();
    for g in generators {
        if g.matrix.nrows() != dim || g.matrix.ncols() != dim {
            return Err(Error::Validation(format!(
                "generator {} is {}x{}, expected {dim}x{dim}",
                g.name,
                g.matrix.nrows(),
                g.matrix.ncols()
            )));
        }
    }
    let mut words: Vec<DMatrix<Complex64>> = generators.iter().map(|g| g.matrix.clone()).collect();
    let mut layer = words.clone();
    for _ in 1..3 {
        let next: Vec<_> = layer
            .iter()
            .flat_map(|w| generators.iter().map(move |g| &g.matrix * w))
            .collect();
        words.extend(next.iter().cloned());
        layer = next;
    }
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let f = sample();
        if f.len() != dim {
            return Err(Error::Validation(format!(
                "field point has {} components, generators act on {dim}",
                f.len()
            )));
        }
        let base = potential(&f);
        for w in &words {
            worst = worst.max((potential(&(w * &f)) - base).abs());
        }
    }
    Ok(worst)
}

pub fn symmetry_check_lgw(c: &LgwCouplings, trials: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    symmetry_check(
        |f| potential(c, &FieldPoint::new(f[0].re, f[1].re, f[2].re)),
        || DVector::from_fn(3, |_, _| Complex64::new(rng.random_range(-2.0..2.0), 0.0)),
        &checkerboard_striated_generators(),
        trials,
    )
}

pub fn symmetry_check_star(c: &StarCouplings, trials: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    symmetry_check(
        |f| {
            potential_star(
                c,
                &StarFieldPoint {
                    psi1: f[0],
                    psi2: f[1],
                },
            )
        },
        || {
            let mut z = || Complex64::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
            let (a, b) = (z(), z());
            DVector::from_vec(vec![a, b, a.conj(), b.conj()])
        },
        &star_generators(),
        trials,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_field_potential_is_invariant() {
        let c = LgwCouplings::reference().at(0.2, -0.3);
        assert_eq!(symmetry_check_lgw(&c, 100, 1).unwrap(), 0.0);
    }

    #[test]
    fn star_potential_is_invariant() {
        let c = StarCouplings {
            r: -0.7,
            z1: 1.0,
            z2: 3.0,
            z3: 0.1,
        };
        assert!(symmetry_check_star(&c, 100, 2).unwrap() <= 1e-12);
    }

    #[test]
    fn broken_term_is_detected() {
        // Φ³ is not invariant under translations.
        let c = LgwCouplings::reference();
        let dev = symmetry_check(
            |f| potential(&c, &FieldPoint::new(f[0].re, f[1].re, f[2].re)) + f[2].re.powi(3),
            || DVector::from_vec(vec![Complex64::new(0.3, 0.0); 3]),
            &checkerboard_striated_generators(),
            3,
        )
        .unwrap();
        assert!(dev > 0.01);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let mut gens = star_generators();
        gens.push(checkerboard_striated_generators().remove(0));
        let r = symmetry_check(|_| 0.0, || DVector::zeros(4), &gens, 1);
        assert!(matches!(r, Err(Error::Validation(_))));
    }

    #[test]
    fn star_generators_preserve_conjugate_structure() {
        let z = DVector::from_vec(vec![
            Complex64::new(0.3, 0.4),
            Complex64::new(-0.2, 0.9),
            Complex64::new(0.3, -0.4),
            Complex64::new(-0.2, -0.9),
        ]);
        for g in star_generators() {
            let y = &g.matrix * &z;
            assert!((y[2] - y[0].conj()).norm() < 1e-15, "{}", g.name);
            assert!((y[3] - y[1].conj()).norm() < 1e-15, "{}", g.name);
        }
    }
}
