//! Landau theory of the star phase and its tetragonal form.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarCouplings {
    pub r: f64,
    pub z1: f64,
    pub z2: f64,
    pub z3: f64,
}

impl StarCouplings {
    /// `z1 − 2|z3| > 0` and `2 z1 + z2 − 4|z3| > 0`.
    pub fn is_stable(&self) -> bool {
        self.z1 - 2.0 * self.z3.abs() > 0.0 && 2.0 * self.z1 + self.z2 - 4.0 * self.z3.abs() > 0.0
    }

    /// Only one of `Ψ1, Ψ2` condenses: `z2 − 2(z1 − 2|z3|) > 0`.
    pub fn condenses_singly(&self) -> bool {
        self.z2 - 2.0 * (self.z1 - 2.0 * self.z3.abs()) > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarFieldPoint {
    pub psi1: Complex64,
    pub psi2: Complex64,
}

/// `Σ_i [½ r|Ψi|² + z1|Ψi|⁴ + z3(Ψi⁴ + Ψi*⁴)] + z2|Ψ1|²|Ψ2|²`.
pub fn potential_star(c: &StarCouplings, f: &StarFieldPoint) -> f64 {
    let site = |p: Complex64| {
        let n = p.norm_sqr();
        let p4 = p.powi(4);
        0.5 * c.r * n + c.z1 * n * n + c.z3 * 2.0 * p4.re
    };
    site(f.psi1) + site(f.psi2) + c.z2 * f.psi1.norm_sqr() * f.psi2.norm_sqr()
}

/// `(z1, z2, z3) → (u0, v0, w0)` of the equivalent tetragonal theory.
pub fn tetragonal_map(z1: f64, z2: f64, z3: f64) -> (f64, f64, f64) {
    (12.0 * z2, 12.0 * (2.0 * z1 - z2 - 12.0 * z3), 192.0 * z3)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilityPredicates {
    /// `u0 + v0 > 0` and `N u0 + v0 > 0`.
    pub striated_stability: bool,
    /// `v0 > 0`.
    pub striated_condense: bool,
    /// Allowed star region of the tetragonal couplings.
    pub star_region: bool,
}

pub fn stability_predicates(u0: f64, v0: f64, w0: f64, n: u32) -> StabilityPredicates {
    let n = f64::from(n.max(1));
    let star_region = u0 > 0.0
        && if w0 > 0.0 {
            -(u0 + v0) < w0 / 2.0 && w0 / 2.0 < -v0
        } else if w0 < 0.0 {
            -(u0 + v0) < w0 && w0 < -v0
        } else {
            false
        };
    StabilityPredicates {
        striated_stability: u0 + v0 > 0.0 && n * u0 + v0 > 0.0,
        striated_condense: v0 > 0.0,
        star_region,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(r: f64, z1: f64, z2: f64, z3: f64) -> StarCouplings {
        StarCouplings { r, z1, z2, z3 }
    }

    fn real(a: f64, b: f64) -> StarFieldPoint {
        StarFieldPoint {
            psi1: Complex64::new(a, 0.0),
            psi2: Complex64::new(b, 0.0),
        }
    }

    #[test]
    fn star_potential_values() {
        assert_eq!(potential_star(&c(-1.0, 1.0, 3.0, 0.1), &real(0.0, 0.0)), 0.0);
        // ½(−1) + 1 + 0.1·2
        let v = potential_star(&c(-1.0, 1.0, 3.0, 0.1), &real(1.0, 0.0));
        assert!((v - 0.7).abs() < 1e-15);
        let v = potential_star(&c(0.4, 1.0, 3.0, 0.0), &real(0.5, 1.5));
        let expect = 0.5 * 0.4 * (0.25 + 2.25) + 0.0625 + 5.0625 + 3.0 * 0.25 * 2.25;
        assert!((v - expect).abs() < 1e-14);
    }

    #[test]
    fn phase_rotation_is_free_without_z3() {
        let k = c(0.3, 1.2, 2.0, 0.0);
        let f = StarFieldPoint {
            psi1: Complex64::new(0.3, -0.8),
            psi2: Complex64::new(-0.1, 0.4),
        };
        let g = StarFieldPoint {
            psi1: f.psi1 * Complex64::i(),
            ..f
        };
        assert!((potential_star(&k, &f) - potential_star(&k, &g)).abs() < 1e-15);
    }

    #[test]
    fn tetragonal_examples() {
        assert_eq!(tetragonal_map(1.0, 1.0, 0.0), (12.0, 12.0, 0.0));
        assert_eq!(tetragonal_map(1.0, 2.0, 0.0), (24.0, 0.0, 0.0));
        let (u, v, w) = tetragonal_map(1.0, 1.0, 0.1);
        assert!((u - 12.0).abs() < 1e-12 && (v + 2.4).abs() < 1e-12 && (w - 19.2).abs() < 1e-12);
    }

    #[test]
    fn predicate_examples() {
        assert!(stability_predicates(2.0, -1.0, 1.0, 2).star_region);
        assert!(!stability_predicates(1.0, -2.0, 1.0, 2).star_region);
        let p = stability_predicates(1.0, 1.0, 0.0, 2);
        assert!(p.striated_stability && p.striated_condense);
        assert!(stability_predicates(3.0, -1.0, -1.0, 2).star_region);
        assert!(!stability_predicates(1.0, 1.0, 0.0, 2).star_region);
    }

    #[test]
    fn star_stability_conditions() {
        assert!(c(0.0, 1.0, 3.0, 0.1).is_stable());
        assert!(!c(0.0, 0.1, 3.0, 0.1).is_stable());
        assert!(c(0.0, 1.0, 3.0, 0.1).condenses_singly());
        assert!(!c(0.0, 1.0, 1.0, 0.1).condenses_singly());
    }
}
