//! Mean-field Landau theory of the checkerboard, striated and star phases.
//!
//! The three-field functional in `(Ψ1, Ψ2, Φ)` is
//!
//! ```text
//! V = r(Ψ1² + Ψ2²) + sΦ² + gΨ1Ψ2Φ + u1(Ψ1² + Ψ2²)² + u2Φ⁴ + vΨ1²Ψ2² + wΦ²(Ψ1² + Ψ2²)
//! ```
//!
//! with gradient terms dropped (homogeneous saddle point).

mod diagram;
mod star;
mod symmetry;

pub use diagram::{
    phase_diagram, BoundaryEdge, BoundaryKind, BoundaryReport, GridAxis, PhaseCell, PhaseDiagram,
    J_MIN,
};
pub use star::{
    potential_star, stability_predicates, tetragonal_map, StabilityPredicates, StarCouplings,
    StarFieldPoint,
};
pub use symmetry::{
    checkerboard_striated_generators, star_generators, symmetry_check, symmetry_check_lgw,
    symmetry_check_star, Generator,
};

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Condensation threshold for field amplitudes.
pub const EPS_COND: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LgwCouplings {
    pub r: f64,
    pub s: f64,
    pub g: f64,
    pub u1: f64,
    pub u2: f64,
    pub v: f64,
    pub w: f64,
}

impl LgwCouplings {
    /// Quartic and cubic couplings used for the reference phase diagram,
    /// with `r = s = 0`.
    pub fn reference() -> Self {
        Self {
            r: 0.0,
            s: 0.0,
            g: -1.0,
            u1: 1.0,
            u2: 0.75,
            v: -1.0,
            w: 0.5,
        }
    }

    pub fn at(self, r: f64, s: f64) -> Self {
        Self { r, s, ..self }
    }

    /// Whether the quartic part is strictly positive away from the origin,
    /// which makes `V` bounded below.
    ///
    /// In the squares `(Ψ1², Ψ2², Φ²)` the quartic part is a quadratic form on
    /// the nonnegative orthant; strict copositivity of its 3×3 matrix is
    /// decided by Hadeler's criterion.
    pub fn is_bounded(&self) -> bool {
        let h = self.u1 + self.v / 2.0;
        let m = [
            [self.u1, h, self.w / 2.0],
            [h, self.u1, self.w / 2.0],
            [self.w / 2.0, self.w / 2.0, self.u2],
        ];
        strictly_copositive3(&m)
    }

    /// The stability inequalities `u1 > −v/4 > 0`, `u2 > 0`, `u2(4u1 + v) > w²`.
    pub fn satisfies_reference_conditions(&self) -> bool {
        self.u1 > -self.v / 4.0
            && -self.v / 4.0 > 0.0
            && self.u2 > 0.0
            && self.u2 * (4.0 * self.u1 + self.v) > self.w * self.w
    }
}

fn strictly_copositive3(m: &[[f64; 3]; 3]) -> bool {
    let d = [m[0][0], m[1][1], m[2][2]];
    if d.iter().any(|&x| x <= 0.0) {
        return false;
    }
    let sq = d.map(f64::sqrt);
    let b01 = m[0][1] + sq[0] * sq[1];
    let b02 = m[0][2] + sq[0] * sq[2];
    let b12 = m[1][2] + sq[1] * sq[2];
    if b01 <= 0.0 || b02 <= 0.0 || b12 <= 0.0 {
        return false;
    }
    let t = sq[0] * sq[1] * sq[2] + m[0][1] * sq[2] + m[0][2] * sq[1] + m[1][2] * sq[0];
    t > 0.0 || t * t < 2.0 * b01 * b02 * b12
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FieldPoint {
    pub psi1: f64,
    pub psi2: f64,
    pub phi: f64,
}

impl FieldPoint {
    pub fn new(psi1: f64, psi2: f64, phi: f64) -> Self {
        Self { psi1, psi2, phi }
    }

    fn from_vec(x: &Vector3<f64>) -> Self {
        Self::new(x[0], x[1], x[2])
    }

    fn to_vec(self) -> Vector3<f64> {
        Vector3::new(self.psi1, self.psi2, self.phi)
    }

    /// `√(Ψ1² + Ψ2² + Φ²)`.
    pub fn magnitude(&self) -> f64 {
        self.to_vec().norm()
    }

    /// Largest single amplitude `max(|Ψ1|, |Ψ2|, |Φ|)`.
    pub fn amplitude(&self) -> f64 {
        self.psi1.abs().max(self.psi2.abs()).max(self.phi.abs())
    }
}

pub fn potential(c: &LgwCouplings, f: &FieldPoint) -> f64 {
    let a = f.psi1 * f.psi1;
    let b = f.psi2 * f.psi2;
    let p2 = f.phi * f.phi;
    let ab = a + b;
    c.r * ab
        + c.s * p2
        + c.g * f.psi1 * f.psi2 * f.phi
        + c.u1 * ab * ab
        + c.u2 * p2 * p2
        + c.v * a * b
        + c.w * p2 * ab
}

pub fn gradient(c: &LgwCouplings, f: &FieldPoint) -> [f64; 3] {
    let (x, y, z) = (f.psi1, f.psi2, f.phi);
    let ab = x * x + y * y;
    let z2 = z * z;
    [
        2.0 * c.r * x + c.g * y * z + 4.0 * c.u1 * ab * x + 2.0 * c.v * x * y * y + 2.0 * c.w * z2 * x,
        2.0 * c.r * y + c.g * x * z + 4.0 * c.u1 * ab * y + 2.0 * c.v * y * x * x + 2.0 * c.w * z2 * y,
        2.0 * c.s * z + c.g * x * y + 4.0 * c.u2 * z2 * z + 2.0 * c.w * z * ab,
    ]
}

pub fn hessian(c: &LgwCouplings, f: &FieldPoint) -> [[f64; 3]; 3] {
    let (x, y, z) = (f.psi1, f.psi2, f.phi);
    let (a, b, z2) = (x * x, y * y, z * z);
    let h11 = 2.0 * c.r + 4.0 * c.u1 * (a + b) + 8.0 * c.u1 * a + 2.0 * c.v * b + 2.0 * c.w * z2;
    let h22 = 2.0 * c.r + 4.0 * c.u1 * (a + b) + 8.0 * c.u1 * b + 2.0 * c.v * a + 2.0 * c.w * z2;
    let h12 = c.g * z + 8.0 * c.u1 * x * y + 4.0 * c.v * x * y;
    let h13 = c.g * y + 4.0 * c.w * z * x;
    let h23 = c.g * x + 4.0 * c.w * z * y;
    let h33 = 2.0 * c.s + 12.0 * c.u2 * z2 + 2.0 * c.w * (a + b);
    [[h11, h12, h13], [h12, h22, h23], [h13, h23, h33]]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LgwPhase {
    Disordered,
    Checkerboard,
    Striated,
}

impl LgwPhase {
    pub fn name(self) -> &'static str {
        match self {
            LgwPhase::Disordered => "disordered",
            LgwPhase::Checkerboard => "checkerboard",
            LgwPhase::Striated => "striated",
        }
    }

    /// Label a field configuration; any condensed `Ψ` counts as striated.
    pub fn classify(f: &FieldPoint) -> Self {
        let psi = f.psi1.abs().max(f.psi2.abs());
        if psi >= EPS_COND {
            LgwPhase::Striated
        } else if f.phi.abs() >= EPS_COND {
            LgwPhase::Checkerboard
        } else {
            LgwPhase::Disordered
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Minimum {
    pub field: FieldPoint,
    pub value: f64,
    pub phase: LgwPhase,
}

const DETERMINISTIC_STARTS: usize = 16;
const RANDOM_STARTS: usize = 64;
const START_SEED: u64 = 0x5eed;

/// Global minimum by multi-start damped Newton descent.
pub fn minimize(c: &LgwCouplings) -> Result<Minimum> {
    if !c.is_bounded() {
        return Err(Error::Unbounded(format!(
            "quartic form is not positive on the nonnegative orthant for {c:?}"
        )));
    }
    let q = c.u2.min(c.u1 + c.v / 4.0).min(c.u1).max(1e-3);
    let radius = 1.5 * ((c.r.abs().max(c.s.abs()) / q).sqrt() + c.g.abs() / q).max(0.05);

    let mut starts: Vec<Vector3<f64>> = Vec::with_capacity(DETERMINISTIC_STARTS + RANDOM_STARTS);
    starts.push(Vector3::zeros());
    for k in 0..3 {
        for sign in [1.0, -1.0] {
            let mut e = Vector3::zeros();
            e[k] = sign * radius;
            starts.push(e);
        }
    }
    for (sx, sy, sz) in [
        (1.0, 1.0, 1.0),
        (1.0, 1.0, -1.0),
        (1.0, -1.0, 1.0),
        (1.0, -1.0, -1.0),
        (-1.0, 1.0, 1.0),
        (-1.0, 1.0, -1.0),
        (-1.0, -1.0, 1.0),
        (-1.0, -1.0, -1.0),
    ] {
        starts.push(Vector3::new(sx, sy, sz) * radius / 3f64.sqrt());
    }
    starts.push(Vector3::new(1.0, 0.0, 1.0) * radius / 2f64.sqrt());
    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    for _ in 0..RANDOM_STARTS {
        let v = Vector3::new(
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
        );
        starts.push(v * radius);
    }

    let mut best: Option<(Vector3<f64>, f64)> = None;
    for x0 in starts {
        let x = descend(c, x0);
        let v = potential(c, &FieldPoint::from_vec(&x));
        if best.as_ref().is_none_or(|(_, bv)| v < *bv - 1e-14 * bv.abs().max(1.0)) {
            best = Some((x, v));
        }
    }
    let (x, value) = best.expect("at least one start");
    let field = FieldPoint::from_vec(&x);
    Ok(Minimum {
        field,
        value,
        phase: LgwPhase::classify(&field),
    })
}

/// Saddle-free Newton with Armijo backtracking.
fn descend(c: &LgwCouplings, mut x: Vector3<f64>) -> Vector3<f64> {
    let eval = |x: &Vector3<f64>| potential(c, &FieldPoint::from_vec(x));
    let mut fx = eval(&x);
    for _ in 0..500 {
        let f = FieldPoint::from_vec(&x);
        let g = Vector3::from(gradient(c, &f));
        let gnorm = g.norm();
        if gnorm <= 1e-13 {
            break;
        }
        let h = Matrix3::from(hessian(c, &f)).transpose();
        let d = match h.cholesky() {
            Some(ch) => -ch.solve(&g),
            None => {
                let eig = SymmetricEigen::new(h);
                let floor = 1e-8 * eig.eigenvalues.amax().max(1e-8);
                let mut d = Vector3::zeros();
                for k in 0..3 {
                    let vk = eig.eigenvectors.column(k);
                    d -= vk * (vk.dot(&g) / eig.eigenvalues[k].abs().max(floor));
                }
                d
            }
        };
        let slope = g.dot(&d);
        let (d, slope) = if slope < 0.0 { (d, slope) } else { (-g, -gnorm * gnorm) };
        let mut t = 1.0;
        let mut moved = false;
        while t > 1e-20 {
            let xn = x + d * t;
            let fn_ = eval(&xn);
            if fn_ <= fx + 1e-4 * t * slope {
                moved = xn != x;
                x = xn;
                fx = fn_;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    x
}

/// `r` on the continuous checkerboard–striated line for `s < 0`.
pub fn second_order_line(c: &LgwCouplings, s: f64) -> Result<f64> {
    if s >= 0.0 {
        return Err(Error::Domain(format!(
            "checkerboard-striated line needs s < 0, got {s}"
        )));
    }
    Ok(0.5 * (-c.g * (-s / (2.0 * c.u2)).sqrt() + s * c.w / c.u2))
}

/// Left-hand side of the equation whose root on `s < 0` locates T2.
pub fn t2_residual(c: &LgwCouplings, s: f64) -> f64 {
    c.g * c.g / s - 4.0 * c.g * c.w * (2.0 / (-s * c.u2)).sqrt()
        + 8.0 * (4.0 * c.u1 + c.v - c.w * c.w / c.u2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TricriticalPoints {
    /// `(r, s)` of T1.
    pub t1: (f64, f64),
    /// `(r, s)` of T2.
    pub t2: (f64, f64),
    /// T2 equation evaluated at the returned root.
    pub t2_residual: f64,
}

pub fn tricritical_points(c: &LgwCouplings) -> Result<TricriticalPoints> {
    if c.g == 0.0 {
        return Err(Error::Domain("tricritical points need g != 0".into()));
    }
    if !(c.u2 > 0.0) {
        return Err(Error::Domain("tricritical points need u2 > 0".into()));
    }
    let t1 = (0.0, c.g * c.g / (16.0 * c.u1 + 4.0 * c.v));
    let s = t2_root(c)?;
    let r = second_order_line(c, s)?;
    Ok(TricriticalPoints {
        t1,
        t2: (r, s),
        t2_residual: t2_residual(c, s),
    })
}

/// Scan `s = −10^k` for a sign change, then bisect to machine precision.
fn t2_root(c: &LgwCouplings) -> Result<f64> {
    let f = |s: f64| t2_residual(c, s);
    let grid: Vec<f64> = (-120..=60).map(|k| -(10f64).powf(k as f64 / 10.0)).collect();
    let mut bracket = None;
    for w in grid.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (fa, fb) = (f(a), f(b));
        if fa == 0.0 {
            return Ok(a);
        }
        if fa.signum() != fb.signum() {
            bracket = Some((a, b));
        }
    }
    let (mut lo, mut hi) = bracket.ok_or_else(|| Error::NoRoot {
        lo: grid[0],
        hi: grid[grid.len() - 1],
        detail: "T2 equation has no sign change for s < 0".into(),
    })?;
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if f(lo).abs() < f(hi).abs() { lo } else { hi })
}
