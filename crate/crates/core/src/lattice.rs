//! Square-lattice geometry and truncated van der Waals interaction tables.
//!
//! Sites are indexed row-major: `i = y * lx + x`. Under periodic boundaries
//! distances use the minimum-image convention and every unordered pair is
//! stored once.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Pbc,
    Obc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub lx: usize,
    pub ly: usize,
    pub boundary: Boundary,
}

impl LatticeSpec {
    pub fn new(lx: usize, ly: usize, boundary: Boundary) -> Result<Self> {
        if lx < 2 || ly < 2 {
            return Err(Error::Config(format!(
                "lattice must be at least 2x2, got {lx}x{ly}"
            )));
        }
        Ok(Self { lx, ly, boundary })
    }

    pub fn square(l: usize, boundary: Boundary) -> Result<Self> {
        Self::new(l, l, boundary)
    }

    pub fn num_sites(&self) -> usize {
        self.lx * self.ly
    }

    #[inline]
    pub fn coords(&self, i: usize) -> (usize, usize) {
        (i % self.lx, i / self.lx)
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.lx + x
    }

    fn check(&self, i: usize) -> Result<()> {
        if i >= self.num_sites() {
            Err(Error::IndexOutOfRange {
                index: i,
                sites: self.num_sites(),
            })
        } else {
            Ok(())
        }
    }

    /// Integer displacement components after applying the boundary rule.
    fn displacement(&self, i: usize, j: usize) -> (i64, i64) {
        let (xi, yi) = self.coords(i);
        let (xj, yj) = self.coords(j);
        let mut dx = (xi as i64 - xj as i64).abs();
        let mut dy = (yi as i64 - yj as i64).abs();
        if self.boundary == Boundary::Pbc {
            dx = dx.min(self.lx as i64 - dx);
            dy = dy.min(self.ly as i64 - dy);
        }
        (dx, dy)
    }

    /// Squared distance as an exact integer.
    pub fn distance_sq(&self, i: usize, j: usize) -> Result<i64> {
        self.check(i)?;
        self.check(j)?;
        let (dx, dy) = self.displacement(i, j);
        Ok(dx * dx + dy * dy)
    }

    pub fn pair_distance(&self, i: usize, j: usize) -> Result<f64> {
        if i == j {
            return Err(Error::Domain(format!("pair distance needs i != j (got {i})")));
        }
        Ok((self.distance_sq(i, j)? as f64).sqrt())
    }

    /// Perimeter sites of an open lattice, in index order.
    pub fn boundary_sites(&self) -> Result<Vec<usize>> {
        if self.boundary != Boundary::Obc {
            return Err(Error::Usage(
                "boundary sites are only defined for open boundaries".into(),
            ));
        }
        Ok((0..self.num_sites())
            .filter(|&i| {
                let (x, y) = self.coords(i);
                x == 0 || y == 0 || x == self.lx - 1 || y == self.ly - 1
            })
            .collect())
    }
}

/// How strictly the periodic-size constraint `L > 2 R0` is enforced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffPolicy {
    /// Require `L > 2 R0` in both directions under PBC.
    #[default]
    Strict,
    /// Accept `L = 2 R0`; pairs at displacement exactly `L/2` are counted once.
    AllowHalfLength,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub i: usize,
    pub j: usize,
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteractionTable {
    pub rb: f64,
    pub r0: f64,
    pairs: Vec<Pair>,
    /// Per-site adjacency: (neighbor, coupling).
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl InteractionTable {
    pub fn build(spec: &LatticeSpec, rb: f64, r0: f64) -> Result<Self> {
        Self::build_with(spec, rb, r0, CutoffPolicy::Strict)
    }

    pub fn build_with(
        spec: &LatticeSpec,
        rb: f64,
        r0: f64,
        policy: CutoffPolicy,
    ) -> Result<Self> {
        if !(rb > 0.0 && rb.is_finite()) {
            return Err(Error::Config(format!("blockade radius must be positive, got {rb}")));
        }
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(Error::Config(format!("cutoff must be positive, got {r0}")));
        }
        if spec.boundary == Boundary::Pbc {
            let min_l = spec.lx.min(spec.ly) as f64;
            let ok = match policy {
                CutoffPolicy::Strict => min_l > 2.0 * r0,
                CutoffPolicy::AllowHalfLength => min_l >= 2.0 * r0,
            };
            if !ok {
                return Err(Error::Config(format!(
                    "periodic lattice {}x{} with cutoff R0={r0} violates L {} 2*R0",
                    spec.lx,
                    spec.ly,
                    if policy == CutoffPolicy::Strict { ">" } else { ">=" }
                )));
            }
        }
        let r0_sq = r0 * r0;
        let rb6 = rb.powi(6);
        let n = spec.num_sites();
        let mut pairs = Vec::new();
        let mut neighbors = vec![Vec::new(); n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d2 = spec.distance_sq(i, j)?;
                // d2 is an exact integer, so membership is bit-stable.
                if (d2 as f64) <= r0_sq {
                    let v = rb6 / (d2 as f64).powi(3);
                    pairs.push(Pair { i, j, v });
                    neighbors[i].push((j, v));
                    neighbors[j].push((i, v));
                }
            }
        }
        Ok(Self {
            rb,
            r0,
            pairs,
            neighbors,
        })
    }

    /// A table with no couplings (isolated sites).
    pub fn empty(num_sites: usize) -> Self {
        Self {
            rb: 0.0,
            r0: 0.0,
            pairs: Vec::new(),
            neighbors: vec![Vec::new(); num_sites],
        }
    }

    /// A table from explicit couplings, for custom geometries.
    pub fn from_pairs(num_sites: usize, pairs: Vec<Pair>) -> Result<Self> {
        let mut neighbors = vec![Vec::new(); num_sites];
        let mut seen = std::collections::HashSet::new();
        for p in &pairs {
            if p.i >= p.j || p.j >= num_sites {
                return Err(Error::Validation(format!(
                    "pair ({}, {}) must satisfy i < j < {num_sites}",
                    p.i, p.j
                )));
            }
            if !(p.v > 0.0) || !seen.insert((p.i, p.j)) {
                return Err(Error::Validation(format!(
                    "pair ({}, {}) repeated or with non-positive coupling",
                    p.i, p.j
                )));
            }
            neighbors[p.i].push((p.j, p.v));
            neighbors[p.j].push((p.i, p.v));
        }
        Ok(Self {
            rb: f64::NAN,
            r0: f64::NAN,
            pairs,
            neighbors,
        })
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.neighbors[i]
    }

    pub fn num_sites(&self) -> usize {
        self.neighbors.len()
    }

    /// Coupling between two sites, zero if outside the cutoff.
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.neighbors
            .get(i)
            .and_then(|nb| nb.iter().find(|&&(k, _)| k == j))
            .map_or(0.0, |&(_, v)| v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_disk_count(r0: f64) -> usize {
        let r = r0.ceil() as i64;
        let mut count = 0;
        for x in -r..=r {
            for y in -r..=r {
                let d2 = x * x + y * y;
                if d2 > 0 && (d2 as f64) <= r0 * r0 {
                    count += 1;
                }
            }
        }
        count
    }

    #[test]
    fn distances_follow_boundary_rule() {
        let pbc = LatticeSpec::square(8, Boundary::Pbc).unwrap();
        let obc = LatticeSpec::square(8, Boundary::Obc).unwrap();
        assert_eq!(pbc.pair_distance(pbc.index(0, 0), pbc.index(7, 0)).unwrap(), 1.0);
        assert_eq!(obc.pair_distance(obc.index(0, 0), obc.index(7, 0)).unwrap(), 7.0);
        assert_eq!(pbc.pair_distance(pbc.index(0, 0), pbc.index(4, 3)).unwrap(), 5.0);
    }

    #[test]
    fn invalid_index_is_reported() {
        let s = LatticeSpec::square(4, Boundary::Obc).unwrap();
        assert!(matches!(
            s.pair_distance(0, 16),
            Err(Error::IndexOutOfRange { index: 16, sites: 16 })
        ));
        assert!(LatticeSpec::new(1, 4, Boundary::Obc).is_err());
    }

    #[test]
    fn interior_neighbor_counts_match_disk() {
        for r0 in [2.0, 3.0, 4.0, 5.0] {
            let spec = LatticeSpec::square(13, Boundary::Obc).unwrap();
            let table = InteractionTable::build(&spec, 1.2, r0).unwrap();
            let center = spec.index(6, 6);
            assert_eq!(table.neighbors(center).len(), brute_disk_count(r0), "R0={r0}");
        }
        let spec = LatticeSpec::square(9, Boundary::Pbc).unwrap();
        let table = InteractionTable::build(&spec, 1.2, 4.0).unwrap();
        assert!(table.neighbors.iter().all(|nb| nb.len() == 48));
        let t2 = InteractionTable::build(&LatticeSpec::square(6, Boundary::Pbc).unwrap(), 1.2, 2.0)
            .unwrap();
        assert!(t2.neighbors.iter().all(|nb| nb.len() == 12));
    }

    #[test]
    fn nearest_neighbor_coupling() {
        let spec = LatticeSpec::square(3, Boundary::Obc).unwrap();
        let t = InteractionTable::build(&spec, 1.2, 4.0).unwrap();
        assert!((t.coupling(0, 1) - 2.985984).abs() < 1e-12);
        // cutoff is inclusive: d = R0 exactly
        let t1 = InteractionTable::build(&spec, 1.2, 2.0).unwrap();
        assert!(t1.coupling(0, 2) > 0.0);
        assert_eq!(t1.coupling(0, 8), 0.0);
        for p in t.pairs() {
            assert!(p.i < p.j && p.v > 0.0);
        }
    }

    #[test]
    fn periodic_cutoff_constraint() {
        let spec = LatticeSpec::square(8, Boundary::Pbc).unwrap();
        let err = InteractionTable::build(&spec, 1.2, 4.0).unwrap_err();
        assert!(matches!(err, Error::Config(ref m) if m.contains("2*R0")));
        let t = InteractionTable::build_with(&spec, 1.2, 4.0, CutoffPolicy::AllowHalfLength)
            .unwrap();
        // (+-4, 0) and (0, +-4) fold onto one site each.
        assert!(t.neighbors.iter().all(|nb| nb.len() == 46));
        assert!(InteractionTable::build(&spec, 1.2, 3.5).is_ok());
    }

    #[test]
    fn boundary_site_counts() {
        for (l, n) in [(4, 12), (2, 4), (16, 60)] {
            let s = LatticeSpec::square(l, Boundary::Obc).unwrap();
            assert_eq!(s.boundary_sites().unwrap().len(), n);
        }
        let p = LatticeSpec::square(4, Boundary::Pbc).unwrap();
        assert!(matches!(p.boundary_sites(), Err(Error::Usage(_))));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn distance_symmetric(l in 2usize..9, a in 0usize..64, b in 0usize..64, pbc: bool) {
                let s = LatticeSpec::square(l, if pbc { Boundary::Pbc } else { Boundary::Obc }).unwrap();
                let (i, j) = (a % s.num_sites(), b % s.num_sites());
                prop_assume!(i != j);
                prop_assert_eq!(s.pair_distance(i, j).unwrap(), s.pair_distance(j, i).unwrap());
            }

            #[test]
            fn periodic_distance_multiset_is_site_independent(l in 2usize..8, a in 0usize..49) {
                let s = LatticeSpec::square(l, Boundary::Pbc).unwrap();
                let site = a % s.num_sites();
                let profile = |i: usize| {
                    let mut d: Vec<i64> = (0..s.num_sites())
                        .filter(|&j| j != i)
                        .map(|j| s.distance_sq(i, j).unwrap())
                        .collect();
                    d.sort_unstable();
                    d
                };
                prop_assert_eq!(profile(0), profile(site));
            }

            #[test]
            fn coupling_decreases_with_distance(rb in 0.5f64..2.0) {
                let s = LatticeSpec::square(11, Boundary::Obc).unwrap();
                let t = InteractionTable::build(&s, rb, 5.0).unwrap();
                let mut by_d: Vec<(i64, f64)> = t.neighbors(0).iter()
                    .map(|&(j, v)| (s.distance_sq(0, j).unwrap(), v))
                    .collect();
                by_d.sort_by(|a, b| a.0.cmp(&b.0));
                for w in by_d.windows(2) {
                    if w[0].0 < w[1].0 {
                        prop_assert!(w[0].1 > w[1].1);
                    }
                }
            }
        }
    }
}
