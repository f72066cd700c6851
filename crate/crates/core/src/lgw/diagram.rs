//! Phase maps over the `(r, s)` plane and classification of their boundaries.

use serde::{Deserialize, Serialize};

use super::{minimize, FieldPoint, LgwCouplings, LgwPhase};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};

/// Jump of the largest field amplitude above which a boundary is first order.
///
/// The largest amplitude rather than the Euclidean norm is used so that a
/// continuous onset of both `Ψ` components is not counted twice.
pub const J_MIN: f64 = 0.05;

/// Evenly spaced axis including both end points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl GridAxis {
    pub fn new(min: f64, max: f64, points: usize) -> Result<Self> {
        if points < 2 || !(max > min) {
            return Err(Error::Config(format!(
                "grid axis needs max > min and >= 2 points, got [{min}, {max}] x {points}"
            )));
        }
        Ok(Self { min, max, points })
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.points - 1) as f64
    }

    pub fn value(&self, k: usize) -> f64 {
        self.min + k as f64 * self.step()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    None,
    SecondOrder,
    FirstOrder,
}

impl BoundaryKind {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryKind::None => "none",
            BoundaryKind::SecondOrder => "second_order",
            BoundaryKind::FirstOrder => "first_order",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseCell {
    pub r: f64,
    pub s: f64,
    pub phase: LgwPhase,
    pub field: FieldPoint,
    pub value: f64,
    /// Strongest boundary touching this cell.
    pub flag: BoundaryKind,
}

/// A pair of adjacent cells carrying different labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    pub phases: (LgwPhase, LgwPhase),
    pub jump: f64,
    pub kind: BoundaryKind,
    /// Midpoint `(r, s)` between the two cell centers.
    pub midpoint: (f64, f64),
}

impl BoundaryEdge {
    pub fn separates(&self, p: LgwPhase, q: LgwPhase) -> bool {
        self.phases == (p, q) || self.phases == (q, p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub edges: Vec<BoundaryEdge>,
}

impl BoundaryReport {
    pub fn between(&self, p: LgwPhase, q: LgwPhase) -> impl Iterator<Item = &BoundaryEdge> {
        self.edges.iter().filter(move |e| e.separates(p, q))
    }

    /// First-order edges grouped into contiguous segments; two edges are
    /// contiguous when some cell of one touches some cell of the other
    /// (including diagonally).
    pub fn first_order_segments(&self, r_points: usize) -> Vec<Vec<BoundaryEdge>> {
        let first: Vec<&BoundaryEdge> = self
            .edges
            .iter()
            .filter(|e| e.kind == BoundaryKind::FirstOrder)
            .collect();
        let coords = |i: usize| ((i % r_points) as i64, (i / r_points) as i64);
        let touch = |x: &BoundaryEdge, y: &BoundaryEdge| {
            [x.a, x.b].iter().any(|&p| {
                [y.a, y.b].iter().any(|&q| {
                    let (pi, pj) = coords(p);
                    let (qi, qj) = coords(q);
                    (pi - qi).abs() <= 1 && (pj - qj).abs() <= 1
                })
            })
        };
        let mut component = vec![usize::MAX; first.len()];
        let mut segments = Vec::new();
        for start in 0..first.len() {
            if component[start] != usize::MAX {
                continue;
            }
            let id = segments.len();
            component[start] = id;
            let mut stack = vec![start];
            let mut members = Vec::new();
            while let Some(k) = stack.pop() {
                members.push(*first[k]);
                for m in 0..first.len() {
                    if component[m] == usize::MAX && touch(first[k], first[m]) {
                        component[m] = id;
                        stack.push(m);
                    }
                }
            }
            segments.push(members);
        }
        segments
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagram {
    pub couplings: LgwCouplings,
    pub r_axis: GridAxis,
    pub s_axis: GridAxis,
    /// Cell `(i, j)` at `r_axis.value(i)`, `s_axis.value(j)` is stored at `j * r_points + i`.
    pub cells: Vec<PhaseCell>,
    pub boundaries: BoundaryReport,
}

impl PhaseDiagram {
    pub fn cell(&self, i: usize, j: usize) -> &PhaseCell {
        &self.cells[j * self.r_axis.points + i]
    }

    pub fn labels(&self) -> Vec<LgwPhase> {
        let mut seen: Vec<LgwPhase> = Vec::new();
        for c in &self.cells {
            if !seen.contains(&c.phase) {
                seen.push(c.phase);
            }
        }
        seen
    }
}

/// Minimize on every grid cell and classify the boundaries between labels.
pub fn phase_diagram(
    couplings: &LgwCouplings,
    r_axis: GridAxis,
    s_axis: GridAxis,
    execution: Execution,
) -> Result<PhaseDiagram> {
    let nr = r_axis.points;
    let ns = s_axis.points;
    let results = exec::map_range(execution, nr * ns, |idx| {
        let (i, j) = (idx % nr, idx / nr);
        let (r, s) = (r_axis.value(i), s_axis.value(j));
        minimize(&couplings.at(r, s)).map(|m| PhaseCell {
            r,
            s,
            phase: m.phase,
            field: m.field,
            value: m.value,
            flag: BoundaryKind::None,
        })
    });
    let mut cells = results.into_iter().collect::<Result<Vec<_>>>()?;

    let mut edges = Vec::new();
    for j in 0..ns {
        for i in 0..nr {
            let a = j * nr + i;
            let mut neighbors = Vec::with_capacity(2);
            if i + 1 < nr {
                neighbors.push(a + 1);
            }
            if j + 1 < ns {
                neighbors.push(a + nr);
            }
            for b in neighbors {
                let (ca, cb) = (&cells[a], &cells[b]);
                if ca.phase == cb.phase {
                    continue;
                }
                let jump = (ca.field.amplitude() - cb.field.amplitude()).abs();
                let kind = if jump > J_MIN {
                    BoundaryKind::FirstOrder
                } else {
                    BoundaryKind::SecondOrder
                };
                edges.push(BoundaryEdge {
                    a,
                    b,
                    phases: (ca.phase, cb.phase),
                    jump,
                    kind,
                    midpoint: (0.5 * (ca.r + cb.r), 0.5 * (ca.s + cb.s)),
                });
            }
        }
    }
    for e in &edges {
        for k in [e.a, e.b] {
            cells[k].flag = cells[k].flag.max(e.kind);
        }
    }
    Ok(PhaseDiagram {
        couplings: *couplings,
        r_axis,
        s_axis,
        cells,
        boundaries: BoundaryReport { edges },
    })
}
