//! Occupation counts of the origin, of `e_1`, and of the unit sphere, over a
//! truncated horizon and completed to the infinite horizon.
//!
//! Completion: once the cap is reached and the walk has left
//! `K = {0} ∪ S(1)`, the law of its first return to `K` from `x` is known
//! through the Green's function. Decomposing visits to `b ∈ K` at the first
//! entrance,
//!
//! `G(b - x) = sum_{a in K} H_K(x, a) G(b - a)`,
//!
//! so the hitting probabilities `H_K(x, ·)` solve a `(2d+1)`-square linear
//! system with a fixed matrix. The sampler either escapes with probability
//! `1 - sum_a H_K(x, a)`, or jumps to `a`, records the visit, and simulates a
//! fresh segment from there. The result is a draw from the infinite-horizon
//! law, up to the accuracy of `G`.

use crate::error::Result;
use crate::green::GreenFunction;
use crate::lattice::{DirectionSource, LatticePoint};

/// Visits to the origin, to `e_1`, and to `S(1)` (which contains `e_1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OccupationCounts {
    pub origin: u64,
    pub neighbor: u64,
    pub sphere: u64,
}

/// Which of `{0, e_1}` the walk reached first after time 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FirstOfPair {
    Origin,
    Neighbor,
    #[default]
    Neither,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OriginSample {
    pub truncated: OccupationCounts,
    pub truncated_first: FirstOfPair,
    pub completed: OccupationCounts,
    pub completed_first: FirstOfPair,
    /// The completion gave up after [`MAX_RETURNS`] re-entries.
    pub unresolved: bool,
}

/// Re-entries into `K` after the cap before the completion gives up.
pub const MAX_RETURNS: u32 = 10_000;

/// Hitting probabilities of `K = {0} ∪ S(1)` from outside `K`.
#[derive(Debug)]
pub struct Completion {
    green: GreenFunction,
    targets: Vec<LatticePoint>,
    inverse: Vec<Vec<f64>>,
}

impl Completion {
    pub fn new(dimension: usize) -> Result<Self> {
        let green = GreenFunction::new(dimension)?;
        let mut targets = vec![LatticePoint::origin(dimension)];
        targets.extend(LatticePoint::unit_sphere(dimension));
        let m: Vec<Vec<f64>> = targets
            .iter()
            .map(|b| {
                targets
                    .iter()
                    .map(|a| green.at(b.sub(a).coords()))
                    .collect()
            })
            .collect();
        let inverse = invert(m);
        Ok(Completion {
            green,
            targets,
            inverse,
        })
    }

    /// `K` in the order used by [`Completion::hitting`]: origin, then the
    /// unit sphere in direction order.
    pub fn targets(&self) -> &[LatticePoint] {
        &self.targets
    }

    /// `H_K(x, a)` for every `a` in `K`; `x` must lie outside `K`.
    pub fn hitting(&self, x: &[i64]) -> Vec<f64> {
        let g: Vec<f64> = self
            .targets
            .iter()
            .map(|b| {
                let diff: Vec<i64> = x.iter().zip(b.coords()).map(|(p, q)| p - q).collect();
                self.green.at(&diff)
            })
            .collect();
        self.inverse
            .iter()
            .map(|row| row.iter().zip(&g).map(|(m, v)| m * v).sum::<f64>().max(0.0))
            .collect()
    }
}

/// Gauss-Jordan inverse with partial pivoting of a small well-conditioned
/// matrix (the Green's matrix of `K` is symmetric positive definite).
fn invert(mut m: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .expect("nonempty");
        m.swap(col, pivot);
        inv.swap(col, pivot);
        let p = m[col][col];
        for j in 0..n {
            m[col][j] /= p;
            inv[col][j] /= p;
        }
        for row in 0..n {
            if row != col {
                let f = m[row][col];
                if f != 0.0 {
                    for j in 0..n {
                        m[row][j] -= f * m[col][j];
                        inv[row][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    inv
}

struct State {
    position: Vec<i64>,
    l1: u64,
    counts: OccupationCounts,
    first: FirstOfPair,
}

impl State {
    #[inline]
    fn step(&mut self, source: &mut DirectionSource) {
        let (axis, delta) = source.next_move();
        let c = self.position[axis];
        self.position[axis] = c + delta;
        // |c| grows iff the move points away from zero.
        if c == 0 || (c > 0) == (delta > 0) {
            self.l1 += 1;
        } else {
            self.l1 -= 1;
        }
        if self.l1 <= 1 {
            self.visit();
        }
    }

    #[inline]
    fn visit(&mut self) {
        if self.l1 == 0 {
            self.counts.origin += 1;
            if self.first == FirstOfPair::Neither {
                self.first = FirstOfPair::Origin;
            }
        } else if self.l1 == 1 {
            self.counts.sphere += 1;
            if self.position[0] == 1 {
                self.counts.neighbor += 1;
                if self.first == FirstOfPair::Neither {
                    self.first = FirstOfPair::Neighbor;
                }
            }
        }
    }

    fn jump(&mut self, to: &LatticePoint) {
        self.position.copy_from_slice(to.coords());
        self.l1 = to.l1_norm();
        self.visit();
    }
}

/// One replication: `cap` steps from the origin, then (with `completion`)
/// the remaining infinite-horizon visits. Segments after each re-entry are
/// `cap` steps long.
pub fn sample_origin(
    dimension: usize,
    cap: u64,
    seed: u64,
    stream: u64,
    completion: Option<&Completion>,
) -> OriginSample {
    let mut source = DirectionSource::new(dimension, seed, stream);
    let mut s = State {
        position: vec![0; dimension],
        l1: 0,
        counts: OccupationCounts::default(),
        first: FirstOfPair::Neither,
    };
    for _ in 0..cap {
        s.step(&mut source);
    }
    let mut sample = OriginSample {
        truncated: s.counts,
        truncated_first: s.first,
        ..OriginSample::default()
    };
    if let Some(completion) = completion {
        let mut returns = 0;
        loop {
            while s.l1 <= 1 {
                s.step(&mut source);
            }
            let h = completion.hitting(&s.position);
            let u = source.next_unit();
            let mut acc = 0.0;
            let hit = h.iter().position(|&p| {
                acc += p;
                u < acc
            });
            let Some(i) = hit else { break };
            returns += 1;
            if returns > MAX_RETURNS {
                sample.unresolved = true;
                break;
            }
            s.jump(&completion.targets()[i]);
            for _ in 0..cap {
                s.step(&mut source);
            }
        }
    }
    sample.completed = s.counts;
    sample.completed_first = s.first;
    sample
}

/// Upper bound on the expected number of visits to the origin after time
/// `cap`, from the local limit `P(S_k = 0) ~ 2 (d / (2 pi k))^(d/2)` on even
/// `k`: `sum_{k > cap} P(S_k = 0) <= (d/(2 pi))^(d/2) cap^(1-d/2) / (d/2 - 1)`.
/// It bounds the probability that a truncated walk misses a later return.
pub fn truncation_bound(dimension: usize, cap: u64) -> f64 {
    let d = dimension as f64;
    let n = cap.max(1) as f64;
    (d / (2.0 * std::f64::consts::PI)).powf(d / 2.0) * n.powf(1.0 - d / 2.0) / (d / 2.0 - 1.0)
}
