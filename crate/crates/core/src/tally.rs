//! Per-walk accounting of local times and everything derived from them.
//!
//! Sites are stored sparsely: the visited set of an `n`-step transient walk
//! has `O(n)` points scattered through `Z^d`, so a hash map keyed by a packed
//! coordinate word keeps memory proportional to what was actually visited.

use std::collections::BTreeMap;

use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::lattice::{direction_axis, LatticePoint, StepEvent, WalkConfig, Walker};

/// Packs `d` signed coordinates into a `u128` with `128 / d` bits each.
///
/// Translating a packed key by a small vector is plain integer addition as
/// long as every coordinate stays inside its field, which the horizon bound
/// in [`SiteCodec::new`] guarantees.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SiteCodec {
    dimension: usize,
    bits: u32,
    bias: i64,
}

impl SiteCodec {
    /// Fails when coordinates reachable within `horizon` steps (plus a margin
    /// of 2 for neighbor probes) would not fit in a field.
    pub fn new(dimension: usize, horizon: u64) -> Result<Self> {
        if dimension < 3 {
            return Err(Error::Dimension(dimension));
        }
        let bits = (128 / dimension).min(63) as u32;
        let bias = 1i64 << (bits - 1);
        if horizon.saturating_add(2) >= bias as u64 {
            return Err(Error::HorizonTooLarge { dimension, horizon });
        }
        Ok(SiteCodec {
            dimension,
            bits,
            bias,
        })
    }

    #[inline]
    pub fn encode(&self, coords: &[i64]) -> u128 {
        debug_assert_eq!(coords.len(), self.dimension);
        coords.iter().enumerate().fold(0u128, |key, (i, &c)| {
            key | (((c + self.bias) as u128) << (i as u32 * self.bits))
        })
    }

    pub fn decode(&self, key: u128) -> LatticePoint {
        let mask = (1u128 << self.bits) - 1;
        let coords: SmallVec<[i64; 4]> = (0..self.dimension)
            .map(|i| ((key >> (i as u32 * self.bits)) & mask) as i64 - self.bias)
            .collect();
        LatticePoint::from_coords(coords)
    }

    /// Signed key offset of a translation vector.
    #[inline]
    pub fn offset(&self, vector: &[i64]) -> i128 {
        vector
            .iter()
            .enumerate()
            .map(|(i, &c)| (c as i128) << (i as u32 * self.bits))
            .sum()
    }

    #[inline]
    pub fn unit_offset(&self, axis: usize, delta: i64) -> i128 {
        (delta as i128) << (axis as u32 * self.bits)
    }

    #[inline]
    pub fn translate(key: u128, offset: i128) -> u128 {
        (key as i128).wrapping_add(offset) as u128
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct SiteRecord {
    local_time: u64,
    first_visit: u64,
}

/// Histograms of local-time levels.
///
/// `q[k]` counts sites with `xi(z, n) = k`. `u[k]` counts sites visited by
/// time `n` whose local time at the cap horizon equals `k`; it depends on the
/// cap and equals `q` when the cap is `n` itself.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LevelCounts {
    pub horizon: u64,
    pub cap: u64,
    pub q: BTreeMap<u64, u64>,
    pub u: BTreeMap<u64, u64>,
}

impl LevelCounts {
    pub fn q(&self, k: u64) -> u64 {
        self.q.get(&k).copied().unwrap_or(0)
    }

    pub fn u(&self, k: u64) -> u64 {
        self.u.get(&k).copied().unwrap_or(0)
    }
}

/// Counts of `Upsilon`-new (`Upsilon = {0, e_1}`) and `Gamma`-new
/// (`Gamma = e_1 + S(1)`) points among `S_1..S_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NewPointCounters {
    pub zeta: u64,
    pub nu: u64,
}

/// Per-run statistics that reduce across replications.
///
/// Merging sums histograms and counters and takes the max of maxima, so it is
/// associative and commutative.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BoardSummary {
    pub replications: u64,
    pub steps: u64,
    pub distinct_sites: u64,
    pub max_local_time: u64,
    pub q: BTreeMap<u64, u64>,
    pub zeta: u64,
    pub nu: u64,
}

impl BoardSummary {
    pub fn merge(mut self, other: &BoardSummary) -> BoardSummary {
        self.replications += other.replications;
        self.steps += other.steps;
        self.distinct_sites += other.distinct_sites;
        self.max_local_time = self.max_local_time.max(other.max_local_time);
        for (&k, &c) in &other.q {
            *self.q.entry(k).or_insert(0) += c;
        }
        self.zeta += other.zeta;
        self.nu += other.nu;
        self
    }
}

/// One site of a serialized board.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteSnapshot {
    pub coords: Vec<i64>,
    pub local_time: u64,
    pub first_visit: u64,
}

pub const BOARD_SCHEMA: &str = "srwlab.board.v1";

/// JSON form of a board: sites listed in first-visit order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoardSnapshot {
    pub schema: String,
    pub dimension: usize,
    pub steps: u64,
    pub zeta: u64,
    pub nu: u64,
    pub sites: Vec<SiteSnapshot>,
}

/// Local-time accounting for a single walk stream.
#[derive(Debug, Clone)]
pub struct TallyBoard {
    codec: SiteCodec,
    dimension: usize,
    steps: u64,
    sites: FxHashMap<u128, SiteRecord>,
    visit_order: Vec<(u64, u128)>,
    counters: NewPointCounters,
    track_new_points: bool,
    upsilon_offset: i128,
    gamma_offsets: Vec<i128>,
}

impl TallyBoard {
    /// An empty board able to absorb up to `horizon` steps.
    pub fn new(dimension: usize, horizon: u64) -> Result<Self> {
        let codec = SiteCodec::new(dimension, horizon)?;
        let e1 = codec.unit_offset(0, 1);
        // Gamma = e_1 + S(1): e_1 + e_i for every direction i.
        let gamma_offsets = (1..=2 * dimension)
            .map(|i| {
                let (axis, delta) = direction_axis(dimension, i);
                e1 + codec.unit_offset(axis, delta)
            })
            .collect();
        Ok(TallyBoard {
            codec,
            dimension,
            steps: 0,
            sites: FxHashMap::default(),
            visit_order: Vec::new(),
            counters: NewPointCounters::default(),
            track_new_points: true,
            upsilon_offset: e1,
            gamma_offsets,
        })
    }

    /// Skips the `Upsilon`/`Gamma` probes (2d + 1 extra lookups per step).
    pub fn without_new_points(mut self) -> Self {
        self.track_new_points = false;
        self
    }

    pub fn tracks_new_points(&self) -> bool {
        self.track_new_points
    }

    /// Tallies the full seeded walk of `config`.
    pub fn from_walk(config: &WalkConfig) -> Result<Self> {
        let mut board = TallyBoard::new(config.dimension, config.horizon)?;
        board.run(config, config.horizon);
        Ok(board)
    }

    /// Same as [`TallyBoard::from_walk`] without the new-point probes.
    pub fn from_walk_fast(config: &WalkConfig) -> Result<Self> {
        let mut board = TallyBoard::new(config.dimension, config.horizon)?.without_new_points();
        board.run(config, config.horizon);
        Ok(board)
    }

    fn run(&mut self, config: &WalkConfig, steps: u64) {
        let mut walker = Walker::from_config(config);
        self.sites.reserve((steps as usize).min(1 << 24));
        self.drive(&mut walker, steps);
    }

    fn drive(&mut self, walker: &mut Walker, steps: u64) {
        let mut key = self.codec.encode(walker.position());
        for _ in 0..steps {
            let (axis, delta) = walker.step();
            key = SiteCodec::translate(key, self.codec.unit_offset(axis, delta));
            self.record(key);
        }
    }

    /// Takes `steps` more steps of `walker`, whose clock must agree with the
    /// board. Lets one trajectory be inspected at nested horizons.
    pub fn advance(&mut self, walker: &mut Walker, steps: u64) -> Result<()> {
        if walker.dimension() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: walker.dimension(),
            });
        }
        if walker.time() != self.steps {
            return Err(Error::OutOfOrder {
                expected: self.steps + 1,
                got: walker.time() + 1,
            });
        }
        let end = self.steps.saturating_add(steps);
        if end.saturating_add(2) >= self.codec.bias as u64 {
            return Err(Error::HorizonTooLarge {
                dimension: self.dimension,
                horizon: end,
            });
        }
        self.drive(walker, steps);
        Ok(())
    }

    /// Feeds one step event. Events must arrive in time order.
    pub fn ingest(&mut self, event: &StepEvent) -> Result<()> {
        if event.time != self.steps + 1 {
            return Err(Error::OutOfOrder {
                expected: self.steps + 1,
                got: event.time,
            });
        }
        if event.position.dimension() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: event.position.dimension(),
            });
        }
        if event.time.saturating_add(2) >= self.codec.bias as u64 {
            return Err(Error::HorizonTooLarge {
                dimension: self.dimension,
                horizon: event.time,
            });
        }
        let key = self.codec.encode(event.position.coords());
        self.record(key);
        Ok(())
    }

    #[inline]
    fn record(&mut self, key: u128) {
        self.steps += 1;
        let time = self.steps;
        if self.track_new_points {
            self.probe_new_points(key);
        }
        let entry = self.sites.entry(key).or_insert(SiteRecord {
            local_time: 0,
            first_visit: time,
        });
        if entry.local_time == 0 {
            self.visit_order.push((time, key));
        }
        entry.local_time += 1;
    }

    /// `S_j` is new for a set `A` when no earlier `S_m` (`1 <= m < j`) lies in
    /// `S_j + A`; the map holds exactly those earlier positions.
    #[inline]
    fn probe_new_points(&mut self, key: u128) {
        if self.steps == 1 {
            self.counters.zeta += 1;
            self.counters.nu += 1;
            return;
        }
        let here = self.sites.contains_key(&key);
        if !here
            && !self
                .sites
                .contains_key(&SiteCodec::translate(key, self.upsilon_offset))
        {
            self.counters.zeta += 1;
        }
        // -e_1 is in S(1), so S_j itself belongs to S_j + Gamma.
        if !here
            && self
                .gamma_offsets
                .iter()
                .all(|&o| !self.sites.contains_key(&SiteCodec::translate(key, o)))
        {
            self.counters.nu += 1;
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn steps_consumed(&self) -> u64 {
        self.steps
    }

    pub fn distinct_sites(&self) -> u64 {
        self.sites.len() as u64
    }

    pub fn codec(&self) -> &SiteCodec {
        &self.codec
    }

    /// `xi(z, n)`.
    pub fn local_time(&self, z: &LatticePoint) -> u64 {
        self.local_time_of_key(self.codec.encode(z.coords()))
    }

    #[inline]
    pub(crate) fn local_time_of_key(&self, key: u128) -> u64 {
        self.sites.get(&key).map_or(0, |r| r.local_time)
    }

    /// Time of the first visit to `z`, if any.
    pub fn first_visit(&self, z: &LatticePoint) -> Option<u64> {
        self.sites
            .get(&self.codec.encode(z.coords()))
            .map(|r| r.first_visit)
    }

    /// Visited sites with their local times, in first-visit order.
    pub fn visited(&self) -> impl Iterator<Item = (LatticePoint, u64)> + '_ {
        self.visit_order
            .iter()
            .map(move |&(_, key)| (self.codec.decode(key), self.sites[&key].local_time))
    }

    /// `xi(n) = max_z xi(z, n)`.
    pub fn max_local_time(&self) -> u64 {
        self.sites.values().map(|r| r.local_time).max().unwrap_or(0)
    }

    /// `Xi(set + shift, n)`: total local time of the translated set.
    pub fn occupation_time(&self, set: &[LatticePoint], shift: &LatticePoint) -> u64 {
        set.iter()
            .map(|a| self.local_time_of_key(self.codec.encode(a.add(shift).coords())))
            .sum()
    }

    /// `Xi(z, n) = Xi(S(1) + z, n)`.
    pub fn ball_occupation(&self, z: &LatticePoint) -> u64 {
        self.occupation_time(&LatticePoint::unit_sphere(self.dimension), z)
    }

    /// `Xi*(A, n) = sup_u Xi(A + u, n)`.
    ///
    /// Only shifts with `A + u` meeting the visited set contribute, so each
    /// visited `v` pushes its local time onto the shifts `v - a`, `a` in `A`.
    pub fn max_occupation_over_translates(&self, set: &[LatticePoint]) -> u64 {
        self.occupation_by_translate(set)
            .into_values()
            .max()
            .unwrap_or(0)
    }

    fn occupation_by_translate(&self, set: &[LatticePoint]) -> FxHashMap<u128, u64> {
        let distinct: FxHashSet<&LatticePoint> = set.iter().collect();
        let offsets: Vec<i128> = distinct
            .iter()
            .map(|a| -self.codec.offset(a.coords()))
            .collect();
        let mut acc: FxHashMap<u128, u64> = FxHashMap::default();
        acc.reserve(self.sites.len() * offsets.len().min(8));
        for (&key, record) in &self.sites {
            for &o in &offsets {
                *acc.entry(SiteCodec::translate(key, o)).or_insert(0) += record.local_time;
            }
        }
        acc
    }

    /// `(xi(z, n), Xi(z, n))` for every `z` with a positive entry in either
    /// coordinate.
    pub fn point_ball_pairs(&self) -> Vec<(u64, u64)> {
        let ball = self.occupation_by_translate(&LatticePoint::unit_sphere(self.dimension));
        let mut pairs: Vec<(u64, u64)> = ball
            .iter()
            .map(|(&key, &xi_ball)| (self.local_time_of_key(key), xi_ball))
            .collect();
        // Sites visited but with an empty sphere around them.
        for (&key, record) in &self.sites {
            if !ball.contains_key(&key) {
                pairs.push((record.local_time, 0));
            }
        }
        pairs
    }

    /// `(xi(z, n), xi(z + e_i, n))` for every `z` with either entry positive
    /// and every direction index `i`.
    pub fn neighbor_pairs(&self) -> Vec<(u64, u64)> {
        let offsets: Vec<i128> = (1..=2 * self.dimension)
            .map(|i| {
                let (axis, delta) = direction_axis(self.dimension, i);
                self.codec.unit_offset(axis, delta)
            })
            .collect();
        let mut pairs = Vec::with_capacity(self.sites.len() * offsets.len() * 2);
        for (&key, record) in &self.sites {
            for &o in &offsets {
                let neighbor = SiteCodec::translate(key, o);
                // (xi(z), xi(z + e_i)) with z visited.
                pairs.push((record.local_time, self.local_time_of_key(neighbor)));
                // (0, xi(z)) from the unvisited z - e_i.
                if !self.sites.contains_key(&SiteCodec::translate(key, -o)) {
                    pairs.push((0, record.local_time));
                }
            }
        }
        pairs
    }

    /// Exact histogram of `xi(z, n)` over visited sites (`u` mirrors `q`).
    pub fn level_counts(&self) -> LevelCounts {
        let mut q = BTreeMap::new();
        for r in self.sites.values() {
            *q.entry(r.local_time).or_insert(0) += 1;
        }
        LevelCounts {
            horizon: self.steps,
            cap: self.steps,
            u: q.clone(),
            q,
        }
    }

    /// Level counts at time `horizon <= steps_consumed` with `u` computed
    /// against this board's full horizon as the cap.
    pub fn level_counts_at(&self, horizon: u64) -> Result<LevelCounts> {
        if horizon > self.steps {
            return Err(Error::CapShorterThanHorizon {
                cap: self.steps,
                horizon,
            });
        }
        let mut u = BTreeMap::new();
        for &(t, key) in &self.visit_order {
            if t > horizon {
                break;
            }
            *u.entry(self.sites[&key].local_time).or_insert(0) += 1;
        }
        Ok(LevelCounts {
            horizon,
            cap: self.steps,
            q: BTreeMap::new(),
            u,
        })
    }

    /// Level counts of this board with `U(k, n)` taken against `cap_board`.
    pub fn level_counts_with_cap(&self, cap_board: &TallyBoard) -> Result<LevelCounts> {
        self.check_extension(cap_board)?;
        let mut counts = self.level_counts();
        counts.cap = cap_board.steps;
        counts.u.clear();
        for &(_, key) in &self.visit_order {
            *counts
                .u
                .entry(cap_board.local_time_of_key(key))
                .or_insert(0) += 1;
        }
        Ok(counts)
    }

    /// `eta(n) = max_{0 <= k <= n} xi(S_k, cap)`, with `cap_board` standing in
    /// for the infinite horizon. `S_0` is the origin.
    pub fn eta_statistic(&self, cap_board: &TallyBoard) -> Result<u64> {
        self.check_extension(cap_board)?;
        let origin = cap_board.local_time(&LatticePoint::origin(self.dimension));
        Ok(self
            .visit_order
            .iter()
            .map(|&(_, key)| cap_board.local_time_of_key(key))
            .fold(origin, u64::max))
    }

    /// `eta` at an earlier time `horizon`, reading this board as the cap.
    pub fn eta_at(&self, horizon: u64) -> Result<u64> {
        if horizon > self.steps {
            return Err(Error::CapShorterThanHorizon {
                cap: self.steps,
                horizon,
            });
        }
        let origin = self.local_time(&LatticePoint::origin(self.dimension));
        Ok(self
            .visit_order
            .iter()
            .take_while(|&&(t, _)| t <= horizon)
            .map(|&(_, key)| self.sites[&key].local_time)
            .fold(origin, u64::max))
    }

    fn check_extension(&self, cap_board: &TallyBoard) -> Result<()> {
        if cap_board.dimension != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: cap_board.dimension,
            });
        }
        if cap_board.steps < self.steps {
            return Err(Error::CapShorterThanHorizon {
                cap: cap_board.steps,
                horizon: self.steps,
            });
        }
        let consistent = self.visit_order.iter().all(|&(t, key)| {
            cap_board
                .sites
                .get(&key)
                .is_some_and(|r| r.first_visit == t && r.local_time >= self.sites[&key].local_time)
        });
        if !consistent {
            return Err(Error::NotAnExtension);
        }
        Ok(())
    }

    pub fn new_point_counters(&self) -> NewPointCounters {
        self.counters
    }

    pub fn summary(&self) -> BoardSummary {
        BoardSummary {
            replications: 1,
            steps: self.steps,
            distinct_sites: self.distinct_sites(),
            max_local_time: self.max_local_time(),
            q: self.level_counts().q,
            zeta: self.counters.zeta,
            nu: self.counters.nu,
        }
    }

    pub fn snapshot(&self) -> BoardSnapshot {
        BoardSnapshot {
            schema: BOARD_SCHEMA.to_string(),
            dimension: self.dimension,
            steps: self.steps,
            zeta: self.counters.zeta,
            nu: self.counters.nu,
            sites: self
                .visit_order
                .iter()
                .map(|&(t, key)| SiteSnapshot {
                    coords: self.codec.decode(key).coords().to_vec(),
                    local_time: self.sites[&key].local_time,
                    first_visit: t,
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{generate_walk, scripted_walk};

    fn board_from(directions: &[usize]) -> TallyBoard {
        let mut board = TallyBoard::new(3, directions.len() as u64).unwrap();
        for e in scripted_walk(3, directions).unwrap() {
            board.ingest(&e).unwrap();
        }
        board
    }

    fn e(axis: usize) -> LatticePoint {
        LatticePoint::unit(3, axis)
    }

    #[test]
    fn codec_round_trips_and_translates() {
        let codec = SiteCodec::new(3, 1_000).unwrap();
        let p = LatticePoint::new(&[-7, 0, 913]);
        let key = codec.encode(p.coords());
        assert_eq!(codec.decode(key), p);
        let moved = SiteCodec::translate(key, codec.offset(&[1, -2, -913]));
        assert_eq!(codec.decode(moved), LatticePoint::new(&[-6, -2, 0]));
        assert!(SiteCodec::new(12, 5_000).is_err());
    }

    #[test]
    fn first_step_is_new_for_both_sets() {
        let board = board_from(&[1]);
        assert_eq!(board.local_time(&e(1)), 1);
        assert_eq!(
            board.new_point_counters(),
            NewPointCounters { zeta: 1, nu: 1 }
        );
    }

    #[test]
    fn back_and_forth_local_times() {
        // e_1, 0, e_1
        let board = board_from(&[1, 4, 1]);
        assert_eq!(board.local_time(&LatticePoint::origin(3)), 1);
        assert_eq!(board.local_time(&e(1)), 2);
        assert_eq!(board.distinct_sites(), 2);
        // S_2 = 0 has S_1 = e_1 = S_2 + e_1 before it: not Upsilon-new.
        // S_3 = e_1 was visited: not new.
        assert_eq!(board.new_point_counters().zeta, 1);
    }

    #[test]
    fn upsilon_new_uses_only_plus_e1_partner() {
        // e_2 then e_2 - e_1 ... S_2 = (-1,1,0): S_2 + e_1 = e_2 = S_1, not new.
        let board = board_from(&[2, 4]);
        assert_eq!(board.new_point_counters().zeta, 1);
        // e_2 then e_2 + e_1: S_2 + e_1 = (2,1,0) unvisited, S_2 fresh: new.
        let board = board_from(&[2, 1]);
        assert_eq!(board.new_point_counters().zeta, 2);
    }

    #[test]
    fn gamma_new_probes_sphere_around_e1_shift() {
        // S_j + Gamma = {S_j + 2e_1, S_j, S_j + e_1 +- e_2, S_j + e_1 +- e_3}.
        // S_1 = e_2, S_2 = e_2 + e_3: S_1 is not in S_2 + Gamma.
        assert_eq!(board_from(&[2, 3]).new_point_counters().nu, 2);
        // S_2 = -e_1 + e_2 has S_1 = e_2 at the ball center, which is outside Gamma.
        assert_eq!(board_from(&[2, 4]).new_point_counters().nu, 2);
        // S_3 = -e_2 has S_1 = e_1 = S_3 + e_1 + e_2 on its Gamma sphere.
        assert_eq!(board_from(&[1, 5, 4]).new_point_counters().nu, 2);
    }

    #[test]
    fn conservation_on_long_walk() {
        let config = WalkConfig::new(3, 200_000, 5, 0).unwrap();
        let board = TallyBoard::from_walk(&config).unwrap();
        let total: u64 = board.visited().map(|(_, k)| k).sum();
        assert_eq!(total, 200_000);
        let counts = board.level_counts();
        assert_eq!(counts.q.iter().map(|(k, c)| k * c).sum::<u64>(), 200_000);
        assert_eq!(counts.q.values().sum::<u64>(), board.distinct_sites());
    }

    #[test]
    fn ingest_matches_fast_path() {
        let config = WalkConfig::new(4, 5_000, 12, 3).unwrap();
        let fast = TallyBoard::from_walk(&config).unwrap();
        let mut slow = TallyBoard::new(4, 5_000).unwrap();
        for event in generate_walk(&config).unwrap() {
            slow.ingest(&event).unwrap();
        }
        assert_eq!(fast.snapshot(), slow.snapshot());
        assert_eq!(fast.new_point_counters(), slow.new_point_counters());
    }

    #[test]
    fn advance_in_chunks_matches_one_pass() {
        let config = WalkConfig::new(3, 5_000, 11, 2).unwrap();
        let whole = TallyBoard::from_walk(&config).unwrap();
        let mut board = TallyBoard::new(3, 5_000).unwrap();
        let mut walker = Walker::new(3, 11, 2);
        for chunk in [1_000, 1_500, 2_500] {
            board.advance(&mut walker, chunk).unwrap();
        }
        assert_eq!(board.summary(), whole.summary());
        assert!(board.advance(&mut Walker::new(3, 11, 2), 1).is_err());
        assert!(board.advance(&mut Walker::new(4, 11, 2), 1).is_err());
    }

    #[test]
    fn out_of_order_rejected() {
        let mut board = TallyBoard::new(3, 10).unwrap();
        let events = scripted_walk(3, &[1, 2]).unwrap();
        assert_eq!(
            board.ingest(&events[1]),
            Err(Error::OutOfOrder {
                expected: 1,
                got: 2
            })
        );
    }

    #[test]
    fn singleton_occupation_is_local_time() {
        let board = board_from(&[1, 4, 1, 4, 2]);
        let origin = LatticePoint::origin(3);
        assert_eq!(
            board.occupation_time(std::slice::from_ref(&origin), &origin),
            board.local_time(&origin)
        );
        // Far shift never near the path.
        let far = LatticePoint::new(&[40, 40, 40]);
        assert_eq!(
            board.occupation_time(&LatticePoint::unit_sphere(3), &far),
            0
        );
    }

    #[test]
    fn back_and_forth_fills_one_translate() {
        // Bounce 0 <-> e_1: every step lands in {0, e_1}.
        let dirs: Vec<usize> = (0..20).map(|k| if k % 2 == 0 { 1 } else { 4 }).collect();
        let board = board_from(&dirs);
        let pair = vec![LatticePoint::origin(3), e(1)];
        assert_eq!(board.max_occupation_over_translates(&pair), 20);
        assert_eq!(
            board.max_occupation_over_translates(&[LatticePoint::origin(3)]),
            10
        );
    }

    #[test]
    fn unit_sphere_max_occupation_on_star_path() {
        // Out to a neighbor of the origin and back, six times: every odd
        // position is on S(1).
        let dirs = [1, 4, 2, 5, 3, 6, 4, 1, 5, 2, 6, 3];
        let board = board_from(&dirs);
        let sphere = LatticePoint::unit_sphere(3);
        assert_eq!(board.max_occupation_over_translates(&sphere), 6);
        assert_eq!(board.ball_occupation(&LatticePoint::origin(3)), 6);
    }

    #[test]
    fn three_distinct_sites() {
        let board = board_from(&[1, 1, 1]);
        let counts = board.level_counts();
        assert_eq!(counts.q(1), 3);
        assert_eq!(counts.q.len(), 1);
    }

    #[test]
    fn eta_with_self_cap_is_max_local_time() {
        let config = WalkConfig::new(3, 20_000, 9, 2).unwrap();
        let board = TallyBoard::from_walk(&config).unwrap();
        assert_eq!(
            board.eta_statistic(&board).unwrap(),
            board
                .max_local_time()
                .max(board.local_time(&LatticePoint::origin(3)))
        );
        assert!(board.eta_statistic(&board).unwrap() >= board.max_local_time());
    }

    #[test]
    fn eta_against_extension() {
        let short = WalkConfig::new(3, 5_000, 9, 2).unwrap();
        let long = WalkConfig::new(3, 20_000, 9, 2).unwrap();
        let board = TallyBoard::from_walk(&short).unwrap();
        let cap = TallyBoard::from_walk(&long).unwrap();
        let eta = board.eta_statistic(&cap).unwrap();
        assert!(eta >= board.max_local_time());
        assert_eq!(eta, cap.eta_at(5_000).unwrap());
        assert!(matches!(
            cap.eta_statistic(&board),
            Err(Error::CapShorterThanHorizon { .. })
        ));
        let other = TallyBoard::from_walk(&WalkConfig::new(3, 20_000, 9, 3).unwrap()).unwrap();
        assert_eq!(board.eta_statistic(&other), Err(Error::NotAnExtension));
        let u = board.level_counts_with_cap(&cap).unwrap();
        assert_eq!(u.u.values().sum::<u64>(), board.distinct_sites());
        assert_eq!(cap.level_counts_at(5_000).unwrap().u, u.u);
    }

    #[test]
    fn point_ball_and_neighbor_pairs_cover_visits() {
        let board = board_from(&[1, 4, 1, 4, 2]);
        let pb = board.point_ball_pairs();
        // Center 0 was visited twice; its sphere holds e_1 (2 visits) + e_2 (1).
        assert!(pb.contains(&(2, 3)));
        assert!(pb.iter().all(|&(x, y)| x + y > 0));
        let nb = board.neighbor_pairs();
        // z = 0, i = 1: (xi(0), xi(e_1)) = (2, 2)
        assert!(nb.contains(&(2, 2)));
        assert!(nb.contains(&(0, 1)));
    }

    #[test]
    fn snapshot_serializes() {
        let board = board_from(&[1, 2, 4]);
        let json = serde_json::to_string(&board.snapshot()).unwrap();
        assert!(json.starts_with("{\"schema\":\"srwlab.board.v1\""));
        let back: BoardSnapshot = serde_json::from_str(&json).unwrap();
        assert_eq!(back.sites.len(), 3);
        assert_eq!(back.sites[0].coords, vec![1, 0, 0]);
    }
}
