//! Simple symmetric random walk on `Z^d`.
//!
//! A walk starts at the origin and at each step moves by one of the `2d` unit
//! vectors, chosen uniformly. Direction index `i` in `1..=d` is `+e_i` and
//! `d + j` is `-e_j`. Time 0 (the origin) is never emitted.
//!
//! Randomness comes from ChaCha8 keyed by `seed` with `stream_id` selecting an
//! independent keystream, so replications can be sharded without any
//! coordination and are reproducible bit-for-bit.

use std::collections::HashSet;
use std::fmt;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

pub(crate) type Coords = SmallVec<[i64; 4]>;

/// A point of the integer lattice `Z^d`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatticePoint(Coords);

impl LatticePoint {
    pub fn origin(dimension: usize) -> Self {
        LatticePoint(SmallVec::from_elem(0, dimension))
    }

    pub fn new(coords: &[i64]) -> Self {
        LatticePoint(SmallVec::from_slice(coords))
    }

    /// The unit vector `e_axis` (`axis` is 1-based, `1..=d`).
    pub fn unit(dimension: usize, axis: usize) -> Self {
        assert!((1..=dimension).contains(&axis), "axis {axis} out of range");
        let mut p = Self::origin(dimension);
        p.0[axis - 1] = 1;
        p
    }

    /// The `2d` lattice points at Euclidean distance 1 from the origin, in
    /// direction-index order `e_1..e_d, -e_1..-e_d`.
    pub fn unit_sphere(dimension: usize) -> Vec<Self> {
        (1..=2 * dimension)
            .map(|i| Self::origin(dimension).shifted(dimension, i))
            .collect()
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn l1_norm(&self) -> u64 {
        self.0.iter().map(|c| c.unsigned_abs()).sum()
    }

    pub fn coordinate_sum(&self) -> i64 {
        self.0.iter().sum()
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dimension(), other.dimension());
        LatticePoint(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dimension(), other.dimension());
        LatticePoint(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// This point moved one step in direction `index` (1-based, `1..=2d`).
    pub fn shifted(&self, dimension: usize, index: usize) -> Self {
        let mut p = self.clone();
        let (axis, delta) = direction_axis(dimension, index);
        p.0[axis] += delta;
        p
    }

    pub(crate) fn from_coords(coords: Coords) -> Self {
        LatticePoint(coords)
    }
}

impl fmt::Debug for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0.as_slice())
    }
}

/// Zero-based axis and signed unit delta for a 1-based direction index.
#[inline]
pub fn direction_axis(dimension: usize, index: usize) -> (usize, i64) {
    debug_assert!((1..=2 * dimension).contains(&index));
    if index <= dimension {
        (index - 1, 1)
    } else {
        (index - dimension - 1, -1)
    }
}

/// Parameters identifying one reproducible trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub dimension: usize,
    pub horizon: u64,
    pub seed: u64,
    pub stream_id: u64,
}

impl WalkConfig {
    pub fn new(dimension: usize, horizon: u64, seed: u64, stream_id: u64) -> Result<Self> {
        let config = WalkConfig {
            dimension,
            horizon,
            seed,
            stream_id,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension < 3 {
            return Err(Error::Dimension(self.dimension));
        }
        if self.horizon == 0 {
            return Err(Error::ZeroHorizon);
        }
        Ok(())
    }
}

/// One step of a walk: the position `S_k` reached at time `k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepEvent {
    pub time: u64,
    pub position: LatticePoint,
    pub direction_index: usize,
}

/// Exact uniform sampler over `0..n` on top of 32-bit draws (Lemire's
/// multiply-shift with rejection).
#[derive(Debug, Clone, Copy)]
struct UniformIndex {
    range: u64,
    threshold: u32,
}

impl UniformIndex {
    fn new(range: u32) -> Self {
        UniformIndex {
            range: range as u64,
            threshold: range.wrapping_neg() % range,
        }
    }

    #[inline]
    fn sample<R: RngCore>(&self, rng: &mut R) -> usize {
        loop {
            let m = rng.next_u32() as u64 * self.range;
            if (m as u32) >= self.threshold {
                return (m >> 32) as usize;
            }
        }
    }
}

/// Seeded generator of direction indices for one stream.
#[derive(Debug, Clone)]
pub struct DirectionSource {
    rng: ChaCha8Rng,
    uniform: UniformIndex,
    dimension: usize,
}

impl DirectionSource {
    pub fn new(dimension: usize, seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        DirectionSource {
            rng,
            uniform: UniformIndex::new(2 * dimension as u32),
            dimension,
        }
    }

    /// Next direction index in `1..=2d`.
    #[inline]
    pub fn next_direction(&mut self) -> usize {
        self.uniform.sample(&mut self.rng) + 1
    }

    /// Next `(axis, delta)` pair, zero-based axis.
    #[inline]
    pub fn next_move(&mut self) -> (usize, i64) {
        let raw = self.uniform.sample(&mut self.rng);
        if raw < self.dimension {
            (raw, 1)
        } else {
            (raw - self.dimension, -1)
        }
    }

    /// A uniform draw on `[0, 1)` from the same stream.
    pub fn next_unit(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Low-level walk state: a mutable position updated in place. The hot loops
/// of the tally and Monte Carlo code use this instead of [`Walk`] to avoid
/// materializing a [`LatticePoint`] per step.
#[derive(Debug, Clone)]
pub struct Walker {
    position: Coords,
    time: u64,
    source: DirectionSource,
}

impl Walker {
    pub fn new(dimension: usize, seed: u64, stream_id: u64) -> Self {
        Walker {
            position: SmallVec::from_elem(0, dimension),
            time: 0,
            source: DirectionSource::new(dimension, seed, stream_id),
        }
    }

    pub fn from_config(config: &WalkConfig) -> Self {
        Self::new(config.dimension, config.seed, config.stream_id)
    }

    /// Takes one step and returns the zero-based axis and delta applied.
    #[inline]
    pub fn step(&mut self) -> (usize, i64) {
        let (axis, delta) = self.source.next_move();
        self.position[axis] += delta;
        self.time += 1;
        (axis, delta)
    }

    /// Moves the walker to `position` without advancing time.
    pub fn teleport(&mut self, position: &[i64]) {
        self.position.copy_from_slice(position);
    }

    pub fn position(&self) -> &[i64] {
        &self.position
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn dimension(&self) -> usize {
        self.position.len()
    }

    pub fn source_mut(&mut self) -> &mut DirectionSource {
        &mut self.source
    }
}

/// Iterator over the `horizon` steps of a seeded walk.
#[derive(Debug, Clone)]
pub struct Walk {
    position: Coords,
    time: u64,
    horizon: u64,
    source: DirectionSource,
}

impl Iterator for Walk {
    type Item = StepEvent;

    fn next(&mut self) -> Option<StepEvent> {
        if self.time >= self.horizon {
            return None;
        }
        let dimension = self.position.len();
        let index = self.source.next_direction();
        let (axis, delta) = direction_axis(dimension, index);
        self.position[axis] += delta;
        self.time += 1;
        Some(StepEvent {
            time: self.time,
            position: LatticePoint::from_coords(self.position.clone()),
            direction_index: index,
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.horizon - self.time) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for Walk {}

/// Streams the steps of the walk identified by `config`.
pub fn generate_walk(config: &WalkConfig) -> Result<Walk> {
    config.validate()?;
    Ok(Walk {
        position: SmallVec::from_elem(0, config.dimension),
        time: 0,
        horizon: config.horizon,
        source: DirectionSource::new(config.dimension, config.seed, config.stream_id),
    })
}

/// Builds the step events of a prescribed path from its direction indices.
pub fn scripted_walk(dimension: usize, directions: &[usize]) -> Result<Vec<StepEvent>> {
    if dimension < 3 {
        return Err(Error::Dimension(dimension));
    }
    let mut position = LatticePoint::origin(dimension);
    let mut events = Vec::with_capacity(directions.len());
    for (k, &index) in directions.iter().enumerate() {
        if !(1..=2 * dimension).contains(&index) {
            return Err(Error::Domain {
                name: "direction_index",
                value: index as f64,
                reason: "must lie in 1..=2d",
            });
        }
        position = position.shifted(dimension, index);
        events.push(StepEvent {
            time: k as u64 + 1,
            position: position.clone(),
            direction_index: index,
        });
    }
    Ok(events)
}

/// First time `i >= 1` (and `i <= cap`) at which the event stream lands in
/// `target_set`; `None` encodes "not hit", i.e. `T_A = infinity` at this cap.
pub fn first_hit<I>(events: I, target_set: &[LatticePoint], cap: u64) -> Result<Option<u64>>
where
    I: IntoIterator<Item = StepEvent>,
{
    if target_set.is_empty() {
        return Err(Error::EmptyTargetSet);
    }
    let targets: HashSet<&LatticePoint> = target_set.iter().collect();
    for event in events {
        if event.time > cap {
            break;
        }
        if targets.contains(&event.position) {
            return Ok(Some(event.time));
        }
    }
    Ok(None)
}

/// `T_A` for the seeded walk of `config`, truncated at `cap`.
pub fn first_hit_time(
    config: &WalkConfig,
    target_set: &[LatticePoint],
    cap: u64,
) -> Result<Option<u64>> {
    config.validate()?;
    if cap > config.horizon {
        return Err(Error::CapExceedsHorizon {
            cap,
            horizon: config.horizon,
        });
    }
    if target_set.is_empty() {
        return Err(Error::EmptyTargetSet);
    }
    for t in target_set {
        if t.dimension() != config.dimension {
            return Err(Error::DimensionMismatch {
                expected: config.dimension,
                got: t.dimension(),
            });
        }
    }
    // Positions are compared in place; only the target set is hashed.
    let targets: HashSet<&[i64]> = target_set.iter().map(|p| p.coords()).collect();
    let mut walker = Walker::from_config(config);
    while walker.time() < cap {
        walker.step();
        if targets.contains(walker.position()) {
            return Ok(Some(walker.time()));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_step_lands_on_unit_sphere() {
        let config = WalkConfig::new(3, 1, 99, 0).unwrap();
        let events: Vec<_> = generate_walk(&config).unwrap().collect();
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].time, 1);
        assert_eq!(events[0].position.l1_norm(), 1);
    }

    #[test]
    fn rejects_bad_configs() {
        assert_eq!(WalkConfig::new(2, 10, 0, 0), Err(Error::Dimension(2)));
        assert_eq!(WalkConfig::new(3, 0, 0, 0), Err(Error::ZeroHorizon));
    }

    #[test]
    fn same_config_same_trajectory() {
        let config = WalkConfig::new(3, 500, 17, 4).unwrap();
        let a: Vec<_> = generate_walk(&config).unwrap().collect();
        let b: Vec<_> = generate_walk(&config).unwrap().collect();
        assert_eq!(a, b);
        let other = WalkConfig {
            stream_id: 5,
            ..config
        };
        let c: Vec<_> = generate_walk(&other).unwrap().collect();
        assert_ne!(a, c);
    }

    #[test]
    fn walker_and_iterator_agree() {
        let config = WalkConfig::new(4, 300, 3, 11).unwrap();
        let mut walker = Walker::from_config(&config);
        for event in generate_walk(&config).unwrap() {
            walker.step();
            assert_eq!(walker.position(), event.position.coords());
            assert_eq!(walker.time(), event.time);
        }
    }

    #[test]
    fn steps_are_unit_moves_with_parity() {
        let config = WalkConfig::new(5, 2_000, 8, 1).unwrap();
        let mut prev = LatticePoint::origin(5);
        for event in generate_walk(&config).unwrap() {
            assert_eq!(event.position.sub(&prev).l1_norm(), 1);
            assert_eq!(
                event.position.coordinate_sum().rem_euclid(2) as u64,
                event.time % 2
            );
            assert_eq!(prev.shifted(5, event.direction_index), event.position);
            prev = event.position;
        }
    }

    #[test]
    fn forced_return_hits_origin_at_two() {
        let path = scripted_walk(3, &[1, 4, 2]).unwrap();
        let hit = first_hit(path, &[LatticePoint::origin(3)], 10).unwrap();
        assert_eq!(hit, Some(2));
    }

    #[test]
    fn target_missed_within_cap() {
        // +e_2 then straight up along e_2: never reaches e_1.
        let path = scripted_walk(3, &[2, 2, 2, 2, 2]).unwrap();
        let hit = first_hit(path, &[LatticePoint::unit(3, 1)], 5).unwrap();
        assert_eq!(hit, None);
    }

    #[test]
    fn empty_target_and_cap_errors() {
        let config = WalkConfig::new(3, 10, 0, 0).unwrap();
        assert_eq!(first_hit_time(&config, &[], 5), Err(Error::EmptyTargetSet));
        assert!(matches!(
            first_hit_time(&config, &[LatticePoint::origin(3)], 11),
            Err(Error::CapExceedsHorizon { .. })
        ));
    }

    #[test]
    fn first_hit_time_matches_event_stream() {
        let target = vec![LatticePoint::origin(3)];
        for stream in 0..50 {
            let config = WalkConfig::new(3, 400, 21, stream).unwrap();
            let direct = first_hit_time(&config, &target, 400).unwrap();
            let streamed = first_hit(generate_walk(&config).unwrap(), &target, 400).unwrap();
            assert_eq!(direct, streamed);
        }
    }

    #[test]
    fn unit_sphere_has_2d_points() {
        let sphere = LatticePoint::unit_sphere(4);
        assert_eq!(sphere.len(), 8);
        assert!(sphere.iter().all(|p| p.l1_norm() == 1));
        assert_eq!(sphere[0], LatticePoint::unit(4, 1));
        assert_eq!(sphere[4], LatticePoint::new(&[-1, 0, 0, 0]));
    }
}
