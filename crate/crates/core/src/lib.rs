//! Simulation and verification lab for local and occupation times of the
//! simple symmetric random walk on `Z^d`, `d >= 3`.
//!
//! * [`lattice`]: seeded walks and first-hit times.
//! * [`tally`]: local times, occupation times, level counts, new points.
//! * [`constants`]: the escape probability and every constant derived from it.
//! * [`distributions`]: exact laws of infinite-horizon local times.
//! * [`rate`]: the rate functions and their unit sublevel sets `B` and `D`.
//! * [`mclab`]: replicated experiments producing [`report::ExperimentReport`]s.

pub mod constants;
pub mod distributions;
pub mod error;
pub mod green;
pub mod lattice;
pub mod mclab;
pub mod rate;
pub mod report;
pub mod special;
pub mod tally;

pub use constants::{compute_gamma, derive_all, gamma_n_profile, DimensionConstants};
pub use distributions::{PmfKind, PmfSpec};
pub use error::{Error, Result};
pub use lattice::{first_hit_time, generate_walk, LatticePoint, StepEvent, WalkConfig};
pub use mclab::ExperimentPlan;
pub use rate::{BoundaryPoint, RateSet, RateSetDescriptor};
pub use report::{ExperimentReport, Provenance, VerdictClass};
pub use tally::{LevelCounts, NewPointCounters, TallyBoard};
