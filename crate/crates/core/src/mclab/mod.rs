//! Replicated Monte Carlo experiments compared against exact laws and limit
//! constants.
//!
//! Replication `r` of a plan with seed `s` always uses stream `(s, r)`, and
//! results are reduced in replication order, so a report is a pure function
//! of its plan regardless of thread count.
//!
//! Exact-law and identity checks carry hard pass/fail verdicts. Almost-sure
//! asymptotic statements (containment, fill-in, growth of maxima) cannot be
//! settled at a finite horizon and only produce diagnostic verdicts.

mod distribution;
pub mod occupation;
pub mod stats;
mod walks;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::{fmt_sig, Metadata};

pub use distribution::{run_distribution_check, run_distribution_checks};
pub use walks::{
    fill_in_table, run_containment_check, run_fillin_check, run_level_count_check,
    run_newpoint_check, FillInRow, LEVEL_COUNT_K_MAX,
};

/// Parameters of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub name: String,
    pub dimension: usize,
    /// Analysis horizon `n`.
    pub horizon: u64,
    /// Truncation cap standing in for the infinite horizon (`>= horizon`).
    pub cap: u64,
    pub replications: u64,
    pub seed: u64,
    /// Scale slack for the containment and fill-in sets.
    pub epsilon: f64,
    /// Level of the chi-square tests.
    pub significance: f64,
    /// Relative tolerance for limit-density checks; each check has its own
    /// default when unset.
    pub relative_tolerance: Option<f64>,
}

impl ExperimentPlan {
    /// A plan with `cap = horizon`, `epsilon = 0.5` and significance 0.01.
    pub fn new(
        name: impl Into<String>,
        dimension: usize,
        horizon: u64,
        replications: u64,
        seed: u64,
    ) -> Self {
        ExperimentPlan {
            name: name.into(),
            dimension,
            horizon,
            cap: horizon,
            replications,
            seed,
            epsilon: 0.5,
            significance: 0.01,
            relative_tolerance: None,
        }
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = cap;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_significance(mut self, significance: f64) -> Self {
        self.significance = significance;
        self
    }

    pub fn with_relative_tolerance(mut self, tolerance: f64) -> Self {
        self.relative_tolerance = Some(tolerance);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension < 3 {
            return Err(Error::Dimension(self.dimension));
        }
        if self.horizon == 0 {
            return Err(Error::ZeroHorizon);
        }
        if self.cap < self.horizon {
            return Err(Error::CapShorterThanHorizon {
                cap: self.cap,
                horizon: self.horizon,
            });
        }
        if self.replications == 0 {
            return Err(Error::Plan("replications must be at least 1".into()));
        }
        if !(self.significance > 0.0 && self.significance < 1.0) {
            return Err(Error::Plan(format!(
                "significance {} outside (0, 1)",
                self.significance
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Plan(format!(
                "epsilon {} must be positive",
                self.epsilon
            )));
        }
        if let Some(t) = self.relative_tolerance {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Plan(format!(
                    "relative tolerance {t} must be positive"
                )));
            }
        }
        Ok(())
    }

    /// The plan echoed as report metadata.
    pub fn metadata(&self) -> Metadata {
        let mut m = Metadata::new();
        m.insert("plan.name".into(), self.name.clone());
        m.insert("plan.dimension".into(), self.dimension.to_string());
        m.insert("plan.horizon".into(), self.horizon.to_string());
        m.insert("plan.cap".into(), self.cap.to_string());
        m.insert("plan.replications".into(), self.replications.to_string());
        m.insert("plan.seed".into(), self.seed.to_string());
        m.insert("plan.epsilon".into(), fmt_sig(self.epsilon));
        m.insert("plan.significance".into(), fmt_sig(self.significance));
        if let Some(t) = self.relative_tolerance {
            m.insert("plan.relative_tolerance".into(), fmt_sig(t));
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_validation() {
        let ok = ExperimentPlan::new("t", 3, 100, 2, 0);
        assert!(ok.validate().is_ok());
        assert!(ok.clone().with_cap(50).validate().is_err());
        assert!(ExperimentPlan::new("t", 2, 100, 2, 0).validate().is_err());
        assert!(ExperimentPlan::new("t", 3, 100, 0, 0).validate().is_err());
        assert!(ok.clone().with_significance(1.0).validate().is_err());
        assert!(ok.clone().with_epsilon(0.0).validate().is_err());
        assert!(ok.with_relative_tolerance(-1.0).validate().is_err());
    }
}
