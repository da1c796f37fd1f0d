//! Scalar constants of the walk in dimension `d`, all derived from the escape
//! probability `gamma = 1 / G(0)`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::green::lattice_green_quadrature;
use crate::lattice::Walker;

/// Smallest tolerance accepted by [`compute_gamma`].
pub const GAMMA_TOLERANCE_FLOOR: f64 = 1e-10;

/// Escape probability `gamma` with an absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaEstimate {
    pub value: f64,
    pub abs_error: f64,
}

/// `gamma(d)`, the probability that the walk never returns to the origin,
/// to absolute accuracy `tolerance`.
pub fn compute_gamma(d: usize, tolerance: f64) -> Result<f64> {
    compute_gamma_with_error(d, tolerance).map(|g| g.value)
}

pub fn compute_gamma_with_error(d: usize, tolerance: f64) -> Result<GammaEstimate> {
    if d < 3 {
        return Err(Error::Dimension(d));
    }
    if tolerance.is_nan() || tolerance < GAMMA_TOLERANCE_FLOOR {
        return Err(Error::Tolerance(tolerance));
    }
    // gamma = 1/G, so |d gamma| = |dG| / G^2 <= |dG| since G > 1.
    let g0 = lattice_green_quadrature(&vec![0; d], tolerance * 1e-2)?;
    Ok(GammaEstimate {
        value: 1.0 / g0.value,
        abs_error: (g0.change / (g0.value * g0.value)).max(f64::EPSILON),
    })
}

/// Every constant used by the distributions and rate sets, for one `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionConstants {
    pub d: usize,
    /// Escape probability.
    pub gamma: f64,
    /// `(1 - gamma) / (2 - gamma)`: reach a fixed neighbor before returning.
    pub alpha: f64,
    /// `-1 / log(1 - gamma)`: growth rate of the maximal local time.
    pub lambda: f64,
    /// `1 - 1 / (2d (1 - gamma))`: return to the unit sphere avoiding its center.
    pub p: f64,
    /// `-1 / log(p + 1/(2d))`: growth rate of the maximal sphere occupation.
    pub kappa: f64,
    /// `1 / log(1/alpha)`: where the lower branch of the B boundary starts.
    pub x0_b: f64,
    /// `1 / log(1/(2 alpha))`: largest `x + y` on the B boundary.
    pub sum_max: f64,
    /// Largest `x - y` on the B boundary.
    pub diff_max: f64,
    /// Growth rate of the maximal weight `xi(z) + Xi(z)`.
    pub weight_c: f64,
    pub weight_a: f64,
    /// Absolute error bound per field, propagated from the bound on `gamma`.
    pub error_budget: BTreeMap<String, f64>,
}

struct Closed {
    alpha: f64,
    lambda: f64,
    p: f64,
    kappa: f64,
    x0_b: f64,
    sum_max: f64,
    diff_max: f64,
    weight_c: f64,
    weight_a: f64,
}

fn closed_forms(d: usize, gamma: f64) -> Closed {
    let df = d as f64;
    let inv2d = 1.0 / (2.0 * df);
    let alpha = (1.0 - gamma) / (2.0 - gamma);
    let p = 1.0 - 1.0 / (2.0 * df * (1.0 - gamma));
    let s = (1.0 - 4.0 * alpha * alpha).sqrt();
    Closed {
        alpha,
        lambda: -1.0 / (1.0 - gamma).ln(),
        p,
        kappa: -1.0 / (p + inv2d).ln(),
        x0_b: 1.0 / (1.0 / alpha).ln(),
        sum_max: 1.0 / (1.0 / (2.0 * alpha)).ln(),
        diff_max: 1.0 / ((1.0 + s) / (2.0 * alpha)).ln(),
        weight_c: -1.0 / (p / 2.0 + (p * p / 4.0 + inv2d).sqrt()).ln(),
        weight_a: df * p * p + (df * df * p.powi(4) + 2.0 * df * p * p).sqrt(),
    }
}

/// All closed forms from `gamma`. The error budget assumes `gamma` exact;
/// [`DimensionConstants::compute`] fills it from the quadrature bound.
pub fn derive_all(d: usize, gamma: f64) -> Result<DimensionConstants> {
    derive_with_error(d, gamma, 0.0)
}

fn derive_with_error(d: usize, gamma: f64, gamma_error: f64) -> Result<DimensionConstants> {
    if d < 3 {
        return Err(Error::Dimension(d));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Probability(gamma));
    }
    // p > 0 needs 2d (1 - gamma) > 1.
    if gamma >= 1.0 - 1.0 / (2.0 * d as f64) {
        return Err(Error::Domain {
            name: "gamma",
            value: gamma,
            reason: "p = 1 - 1/(2d(1 - gamma)) must be positive",
        });
    }
    let c = closed_forms(d, gamma);
    let mut error_budget = BTreeMap::new();
    error_budget.insert("gamma".to_string(), gamma_error);
    if gamma_error > 0.0 {
        let hi = closed_forms(d, gamma + gamma_error);
        let lo = closed_forms(d, gamma - gamma_error);
        let spread = |a: f64, b: f64| 0.5 * (a - b).abs() + f64::EPSILON * a.abs().max(b.abs());
        let pairs = [
            ("alpha", spread(hi.alpha, lo.alpha)),
            ("lambda", spread(hi.lambda, lo.lambda)),
            ("p", spread(hi.p, lo.p)),
            ("kappa", spread(hi.kappa, lo.kappa)),
            ("x0_b", spread(hi.x0_b, lo.x0_b)),
            ("sum_max", spread(hi.sum_max, lo.sum_max)),
            ("diff_max", spread(hi.diff_max, lo.diff_max)),
            ("weight_c", spread(hi.weight_c, lo.weight_c)),
            ("weight_a", spread(hi.weight_a, lo.weight_a)),
        ];
        for (k, v) in pairs {
            error_budget.insert(k.to_string(), v);
        }
    }
    Ok(DimensionConstants {
        d,
        gamma,
        alpha: c.alpha,
        lambda: c.lambda,
        p: c.p,
        kappa: c.kappa,
        x0_b: c.x0_b,
        sum_max: c.sum_max,
        diff_max: c.diff_max,
        weight_c: c.weight_c,
        weight_a: c.weight_a,
        error_budget,
    })
}

impl DimensionConstants {
    /// Quadrature `gamma` at the tolerance floor, then every closed form.
    pub fn compute(d: usize) -> Result<Self> {
        let g = compute_gamma_with_error(d, GAMMA_TOLERANCE_FLOOR)?;
        derive_with_error(d, g.value, g.abs_error)
    }

    /// `1/(2d)`, the one-step probability of each direction.
    pub fn step_probability(&self) -> f64 {
        1.0 / (2.0 * self.d as f64)
    }

    /// `1 - p - 1/(2d)`: escape from the unit sphere.
    pub fn sphere_escape(&self) -> f64 {
        1.0 - self.p - self.step_probability()
    }

    /// `1 - 2 alpha = gamma / (2 - gamma)`: escape from a neighbor pair.
    pub fn pair_escape(&self) -> f64 {
        1.0 - 2.0 * self.alpha
    }

    /// `1 / log(2d)`: where the lower branch of the D boundary leaves the diagonal.
    pub fn x0_d(&self) -> f64 {
        1.0 / (2.0 * self.d as f64).ln()
    }

    /// `1 / log(1/p)`: the D boundary at `x = 0`.
    pub fn d_axis_intercept(&self) -> f64 {
        1.0 / (1.0 / self.p).ln()
    }
}

/// Monte Carlo estimate of `gamma(n)` at one horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaNPoint {
    pub n: u64,
    pub estimate: f64,
    pub stderr: f64,
}

/// Minimum replication count for [`gamma_n_profile`].
pub const GAMMA_N_MIN_REPLICATIONS: u64 = 1_000;

/// `gamma(n) = P(no return to the origin in the first n - 1 steps)` on a
/// grid of horizons, estimated from `replications` independent streams.
///
/// Every horizon reuses the same walks, so the profile is nonincreasing in
/// `n` by construction.
pub fn gamma_n_profile(
    d: usize,
    n_grid: &[u64],
    replications: u64,
    seed: u64,
) -> Result<Vec<GammaNPoint>> {
    if d < 3 {
        return Err(Error::Dimension(d));
    }
    if replications < GAMMA_N_MIN_REPLICATIONS {
        return Err(Error::Plan(format!(
            "gamma(n) profile needs at least {GAMMA_N_MIN_REPLICATIONS} replications"
        )));
    }
    if n_grid.contains(&0) {
        return Err(Error::ZeroHorizon);
    }
    let horizon = n_grid.iter().copied().max().unwrap_or(1);
    let returns: Vec<Option<u64>> = (0..replications)
        .into_par_iter()
        .map(|stream| first_return(d, seed, stream, horizon.saturating_sub(1)))
        .collect();
    Ok(n_grid
        .iter()
        .map(|&n| {
            let survivors = returns
                .iter()
                .filter(|t| t.map_or(true, |t| t >= n))
                .count() as f64;
            let estimate = survivors / replications as f64;
            GammaNPoint {
                n,
                estimate,
                stderr: (estimate * (1.0 - estimate) / replications as f64).sqrt(),
            }
        })
        .collect())
}

/// First return time to the origin within `max_steps` steps.
pub(crate) fn first_return(d: usize, seed: u64, stream: u64, max_steps: u64) -> Option<u64> {
    let mut walker = Walker::new(d, seed, stream);
    let mut l1: u64 = 0;
    for t in 1..=max_steps {
        let (axis, delta) = walker.step();
        let c = walker.position()[axis];
        // |c| grew iff c moved away from zero.
        if c * delta > 0 {
            l1 += 1;
        } else {
            l1 -= 1;
        }
        if l1 == 0 {
            return Some(t);
        }
    }
    None
}
