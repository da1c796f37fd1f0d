//! Exact laws of infinite-horizon local and occupation times, and the
//! finite-horizon upper bounds that accompany them.
//!
//! With `q = p + 1/(2d)`:
//!
//! | law               | support          | probability                                   |
//! |-------------------|------------------|-----------------------------------------------|
//! | `GeometricSite`   | `k >= 0`         | `gamma (1-gamma)^k`                           |
//! | `JointTwoPoint`   | `k, l >= 0`      | `(1-2 alpha) C(k+l, k) alpha^(k+l)`           |
//! | `BallOccupation`  | `j >= 1`         | `(1-q) q^(j-1)`                               |
//! | `JointPointBall`  | `0 <= k <= l`    | `(1-q) C(l, k) p^(l-k) (1/(2d))^k`            |

use serde::{Deserialize, Serialize};
use statrs::function::factorial::{binomial, ln_binomial};

use crate::constants::DimensionConstants;
use crate::error::{Error, Result};

/// Beyond this total order binomials and powers are combined in log space.
const LOG_SPACE_ORDER: u64 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PmfKind {
    GeometricSite,
    JointTwoPoint,
    BallOccupation,
    JointPointBall,
}

impl PmfKind {
    pub const ALL: [PmfKind; 4] = [
        PmfKind::GeometricSite,
        PmfKind::JointTwoPoint,
        PmfKind::BallOccupation,
        PmfKind::JointPointBall,
    ];

    /// Number of indices of a cell: 1 for the marginal laws, 2 for the joints.
    pub fn arity(self) -> usize {
        match self {
            PmfKind::GeometricSite | PmfKind::BallOccupation => 1,
            PmfKind::JointTwoPoint | PmfKind::JointPointBall => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PmfKind::GeometricSite => "geometric_site",
            PmfKind::JointTwoPoint => "joint_two_point",
            PmfKind::BallOccupation => "ball_occupation",
            PmfKind::JointPointBall => "joint_point_ball",
        }
    }
}

impl std::str::FromStr for PmfKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PmfKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Plan(format!("unknown law {s:?}")))
    }
}

/// One of the four laws, bound to the constants of a dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmfSpec {
    pub kind: PmfKind,
    pub constants: DimensionConstants,
}

/// Partial sum over a truncated support and a bound on the mass left out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    /// Largest first index (or `k + l` for the two-point law) included.
    pub truncation: u64,
    pub partial_sum: f64,
    pub tail_bound: f64,
}

impl Normalization {
    /// `|partial_sum + tail - 1|` is at most this.
    pub fn defect(&self) -> f64 {
        (self.partial_sum - 1.0).abs() + self.tail_bound
    }
}

impl PmfSpec {
    pub fn new(kind: PmfKind, constants: DimensionConstants) -> Self {
        PmfSpec { kind, constants }
    }

    /// Probability of one cell; `cell.len()` must equal the arity of the law.
    pub fn probability(&self, cell: &[u64]) -> Result<f64> {
        if cell.len() != self.kind.arity() {
            return Err(Error::DimensionMismatch {
                expected: self.kind.arity(),
                got: cell.len(),
            });
        }
        let c = &self.constants;
        match self.kind {
            PmfKind::GeometricSite => Ok(geometric_site_pmf(c, cell[0])),
            PmfKind::JointTwoPoint => Ok(joint_two_point_pmf(c, cell[0], cell[1])),
            PmfKind::BallOccupation => ball_occupation_pmf(c, cell[0]),
            PmfKind::JointPointBall => joint_point_ball_pmf(c, cell[0], cell[1]),
        }
    }

    /// Ratio of consecutive shells of the support: every law here puts mass
    /// `(1 - r) r^m` on shell `m`.
    fn shell_ratio(&self) -> f64 {
        let c = &self.constants;
        match self.kind {
            PmfKind::GeometricSite => 1.0 - c.gamma,
            PmfKind::JointTwoPoint => 2.0 * c.alpha,
            PmfKind::BallOccupation | PmfKind::JointPointBall => c.p + c.step_probability(),
        }
    }

    /// Sums the law shell by shell until the certified tail `r^(m+1)` drops
    /// below `tail_target`. Shells are `k`, `k + l`, `j - 1` and `l`
    /// respectively.
    pub fn normalization(&self, tail_target: f64) -> Result<Normalization> {
        if !(tail_target > 0.0 && tail_target < 1.0) {
            return Err(Error::Domain {
                name: "tail_target",
                value: tail_target,
                reason: "must lie in (0, 1)",
            });
        }
        let r = self.shell_ratio();
        let mut partial_sum = 0.0;
        let mut m = 0u64;
        loop {
            partial_sum += self.shell_mass(m)?;
            let tail_bound = r.powf((m + 1) as f64);
            if tail_bound < tail_target {
                return Ok(Normalization {
                    truncation: m,
                    partial_sum,
                    tail_bound,
                });
            }
            m += 1;
        }
    }

    fn shell_mass(&self, m: u64) -> Result<f64> {
        let c = &self.constants;
        Ok(match self.kind {
            PmfKind::GeometricSite => geometric_site_pmf(c, m),
            PmfKind::JointTwoPoint => (0..=m).map(|k| joint_two_point_pmf(c, k, m - k)).sum(),
            PmfKind::BallOccupation => ball_occupation_pmf(c, m + 1)?,
            PmfKind::JointPointBall => {
                let mut s = 0.0;
                for k in 0..=m {
                    s += joint_point_ball_pmf(c, k, m)?;
                }
                s
            }
        })
    }
}

/// `C(n, k) a^i b^j`, switching to log space for large `n`.
fn binomial_term(n: u64, k: u64, a: f64, i: u64, b: f64, j: u64) -> f64 {
    // C(n, k) = C(n, n - k) must hold bit for bit.
    let k = k.min(n - k);
    if n <= LOG_SPACE_ORDER {
        binomial(n, k) * a.powi(i as i32) * b.powi(j as i32)
    } else {
        let la = if i == 0 { 0.0 } else { i as f64 * a.ln() };
        let lb = if j == 0 { 0.0 } else { j as f64 * b.ln() };
        (ln_binomial(n, k) + la + lb).exp()
    }
}

/// `P(xi(0, inf) = k) = gamma (1 - gamma)^k`.
pub fn geometric_site_pmf(c: &DimensionConstants, k: u64) -> f64 {
    c.gamma * (1.0 - c.gamma).powf(k as f64)
}

/// `P(xi(0, inf) = k, xi(e_1, inf) = l)`.
pub fn joint_two_point_pmf(c: &DimensionConstants, k: u64, l: u64) -> f64 {
    c.pair_escape() * two_point_upper_bound(c, k, l)
}

/// `C(k+l, k) alpha^(k+l)`: bounds `P(xi(0,n) = k, xi(e_1,n) = l)` for every `n`.
pub fn two_point_upper_bound(c: &DimensionConstants, k: u64, l: u64) -> f64 {
    binomial_term(k + l, k, c.alpha, k + l, 1.0, 0)
}

/// `P(Xi(0, inf) = j)`, counting the first entrance to the unit sphere.
pub fn ball_occupation_pmf(c: &DimensionConstants, j: u64) -> Result<f64> {
    if j == 0 {
        return Err(Error::Domain {
            name: "j",
            value: 0.0,
            reason: "ball occupation is supported on j >= 1",
        });
    }
    let q = c.p + c.step_probability();
    Ok(c.sphere_escape() * q.powf((j - 1) as f64))
}

/// `P(xi(0, inf) = k, Xi(0, inf) = l + 1)` for `k <= l`.
pub fn joint_point_ball_pmf(c: &DimensionConstants, k: u64, l: u64) -> Result<f64> {
    Ok(c.sphere_escape() * point_ball_upper_bound(c, k, l)?)
}

/// `C(l, k) p^(l-k) (1/(2d))^k`: bounds `P(xi(0,n) = k, Xi(0,n) = l + 1)` for
/// every `n`.
pub fn point_ball_upper_bound(c: &DimensionConstants, k: u64, l: u64) -> Result<f64> {
    if k > l {
        return Err(Error::Domain {
            name: "k",
            value: k as f64,
            reason: "center local time cannot exceed the number of sphere returns l",
        });
    }
    Ok(binomial_term(l, k, c.step_probability(), k, c.p, l - k))
}

/// Finite-horizon upper bounds for the two joint laws:
/// `C(k+l, k) alpha^(k+l)` and `C(l, k) p^(l-k) (1/(2d))^k`.
/// Both are the infinite-horizon probabilities without their escape
/// prefactor, so they hold uniformly in the horizon.
pub fn truncated_upper_bounds(c: &DimensionConstants, k: u64, l: u64) -> Result<(f64, f64)> {
    Ok((
        two_point_upper_bound(c, k, l),
        point_ball_upper_bound(c, k, l)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::derive_all;

    fn c3() -> DimensionConstants {
        derive_all(3, 0.659_462_670_449_000_9).unwrap()
    }

    #[test]
    fn reference_cells() {
        let c = c3();
        assert!((geometric_site_pmf(&c, 0) - c.gamma).abs() < 1e-15);
        assert!((joint_two_point_pmf(&c, 0, 0) - 0.491_939_057_504_561_9).abs() < 1e-12);
        assert!((ball_occupation_pmf(&c, 1).unwrap() - 0.322_755_937_564_175_9).abs() < 1e-12);
        let v = joint_point_ball_pmf(&c, 1, 2).unwrap();
        let want = 2.0 * c.sphere_escape() * c.p / 6.0;
        assert!((v - want).abs() < 1e-15);
        assert!((v - 0.054_93).abs() < 1e-4);
    }

    #[test]
    fn domain_errors() {
        let c = c3();
        assert!(ball_occupation_pmf(&c, 0).is_err());
        assert!(joint_point_ball_pmf(&c, 3, 2).is_err());
        assert!(truncated_upper_bounds(&c, 3, 2).is_err());
        let spec = PmfSpec::new(PmfKind::JointTwoPoint, c);
        assert!(spec.probability(&[1]).is_err());
    }

    #[test]
    fn log_space_agrees_with_direct_form() {
        let c = c3();
        // Across the switch the two evaluations must join smoothly.
        for (k, l) in [(20, 20), (21, 20), (30, 31)] {
            let direct = c.pair_escape() * binomial(k + l, k) * c.alpha.powi((k + l) as i32);
            let got = joint_two_point_pmf(&c, k, l);
            assert!(
                (got - direct).abs() < 1e-12 * direct,
                "({k},{l}) {got} {direct}"
            );
        }
        assert!(joint_two_point_pmf(&c, 150, 150) > 0.0);
    }

    #[test]
    fn symmetric_in_the_two_sites() {
        let c = c3();
        for k in 0..50 {
            for l in 0..50 {
                assert_eq!(joint_two_point_pmf(&c, k, l), joint_two_point_pmf(&c, l, k));
            }
        }
    }

    #[test]
    fn all_laws_normalize() {
        for kind in PmfKind::ALL {
            let n = PmfSpec::new(kind, c3()).normalization(1e-13).unwrap();
            assert!(n.defect() < 1e-10, "{kind:?}: {n:?}");
        }
    }

    #[test]
    fn bounds_are_prefactor_ratios() {
        let c = c3();
        let (a, b) = truncated_upper_bounds(&c, 2, 5).unwrap();
        assert!((a - joint_two_point_pmf(&c, 2, 5) / c.pair_escape()).abs() < 1e-15);
        assert!((b - joint_point_ball_pmf(&c, 2, 5).unwrap() / c.sphere_escape()).abs() < 1e-15);
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in PmfKind::ALL {
            assert_eq!(kind.name().parse::<PmfKind>().unwrap(), kind);
        }
        assert!("poisson".parse::<PmfKind>().is_err());
    }
}
