//! Rate functions `g` (neighbor pairs) and `f` (center / unit-sphere pairs),
//! their unit sublevel sets `B` and `D`, and the integer pairs inside scaled
//! copies of those sets.
//!
//! Both rate functions are 1-homogeneous and convex in `y` for fixed `x`, with
//! minimum `x / lambda` attained at `y = x (1 - gamma)` (for `g`) and
//! `y = x / (1 - p)` (for `f`). The boundary `rate = 1` therefore has one root
//! above the minimizer for every `0 <= x < lambda`, and one below it once the
//! floor of the domain (`y = 0` for `B`, `y = x` for `D`) is itself outside
//! the set.

use serde::{Deserialize, Serialize};

use crate::constants::DimensionConstants;
use crate::error::{Error, Result};
use crate::special::GaussLegendre;

/// `t log t` with `0 log 0 = 0`.
fn xlogx(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t * t.ln()
    }
}

fn check_nonnegative(name: &'static str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value: v,
            reason: "must be a finite nonnegative number",
        })
    }
}

/// `g(x, y) = -(x+y) log(x+y) + x log x + y log y - (x+y) log alpha`.
pub fn rate_g(c: &DimensionConstants, x: f64, y: f64) -> Result<f64> {
    check_nonnegative("x", x)?;
    check_nonnegative("y", y)?;
    Ok(-xlogx(x + y) + xlogx(x) + xlogx(y) - (x + y) * c.alpha.ln())
}

/// `f(x, y) = -y log y + x log x + (y-x) log(y-x) + x log(2d) + (y-x) log(1/p)`
/// for `0 <= x <= y`.
pub fn rate_f(c: &DimensionConstants, x: f64, y: f64) -> Result<f64> {
    check_nonnegative("x", x)?;
    check_nonnegative("y", y)?;
    if y < x {
        return Err(Error::Domain {
            name: "y",
            value: y,
            reason: "f is defined for y >= x only",
        });
    }
    let w = y - x;
    Ok(-xlogx(y) + xlogx(x) + xlogx(w) + x * (2.0 * c.d as f64).ln() - w * c.p.ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RateSet {
    /// `(xi(z), xi(z + e_i))` pairs, rate `g`.
    B,
    /// `(xi(z), Xi(z))` pairs, rate `f`.
    D,
}

impl std::str::FromStr for RateSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "B" | "b" => Ok(RateSet::B),
            "D" | "d" => Ok(RateSet::D),
            _ => Err(Error::Plan(format!(
                "unknown rate set {s:?} (expected B or D)"
            ))),
        }
    }
}

impl std::fmt::Display for RateSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RateSet::B => "B",
            RateSet::D => "D",
        })
    }
}

/// Which rate set, bound to the constants of one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSetDescriptor {
    pub which: RateSet,
    pub constants: DimensionConstants,
}

/// The one or two solutions of `rate(x, y) = 1` at a given `x`. Where the
/// domain floor lies inside the set, `y_low` is the floor itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub x: f64,
    pub y_low: f64,
    pub y_high: f64,
}

/// A closed-form point on the boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Landmark {
    pub label: &'static str,
    pub x: f64,
    pub y: f64,
}

/// Bisection stops once the bracket is this narrow relative to its scale.
const BISECTION_WIDTH: f64 = 1e-14;

impl RateSetDescriptor {
    pub fn new(which: RateSet, constants: DimensionConstants) -> Self {
        RateSetDescriptor { which, constants }
    }

    pub fn rate(&self, x: f64, y: f64) -> Result<f64> {
        match self.which {
            RateSet::B => rate_g(&self.constants, x, y),
            RateSet::D => rate_f(&self.constants, x, y),
        }
    }

    /// Largest `x` in the set; the boundary closes there.
    pub fn x_max(&self) -> f64 {
        self.constants.lambda
    }

    /// Where `y -> rate(x, y)` is smallest.
    pub fn minimizer(&self, x: f64) -> f64 {
        match self.which {
            RateSet::B => x * (1.0 - self.constants.gamma),
            RateSet::D => x / (1.0 - self.constants.p),
        }
    }

    /// Lowest admissible `y` at `x`.
    pub fn floor(&self, x: f64) -> f64 {
        match self.which {
            RateSet::B => 0.0,
            RateSet::D => x,
        }
    }

    /// `x` beyond which the floor leaves the set and a lower root appears.
    pub fn lower_branch_start(&self) -> f64 {
        match self.which {
            RateSet::B => self.constants.x0_b,
            RateSet::D => self.constants.x0_d(),
        }
    }

    /// Area of the comparison box: the square `[0, lambda]^2` for `B`, the
    /// trapezoid `{0 <= x <= lambda, x <= y <= kappa}` for `D`.
    pub fn comparison_area(&self) -> f64 {
        let c = &self.constants;
        match self.which {
            RateSet::B => c.lambda * c.lambda,
            RateSet::D => c.lambda * c.kappa - 0.5 * c.lambda * c.lambda,
        }
    }

    /// Area of the set, integrating `y_high - y_low` over `x`.
    pub fn area(&self) -> Result<f64> {
        // x = lambda (1 - t^2) absorbs the square-root closing at x = lambda;
        // the lower branch start is a panel edge because y_low has a kink there.
        let lam = self.x_max();
        let t_kink = (1.0 - self.lower_branch_start() / lam).max(0.0).sqrt();
        let rule = GaussLegendre::new(20);
        let mut total = 0.0;
        for (a, b) in [(0.0, t_kink), (t_kink, 1.0)] {
            let pieces = 16;
            let h = (b - a) / pieces as f64;
            for i in 0..pieces {
                let (lo, hi) = (a + i as f64 * h, a + (i + 1) as f64 * h);
                let mut err = None;
                total += rule.integrate(lo, hi, |t| {
                    let x = lam * (1.0 - t * t);
                    match solve_boundary(self, x, 1e-12) {
                        Ok(bp) => (bp.y_high - bp.y_low) * 2.0 * lam * t,
                        Err(e) => {
                            err = Some(e);
                            0.0
                        }
                    }
                });
                if let Some(e) = err {
                    return Err(e);
                }
            }
        }
        Ok(total)
    }

    /// `area / comparison_area`; strictly below 1 since the corner
    /// `(lambda, lambda)` (resp. `(lambda, kappa)`) is outside the set.
    pub fn area_ratio(&self) -> Result<f64> {
        Ok(self.area()? / self.comparison_area())
    }
}

fn bisect<F: Fn(f64) -> f64>(mut lo: f64, mut hi: f64, rising: bool, h: F) -> f64 {
    // Invariant: h(lo) <= 0 < h(hi) when rising, reversed otherwise.
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= BISECTION_WIDTH * (1.0 + hi.abs()) || mid == lo || mid == hi {
            break;
        }
        let v = h(mid);
        if (v > 0.0) == rising {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solves `rate(x, y) = 1` for `0 <= x <= lambda`.
///
/// The upper root is bracketed by `[minimizer, y_cap]` with `y_cap` doubled
/// until the rate exceeds 1; the lower root by `[floor, minimizer]`. Each is
/// found by bisection on its monotone branch. `tol` bounds `|rate - 1|` at the
/// returned roots; near `x = lambda` the two roots merge and the rate is flat,
/// so the `y` accuracy there is only about `sqrt(tol)`.
pub fn solve_boundary(desc: &RateSetDescriptor, x: f64, tol: f64) -> Result<BoundaryPoint> {
    check_nonnegative("x", x)?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Domain {
            name: "tol",
            value: tol,
            reason: "must be positive",
        });
    }
    let lam = desc.x_max();
    if x > lam {
        return Err(Error::Domain {
            name: "x",
            value: x,
            reason: "beyond lambda the minimum of the rate exceeds 1",
        });
    }
    let h = |y: f64| desc.rate(x, y).map(|r| r - 1.0).unwrap_or(f64::INFINITY);
    let y_min = desc.minimizer(x);
    if h(y_min) >= -tol {
        // The minimum is already at the level: the closing point x = lambda.
        return Ok(BoundaryPoint {
            x,
            y_low: y_min,
            y_high: y_min,
        });
    }

    let mut cap = (2.0 * y_min).max(desc.constants.kappa.max(lam)) + 1.0;
    while h(cap) <= 0.0 {
        cap *= 2.0;
    }
    let y_high = bisect(y_min, cap, true, h);

    let floor = desc.floor(x);
    let y_low = if h(floor) <= 0.0 {
        floor
    } else {
        bisect(floor, y_min, false, h)
    };

    for y in [y_low, y_high] {
        let r = h(y);
        // The floor is a genuine boundary point only when it is inside the set.
        if y != floor && r.abs() > tol {
            return Err(Error::Domain {
                name: "tol",
                value: tol,
                reason: "bisection could not reach the requested rate tolerance",
            });
        }
    }
    Ok(BoundaryPoint { x, y_low, y_high })
}

/// Closed-form landmarks on the boundary of the set.
pub fn extremal_points(desc: &RateSetDescriptor) -> Vec<Landmark> {
    let c = &desc.constants;
    let lm = |label, x, y| Landmark { label, x, y };
    match desc.which {
        RateSet::B => {
            let s = (1.0 - 4.0 * c.alpha * c.alpha).sqrt();
            let dx = (1.0 + s) / (2.0 * s) * c.diff_max;
            let dy = (1.0 - s) / (2.0 * s) * c.diff_max;
            let half_sum = 0.5 * c.sum_max;
            let lam_low = c.lambda * (1.0 - c.gamma);
            vec![
                lm("y_axis_intercept", 0.0, c.x0_b),
                lm("x_axis_intercept", c.x0_b, 0.0),
                lm("max_x", c.lambda, lam_low),
                lm("max_y", lam_low, c.lambda),
                lm("max_sum", half_sum, half_sum),
                lm("max_difference", dx, dy),
                lm("max_difference_mirror", dy, dx),
            ]
        }
        RateSet::D => {
            let corner = c.x0_d();
            let two_d = 2.0 * c.d as f64;
            let (cw, aw) = (c.weight_c, c.weight_a);
            vec![
                lm("y_axis_intercept", 0.0, c.d_axis_intercept()),
                lm("diagonal_corner", corner, corner),
                lm("max_y", c.kappa / (two_d * c.p + 1.0), c.kappa),
                lm("max_x", c.lambda, c.lambda / (1.0 - c.p)),
                lm("max_weight", cw / (2.0 + aw), cw * (1.0 + aw) / (2.0 + aw)),
            ]
        }
    }
}

/// Whether `(k, l)` lies in `scale * set`, i.e. `rate(k/scale, l/scale) <= 1`.
/// Pairs outside the domain of the rate (`l < k` for `D`) are not members.
pub fn scaled_lattice_membership(
    desc: &RateSetDescriptor,
    scale: f64,
    k: u64,
    l: u64,
) -> Result<bool> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Domain {
            name: "scale",
            value: scale,
            reason: "must be positive and finite",
        });
    }
    if desc.which == RateSet::D && l < k {
        return Ok(false);
    }
    Ok(desc.rate(k as f64 / scale, l as f64 / scale)? <= 1.0)
}

/// Largest scale accepted by [`enumerate_scaled_lattice`].
pub const MAX_ENUMERATION_SCALE: f64 = 1e4;

/// All integer pairs in `scale * set`, ordered by `k` then `l`.
///
/// For each column `k` the solved boundary interval gives the candidate `l`
/// range; its ends are then settled with exact membership tests, which is
/// valid because each column of a set convex in `y` is an interval.
pub fn enumerate_scaled_lattice(desc: &RateSetDescriptor, scale: f64) -> Result<Vec<(u64, u64)>> {
    if !(scale > 0.0 && scale <= MAX_ENUMERATION_SCALE) {
        return Err(Error::Domain {
            name: "scale",
            value: scale,
            reason: "must lie in (0, 1e4]",
        });
    }
    let member = |k: u64, l: u64| scaled_lattice_membership(desc, scale, k, l);
    let mut out = Vec::new();
    let k_max = (scale * desc.x_max()).floor() as u64;
    for k in 0..=k_max {
        let x = k as f64 / scale;
        if x > desc.x_max() {
            break;
        }
        let bp = solve_boundary(desc, x, 1e-9)?;
        let mut lo = (scale * bp.y_low).floor().max(0.0) as u64;
        let mut hi = (scale * bp.y_high).floor() as u64 + 1;
        while lo <= hi && !member(k, lo)? {
            lo += 1;
        }
        if lo > hi {
            continue;
        }
        while lo > 0 && member(k, lo - 1)? {
            lo -= 1;
        }
        while hi > lo && !member(k, hi)? {
            hi -= 1;
        }
        while member(k, hi + 1)? {
            hi += 1;
        }
        out.extend((lo..=hi).map(|l| (k, l)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::derive_all;

    fn desc(which: RateSet) -> RateSetDescriptor {
        RateSetDescriptor::new(which, derive_all(3, 0.659_462_670_449_000_9).unwrap())
    }

    #[test]
    fn landmarks_lie_on_the_boundary() {
        for which in [RateSet::B, RateSet::D] {
            let d = desc(which);
            for p in extremal_points(&d) {
                let r = d.rate(p.x, p.y).unwrap();
                assert!((r - 1.0).abs() < 1e-10, "{which} {}: {r}", p.label);
            }
        }
    }

    #[test]
    fn minimum_is_x_over_lambda() {
        for which in [RateSet::B, RateSet::D] {
            let d = desc(which);
            for x in [0.1, 0.4, 0.9] {
                let y = d.minimizer(x);
                let r = d.rate(x, y).unwrap();
                assert!((r - x / d.constants.lambda).abs() < 1e-12);
                for dy in [-1e-4, 1e-4] {
                    assert!(d.rate(x, y + dy).unwrap() > r);
                }
            }
        }
    }

    #[test]
    fn invalid_inputs() {
        let c = desc(RateSet::B).constants;
        assert!(rate_g(&c, -0.1, 0.2).is_err());
        assert!(rate_f(&c, 0.5, 0.2).is_err());
        assert_eq!(rate_g(&c, 0.0, 0.0).unwrap(), 0.0);
        assert!(solve_boundary(&desc(RateSet::B), 0.95, 1e-12).is_err());
        assert!(enumerate_scaled_lattice(&desc(RateSet::B), 2e4).is_err());
    }

    #[test]
    fn boundary_reference_points() {
        let b = desc(RateSet::B);
        let at0 = solve_boundary(&b, 0.0, 1e-12).unwrap();
        assert_eq!(at0.y_low, 0.0);
        assert!((at0.y_high - 0.729_766_643_147_986).abs() < 1e-11);
        let end = solve_boundary(&b, b.constants.lambda, 1e-12).unwrap();
        assert!((end.y_low - 0.316_122_984_592_509).abs() < 1e-6);
        assert!((end.y_high - 0.316_122_984_592_509).abs() < 1e-6);

        let d = desc(RateSet::D);
        let x = d.constants.kappa / (6.0 * d.constants.p + 1.0);
        let top = solve_boundary(&d, x, 1e-12).unwrap();
        // The top of D is a tangency in x, not in y: the root is sharp.
        assert!((top.y_high - 2.565_921_307_396_946).abs() < 1e-9);
        let axis = solve_boundary(&d, 0.0, 1e-12).unwrap();
        assert!((axis.y_high - 1.487_623_614_713_765).abs() < 1e-11);
    }

    #[test]
    fn lower_branch_appears_past_its_start() {
        for which in [RateSet::B, RateSet::D] {
            let d = desc(which);
            let x0 = d.lower_branch_start();
            let before = solve_boundary(&d, 0.95 * x0, 1e-12).unwrap();
            assert_eq!(before.y_low, d.floor(0.95 * x0));
            let after = solve_boundary(&d, 0.5 * (x0 + d.x_max()), 1e-12).unwrap();
            assert!(after.y_low > d.floor(after.x));
            assert!((d.rate(after.x, after.y_low).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn b_boundary_is_symmetric() {
        let b = desc(RateSet::B);
        // (x, y_high(x)) mirrored must solve the equation at x' = y_high(x).
        let bp = solve_boundary(&b, 0.3, 1e-12).unwrap();
        let mirror = solve_boundary(&b, bp.y_high, 1e-12).unwrap();
        assert!((mirror.y_low - 0.3).abs() < 1e-9 || (mirror.y_high - 0.3).abs() < 1e-9);
    }

    #[test]
    fn membership_examples() {
        let b = desc(RateSet::B);
        assert!(scaled_lattice_membership(&b, 3.0, 0, 0).unwrap());
        let lam = b.constants.lambda;
        let scale = 10.0 / lam;
        assert!(!scaled_lattice_membership(&b, scale, 10, 10).unwrap());
        let d = desc(RateSet::D);
        assert!(!scaled_lattice_membership(&d, 5.0, 3, 2).unwrap());
    }

    #[test]
    fn enumeration_matches_brute_force() {
        for which in [RateSet::B, RateSet::D] {
            let d = desc(which);
            for scale in [0.5, 7.3, 40.0] {
                let got = enumerate_scaled_lattice(&d, scale).unwrap();
                let mut want = Vec::new();
                let bound = (scale * 3.0) as u64 + 2;
                for k in 0..bound {
                    for l in 0..bound {
                        if scaled_lattice_membership(&d, scale, k, l).unwrap() {
                            want.push((k, l));
                        }
                    }
                }
                assert_eq!(got, want, "{which} scale {scale}");
            }
        }
        assert_eq!(
            enumerate_scaled_lattice(&desc(RateSet::B), 1e-3).unwrap(),
            vec![(0, 0)]
        );
    }

    #[test]
    fn enumeration_count_scales_quadratically() {
        for which in [RateSet::B, RateSet::D] {
            let d = desc(which);
            let a = enumerate_scaled_lattice(&d, 100.0).unwrap().len() as f64;
            let b = enumerate_scaled_lattice(&d, 200.0).unwrap().len() as f64;
            assert!((b / a - 4.0).abs() < 0.4, "{which}: {}", b / a);
            // And the count approaches scale^2 * area.
            let area = d.area().unwrap();
            assert!((b / (4e4 * area) - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn sets_are_strictly_inside_their_boxes() {
        for which in [RateSet::B, RateSet::D] {
            let r = desc(which).area_ratio().unwrap();
            assert!(r > 0.3 && r < 1.0, "{which}: {r}");
        }
    }
}
