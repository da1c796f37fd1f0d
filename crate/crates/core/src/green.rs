//! Lattice Green's function of the simple random walk,
//! `G(x) = sum_{k >= 0} P(S_k = x)`.
//!
//! The `d`-dimensional Fourier integral
//! `(2 pi)^{-d} int 1 / (1 - (1/d) sum cos t_i) e^{i x.t} dt`
//! is turned into a one-dimensional integral by writing the resolvent as a
//! Laplace transform; each coordinate then factorizes into a modified Bessel
//! function:
//!
//! `G(x) = d int_0^inf prod_i e^{-s} I_{|x_i|}(s) ds`.
//!
//! The integrand is smooth, decays like `s^{-d/2}`, and is integrated with
//! Gauss-Legendre on geometrically growing panels up to a cut `S`; the tail
//! beyond `S` is integrated term by term from the product of the Bessel
//! asymptotic series.

use std::sync::Mutex;

use rustc_hash::FxHashMap;
use smallvec::SmallVec;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::special::{bessel_i_asymptotic_coefficients, bessel_i_scaled, GaussLegendre};

const TAIL_TERMS: usize = 14;

/// Quadrature result with the change observed on the last refinement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenEstimate {
    pub value: f64,
    pub change: f64,
}

fn sorted_orders(x: &[i64]) -> SmallVec<[u64; 4]> {
    let mut orders: SmallVec<[u64; 4]> = x.iter().map(|c| c.unsigned_abs()).collect();
    orders.sort_unstable_by(|a, b| b.cmp(a));
    orders
}

fn tail_cut(orders: &[u64]) -> f64 {
    let n = orders.first().copied().unwrap_or(0) as f64;
    400f64.max(40.0 * n * n)
}

/// Panel edges 0, 1/2, 1, 2, 4, ... up to `cut`, each split into `split`
/// equal pieces.
fn panels(cut: f64, split: usize) -> Vec<(f64, f64)> {
    let mut edges = vec![0.0, 0.5];
    let mut e = 1.0;
    while e < cut {
        edges.push(e);
        e *= 2.0;
    }
    edges.push(cut);
    let mut out = Vec::new();
    for w in edges.windows(2) {
        let h = (w[1] - w[0]) / split as f64;
        for j in 0..split {
            out.push((w[0] + j as f64 * h, w[0] + (j + 1) as f64 * h));
        }
    }
    out
}

fn integrate_body(orders: &[u64], cut: f64, rule: &GaussLegendre, split: usize) -> f64 {
    panels(cut, split)
        .into_iter()
        .map(|(a, b)| {
            rule.integrate(a, b, |s| {
                orders
                    .iter()
                    .map(|&n| bessel_i_scaled(n, s))
                    .product::<f64>()
            })
        })
        .sum()
}

/// `int_cut^inf prod_i e^{-s} I_{n_i}(s) ds` from the asymptotic series.
fn integrate_tail(orders: &[u64], cut: f64) -> f64 {
    let mut series = vec![0.0; TAIL_TERMS];
    series[0] = 1.0;
    for &n in orders {
        let c = bessel_i_asymptotic_coefficients(n, TAIL_TERMS);
        let mut next = vec![0.0; TAIL_TERMS];
        for (i, &a) in series.iter().enumerate() {
            for (j, &b) in c.iter().enumerate().take(TAIL_TERMS - i) {
                next[i + j] += a * b;
            }
        }
        series = next;
    }
    let half_d = orders.len() as f64 / 2.0;
    let prefactor = (2.0 * std::f64::consts::PI).powf(-half_d);
    let sum: f64 = series
        .iter()
        .enumerate()
        .map(|(m, &b)| {
            let exponent = half_d + m as f64 - 1.0;
            b * cut.powf(-exponent) / exponent
        })
        .sum();
    prefactor * sum
}

/// `G(x)` by quadrature, refined until successive estimates agree to
/// `tolerance` (relative). Practical for `|x_i|` up to a few dozen.
pub fn lattice_green_quadrature(x: &[i64], tolerance: f64) -> Result<GreenEstimate> {
    if x.len() < 3 {
        return Err(Error::Dimension(x.len()));
    }
    let orders = sorted_orders(x);
    let cut = tail_cut(&orders);
    let tail = integrate_tail(&orders, cut);
    let rule = GaussLegendre::new(24);
    let d = x.len() as f64;
    let mut split = 1;
    let mut previous = d * (integrate_body(&orders, cut, &rule, split) + tail);
    let mut change = f64::INFINITY;
    while split <= 16 {
        split *= 2;
        let value = d * (integrate_body(&orders, cut, &rule, split) + tail);
        change = (value - previous).abs();
        if change <= tolerance * value.abs() {
            return Ok(GreenEstimate { value, change });
        }
        previous = value;
    }
    Err(Error::Quadrature { tolerance, change })
}

/// Leading far-field behavior `G(x) ~ a_d |x|^{2-d}` with the first
/// anisotropic correction.
pub fn lattice_green_far_field(x: &[i64]) -> f64 {
    let d = x.len() as f64;
    let r2: f64 = x.iter().map(|&c| (c * c) as f64).sum();
    let r = r2.sqrt();
    let a_d = d * gamma(d / 2.0 - 1.0) / (2.0 * std::f64::consts::PI.powf(d / 2.0));
    let quartic: f64 = x.iter().map(|&c| ((c * c) as f64).powi(2)).sum::<f64>() / (r2 * r2);
    let correction = d * (d - 2.0) / (24.0 * r2) * ((d + 2.0) * quartic - 3.0);
    a_d * r.powf(2.0 - d) * (1.0 + correction)
}

/// `G` for one dimension with quadrature near the origin (memoized over the
/// lattice symmetry group) and the far-field expansion beyond `near_radius`.
#[derive(Debug)]
pub struct GreenFunction {
    dimension: usize,
    near_radius_sq: i64,
    cache: Mutex<FxHashMap<SmallVec<[u64; 4]>, f64>>,
}

/// Relative tolerance used for cached quadrature values.
pub const GREEN_TOLERANCE: f64 = 1e-12;

impl GreenFunction {
    pub fn new(dimension: usize) -> Result<Self> {
        if dimension < 3 {
            return Err(Error::Dimension(dimension));
        }
        Ok(GreenFunction {
            dimension,
            near_radius_sq: 12 * 12,
            cache: Mutex::new(FxHashMap::default()),
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn at(&self, x: &[i64]) -> f64 {
        debug_assert_eq!(x.len(), self.dimension);
        let r2: i64 = x.iter().map(|c| c * c).sum();
        if r2 > self.near_radius_sq {
            return lattice_green_far_field(x);
        }
        let key = sorted_orders(x);
        if let Some(&v) = self.cache.lock().expect("green cache poisoned").get(&key) {
            return v;
        }
        let coords: SmallVec<[i64; 4]> = key.iter().map(|&n| n as i64).collect();
        let value = lattice_green_quadrature(&coords, GREEN_TOLERANCE)
            .map(|e| e.value)
            .unwrap_or_else(|_| lattice_green_far_field(x));
        self.cache
            .lock()
            .expect("green cache poisoned")
            .insert(key, value);
        value
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_value_three_dimensions() {
        // Watson: G(0) = 1.516386059151978018156... for the cubic lattice.
        let g = lattice_green_quadrature(&[0, 0, 0], 1e-13).unwrap();
        assert!((g.value - 1.516_386_059_151_978).abs() < 1e-11, "{g:?}");
    }

    #[test]
    fn harmonic_at_origin() {
        // G(0) = 1 + G(e_1): the k = 0 term plus one step to a neighbor.
        for d in 3..=5 {
            let mut zero = vec![0i64; d];
            let g0 = lattice_green_quadrature(&zero, 1e-13).unwrap().value;
            zero[0] = 1;
            let g1 = lattice_green_quadrature(&zero, 1e-13).unwrap().value;
            assert!((g0 - 1.0 - g1).abs() < 1e-11, "d={d}");
        }
    }

    #[test]
    fn harmonic_away_from_origin() {
        // G(x) = mean of G over the neighbors of x, for x != 0.
        let x = [2i64, 1, 0];
        let g = lattice_green_quadrature(&x, 1e-13).unwrap().value;
        let mut mean = 0.0;
        for axis in 0..3 {
            for delta in [-1, 1] {
                let mut y = x;
                y[axis] += delta;
                mean += lattice_green_quadrature(&y, 1e-13).unwrap().value / 6.0;
            }
        }
        assert!((g - mean).abs() < 1e-11);
    }

    #[test]
    fn far_field_matches_quadrature_at_moderate_range() {
        // Axis points carry the largest anisotropic correction.
        let cases: [(&[i64], f64); 5] = [
            (&[12, 0, 0], 5e-5),
            (&[7, 7, 7], 5e-5),
            (&[9, 6, 2], 5e-5),
            (&[12, 0, 0, 0], 5e-4),
            (&[20, 0, 0, 0], 5e-5),
        ];
        for (x, tol) in cases {
            let q = lattice_green_quadrature(x, 1e-12).unwrap().value;
            let f = lattice_green_far_field(x);
            let d = x.len() as f64;
            let r2: f64 = x.iter().map(|&c| (c * c) as f64).sum();
            let lead = d * gamma(d / 2.0 - 1.0) / (2.0 * std::f64::consts::PI.powf(d / 2.0))
                * r2.sqrt().powf(2.0 - d);
            let err = (q - f).abs() / q;
            assert!(err < tol, "{x:?}: {q} vs {f}");
            if x[1] == 0 {
                assert!(err < 0.1 * (q - lead).abs() / q, "{x:?}");
            }
        }
    }

    #[test]
    fn cached_function_is_symmetric() {
        let g = GreenFunction::new(3).unwrap();
        let a = g.at(&[1, -2, 0]);
        let b = g.at(&[0, 1, 2]);
        assert_eq!(a, b);
        assert!(g.at(&[30, 0, 0]) < g.at(&[3, 0, 0]));
    }
}
