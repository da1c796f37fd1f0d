//! Quadrature rules and exponentially scaled modified Bessel functions of
//! integer order.

use statrs::function::gamma::ln_gamma;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 2);
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let n = order as f64;
        for i in 0..order.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(order, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(order, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Integral of `f` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre_with_derivative(order: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=order {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = order as f64;
    let d = n * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Coefficients `a_k(n)` of the large-argument expansion
/// `e^{-s} I_n(s) ~ (2 pi s)^{-1/2} sum_k (-1)^k a_k(n) s^{-k}`, with the sign
/// folded in.
pub fn bessel_i_asymptotic_coefficients(order: u64, terms: usize) -> Vec<f64> {
    let mu = 4.0 * (order as f64).powi(2);
    let mut coeffs = Vec::with_capacity(terms);
    let mut a = 1.0;
    coeffs.push(a);
    for k in 1..terms {
        let odd = (2 * k - 1) as f64;
        a *= -(mu - odd * odd) / (8.0 * k as f64);
        coeffs.push(a);
    }
    coeffs
}

/// `e^{-s} I_n(s)` for integer `n >= 0` and `s >= 0`.
pub fn bessel_i_scaled(order: u64, s: f64) -> f64 {
    debug_assert!(s >= 0.0);
    if s == 0.0 {
        return if order == 0 { 1.0 } else { 0.0 };
    }
    let n = order as f64;
    if s >= 40.0_f64.max(2.0 * n * n) {
        bessel_i_scaled_asymptotic(order, s)
    } else {
        bessel_i_scaled_series(order, s)
    }
}

fn bessel_i_scaled_asymptotic(order: u64, s: f64) -> f64 {
    let mu = 4.0 * (order as f64).powi(2);
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        term *= -(mu - odd * odd) / (8.0 * k as f64 * s);
        if term.abs() >= prev {
            break;
        }
        sum += term;
        prev = term.abs();
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (2.0 * std::f64::consts::PI * s).sqrt()
}

/// Power series `sum_k (s/2)^{2k+n} / (k! (k+n)!)` times `e^{-s}`.
///
/// Below `s = 700` the first term is representable and the series is summed
/// by forward recurrence. Larger arguments start from the largest term
/// (located through log-gamma) and sum outward in both directions.
fn bessel_i_scaled_series(order: u64, s: f64) -> f64 {
    let n = order as f64;
    let half = 0.5 * s;
    let quarter_sq = half * half;
    if s < 700.0 {
        let mut t = (-s + n * half.ln() - ln_gamma(n + 1.0)).exp();
        if order <= 20 {
            t = (-s).exp() * (1..=order).fold(1.0, |acc, j| acc * half / j as f64);
        }
        let mut sum = t;
        let mut k = 0.0;
        loop {
            t *= quarter_sq / ((k + 1.0) * (k + 1.0 + n));
            k += 1.0;
            sum += t;
            if t < 1e-18 * sum && k > half {
                break;
            }
        }
        return sum;
    }
    let log_term =
        |k: f64| -s + (2.0 * k + n) * half.ln() - ln_gamma(k + 1.0) - ln_gamma(k + n + 1.0);
    // Ratio t_{k+1}/t_k = (s/2)^2 / ((k+1)(k+1+n)) crosses 1 here.
    let peak = (0.5 * ((n * n + s * s).sqrt() - n)).floor().max(0.0);
    let t_peak = log_term(peak).exp();
    let mut sum = t_peak;
    let mut t = t_peak;
    let mut k = peak;
    loop {
        t *= quarter_sq / ((k + 1.0) * (k + 1.0 + n));
        k += 1.0;
        sum += t;
        if t < 1e-18 * sum {
            break;
        }
    }
    let mut t = t_peak;
    let mut k = peak;
    while k > 0.0 {
        t *= k * (k + n) / quarter_sq;
        k -= 1.0;
        sum += t;
        if t < 1e-18 * sum {
            break;
        }
    }
    sum
}
