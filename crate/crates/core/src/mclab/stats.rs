//! Replication summaries and the chi-square goodness-of-fit test.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Sample mean with its standard error (`None` below two samples).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSe {
    pub mean: f64,
    pub stderr: Option<f64>,
}

pub fn mean_stderr(xs: &[f64]) -> MeanSe {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return MeanSe {
            mean: f64::NAN,
            stderr: None,
        };
    }
    let mean = xs.iter().sum::<f64>() / n;
    let stderr = (xs.len() >= 2).then(|| {
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    });
    MeanSe { mean, stderr }
}

/// Standard error of a binomial proportion `p` from `n` trials.
pub fn proportion_stderr(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: u64,
    pub p_value: f64,
    /// Cells tested after pooling.
    pub cells: usize,
}

/// Pearson's test of `observed` counts against cell probabilities.
///
/// The last cell is the remainder of the support; `probabilities` must sum to
/// one. Cells with expected count below `min_expected` are pooled into the
/// remainder, and a remainder that is still too small is folded into the
/// preceding cell. Returns `None` when fewer than two cells survive.
pub fn chi_square(observed: &[u64], probabilities: &[f64], min_expected: f64) -> Option<ChiSquare> {
    assert_eq!(observed.len(), probabilities.len());
    let total: u64 = observed.iter().sum();
    if total == 0 || observed.is_empty() {
        return None;
    }
    let n = total as f64;
    let last = observed.len() - 1;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut pooled = (observed[last] as f64, probabilities[last] * n);
    for i in 0..last {
        let e = probabilities[i] * n;
        if e >= min_expected {
            cells.push((observed[i] as f64, e));
        } else {
            pooled.0 += observed[i] as f64;
            pooled.1 += e;
        }
    }
    if pooled.1 >= min_expected || cells.is_empty() {
        cells.push(pooled);
    } else if let Some(prev) = cells.last_mut() {
        prev.0 += pooled.0;
        prev.1 += pooled.1;
    }
    if cells.len() < 2 {
        return None;
    }
    let statistic: f64 = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = (cells.len() - 1) as u64;
    let dist = ChiSquared::new(dof as f64).ok()?;
    Some(ChiSquare {
        statistic,
        dof,
        p_value: 1.0 - dist.cdf(statistic),
        cells: cells.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_stderr() {
        let m = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.stderr.unwrap() - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_stderr(&[7.0]).stderr, None);
    }

    #[test]
    fn perfect_fit_has_p_value_one() {
        let c = chi_square(&[50, 30, 20], &[0.5, 0.3, 0.2], 5.0).unwrap();
        assert_eq!(c.statistic, 0.0);
        assert_eq!(c.dof, 2);
        assert!((c.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn small_cells_are_pooled() {
        // Expected counts 90, 6, 3, 1: the 3 and the remainder 1 pool to 4 < 5,
        // which then folds into the 6.
        let c = chi_square(&[90, 6, 3, 1], &[0.9, 0.06, 0.03, 0.01], 5.0).unwrap();
        assert_eq!(c.cells, 2);
    }

    #[test]
    fn gross_misfit_is_rejected() {
        let c = chi_square(&[900, 100], &[0.5, 0.5], 5.0).unwrap();
        assert!(c.p_value < 1e-10);
    }
}
