//! Haar-random end-to-end runs with sampled measurement outcomes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::bell::{derive_seed, SeededRng};
use crate::error::Result;
use crate::protocol::{Protocol, SchemeConfig, TwoQubitSecret};

/// Fidelity floor every trial must reach.
pub const EXACTNESS_TOL: f64 = 1e-10;

/// Confidence level of the uniformity test.
pub const CHI_SQUARE_LEVEL: f64 = 0.999;

/// Smallest trial count with an expected count of at least 5 per bin.
pub const MIN_CHI_SQUARE_TRIALS: u64 = 80;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub degrees_of_freedom: u32,
    pub critical_value: f64,
    pub level: f64,
    pub passed: bool,
}

/// Pearson test of `counts` against the uniform law.
pub fn chi_square_uniform(counts: &[u64]) -> ChiSquareTest {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    let statistic = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum();
    let dof = counts.len() as u32 - 1;
    let critical_value = ChiSquared::new(dof as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(CHI_SQUARE_LEVEL);
    ChiSquareTest {
        statistic,
        degrees_of_freedom: dof,
        critical_value,
        level: CHI_SQUARE_LEVEL,
        passed: statistic < critical_value,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub config: SchemeConfig,
    pub trials: u64,
    pub seed: u64,
    pub min_fidelity: f64,
    pub mean_fidelity: f64,
    /// Trials below `1 - EXACTNESS_TOL`.
    pub failures: u64,
    /// Counts of `(R_a3, R_b5)` indexed `4·a3 + b5` in Bell enumeration order.
    pub histogram: Vec<u64>,
    /// `None` below [`MIN_CHI_SQUARE_TRIALS`].
    pub uniformity: Option<ChiSquareTest>,
    pub passed: bool,
}

/// Runs `trials` independent trials. Trial `i` uses seed
/// `derive_seed(seed, i)` for both its secret and its outcomes, so the
/// summary does not depend on thread scheduling.
pub fn monte_carlo_fidelity(config: &SchemeConfig, trials: u64, seed: u64) -> Result<MonteCarloSummary> {
    let protocol = Protocol::new(*config)?;
    let results: Vec<(f64, usize)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = SeededRng::new(derive_seed(seed, i));
            let secret = TwoQubitSecret::haar_random(&mut rng);
            let t = protocol.run(&secret, &mut rng)?;
            Ok((
                t.fidelity,
                4 * t.records[0].outcome.index() + t.records[1].outcome.index(),
            ))
        })
        .collect::<Result<_>>()?;

    let mut histogram = vec![0u64; 16];
    let mut min_fidelity = f64::INFINITY;
    let mut sum = 0.0;
    let mut failures = 0;
    for &(f, bin) in &results {
        histogram[bin] += 1;
        min_fidelity = min_fidelity.min(f);
        sum += f;
        if f < 1.0 - EXACTNESS_TOL {
            failures += 1;
        }
    }
    let uniformity = (trials >= MIN_CHI_SQUARE_TRIALS).then(|| chi_square_uniform(&histogram));
    let passed = trials > 0 && failures == 0 && uniformity.as_ref().is_none_or(|u| u.passed);
    Ok(MonteCarloSummary {
        config: *config,
        trials,
        seed,
        min_fidelity: if trials == 0 { f64::NAN } else { min_fidelity },
        mean_fidelity: if trials == 0 { f64::NAN } else { sum / trials as f64 },
        failures,
        histogram,
        uniformity,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::Receiver;

    #[test]
    fn critical_value_for_fifteen_dof() {
        let t = chi_square_uniform(&[10; 16]);
        assert_eq!(t.statistic, 0.0);
        assert_eq!(t.degrees_of_freedom, 15);
        // Tabulated 99.9% quantile of χ²(15).
        assert!((t.critical_value - 37.697).abs() < 1e-3);
        assert!(t.passed);
        let mut skew = [10u64; 16];
        skew[0] = 100;
        assert!(!chi_square_uniform(&skew).passed);
    }

    #[test]
    fn small_campaign_is_exact_and_reproducible() {
        let cfg = SchemeConfig::four_epr(Receiver::Charlie);
        let a = monte_carlo_fidelity(&cfg, 200, 9).unwrap();
        let b = monte_carlo_fidelity(&cfg, 200, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.failures, 0);
        assert!(a.min_fidelity >= 1.0 - EXACTNESS_TOL);
        assert_eq!(a.histogram.iter().sum::<u64>(), 200);
        assert!(a.uniformity.is_some());
        let c = monte_carlo_fidelity(&cfg, 200, 10).unwrap();
        assert_ne!(a.histogram, c.histogram);
    }

    #[test]
    fn single_trial_skips_uniformity() {
        let s = monte_carlo_fidelity(&SchemeConfig::circular(3).unwrap(), 1, 1).unwrap();
        assert!(s.uniformity.is_none());
        assert!(s.passed);
    }
}
