//! Reproduction checks: printed tables, the branch expansion, Monte Carlo
//! exactness and uniformity, and the lone-receiver security properties.

pub mod expansion;
pub mod golden;
pub mod montecarlo;
pub mod security;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::protocol::{Receiver, SchemeConfig};

pub use expansion::{audit_expansion, ExpansionReport};
pub use golden::{check_golden_tables, GoldenReport, GoldenTable};
pub use montecarlo::{monte_carlo_fidelity, MonteCarloSummary};
pub use security::{security_check, SecurityReport};

/// Configurations covered by the Monte Carlo part of [`run_verification`].
pub fn monte_carlo_configs() -> Vec<SchemeConfig> {
    let mut v = vec![
        SchemeConfig::four_epr(Receiver::Charlie),
        SchemeConfig::four_epr(Receiver::Bob),
    ];
    v.extend([2, 3, 5].map(|n| SchemeConfig::circular(n).expect("valid chain length")));
    v
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        CheckResult {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationSummary {
    pub trials: u64,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
    pub golden: GoldenReport,
    pub expansion: ExpansionReport,
    pub monte_carlo: Vec<MonteCarloSummary>,
    pub security: SecurityReport,
    pub all_passed: bool,
}

impl VerificationSummary {
    pub fn failed_checks(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Runs every check. `trials` Haar-random runs go to each configuration of
/// [`monte_carlo_configs`]; configuration `k` uses master seed
/// `derive_seed(seed, k)`.
pub fn run_verification(trials: u64, seed: u64) -> Result<VerificationSummary> {
    let golden = check_golden_tables()?;
    let expansion = audit_expansion()?;
    let monte_carlo = monte_carlo_configs()
        .iter()
        .enumerate()
        .map(|(k, cfg)| monte_carlo_fidelity(cfg, trials, crate::bell::derive_seed(seed, k as u64)))
        .collect::<Result<Vec<_>>>()?;
    let security = security_check(seed)?;

    let mut checks = vec![
        CheckResult::new(
            "table-four-epr",
            golden.four_epr.passed,
            format!("{}/16 printed rows reproduced", golden.four_epr.matching_rows),
        ),
        CheckResult::new(
            "table-bob-outcomes",
            golden.four_epr_bob_outcomes.passed,
            format!(
                "{}/16 printed rows reproduced (R_b5 = {})",
                golden.four_epr_bob_outcomes.matching_rows, golden.bob_outcomes_restricted_to
            ),
        ),
        CheckResult::new(
            "table-circular",
            golden.circular_passed,
            format!(
                "{}/16 printed rows reproduced at N=2; N={} keyed table identical to N=2",
                golden.circular.matching_rows,
                golden
                    .circular_chain_lengths
                    .iter()
                    .filter(|c| c.identical_to_two)
                    .map(|c| c.n_agents.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            ),
        ),
        CheckResult::new(
            "branch-expansion",
            expansion.passed,
            format!(
                "{}/16 branches match by label, {}/16 by block, {}/4 headers; reconstruction fidelity {:.17}",
                expansion.branch_matches,
                expansion.block_matches,
                expansion.header_matches,
                expansion.reconstruction_fidelity
            ),
        ),
    ];
    for mc in &monte_carlo {
        checks.push(CheckResult::new(
            format!("monte-carlo {}", mc.config),
            mc.passed,
            format!(
                "{} trials, min fidelity {:.17}, uniformity {}",
                mc.trials,
                mc.min_fidelity,
                match &mc.uniformity {
                    Some(u) => format!("chi2 {:.3} < {:.3}: {}", u.statistic, u.critical_value, u.passed),
                    None => "skipped".to_string(),
                }
            ),
        ));
    }
    checks.push(CheckResult::new(
        "security",
        security.passed,
        format!(
            "rho_8 deviation {:.3e}, {} distinct corrections, guess success {}, max wrong fidelity {:.6}",
            security.max_deviation_from_mixed,
            security.distinct_corrections_per_publication,
            security.guess_success_probability,
            security.max_wrong_correction_fidelity
        ),
    ));
    let all_passed = checks.iter().all(|c| c.passed);
    Ok(VerificationSummary {
        trials,
        seed,
        checks,
        golden,
        expansion,
        monte_carlo,
        security,
        all_passed,
    })
}
