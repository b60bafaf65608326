//! What a lone receiver can learn, and how well it can guess, in the
//! four-EPR scheme with Charlie as receiver.

use serde::{Deserialize, Serialize};

use crate::bell::{apply_pauli_pair, bell_measure, bell_project, BellOutcome, PauliOp, SeededRng};
use crate::error::Result;
use crate::protocol::{build_setup, Receiver, SchemeConfig, TwoQubitSecret};
use crate::state::{labels, DensityMatrix, PureState};
use crate::table::{derive_correction_table, op_order, RESTORE_TOL};

/// Allowed deviation of `ρ_8` from `I/2`.
pub const MIXED_TOL: f64 = 1e-10;

/// Wrong corrections must stay below `1 - WRONG_GAP`.
pub const WRONG_GAP: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecurityReport {
    pub seed: u64,
    /// Alice's sampled `(R_a3, R_b5, R_17)` for the Haar-random secret.
    pub sampled_alice_outcomes: Vec<BellOutcome>,
    /// Charlie's qubit 8 after the sampled run.
    pub rho_single: DensityMatrix,
    /// Charlie's qubit 6 after the sampled run; not expected to be mixed.
    pub rho_6: DensityMatrix,
    pub rho_6_deviation_from_mixed: f64,
    /// Worst deviation of `ρ_8` from `I/2` over the sampled run and all 64
    /// Alice outcome triples.
    pub max_deviation_from_mixed: f64,
    pub publications_checked: usize,
    /// Smallest number of distinct corrections Bob's outcome can demand,
    /// over all publications.
    pub distinct_corrections_per_publication: usize,
    /// Best success probability of a receiver that guesses the correction
    /// from Alice's publication alone, maximised over publications.
    pub guess_success_probability: f64,
    /// Same quantity found by trying all 16 Pauli pairs on the actual states.
    pub brute_force_guess_success: f64,
    /// Highest fidelity any wrong Pauli pair reaches, over all 256 branches.
    pub max_wrong_correction_fidelity: f64,
    pub passed: bool,
}

fn alice_pairs() -> [(&'static str, &'static str); 3] {
    [("a", "3"), ("b", "5"), ("1", "7")]
}

fn project_alice(setup: &PureState, outs: [BellOutcome; 3]) -> Result<(f64, PureState)> {
    let mut st = setup.clone();
    let mut prob = 1.0;
    for ((x, y), o) in alice_pairs().into_iter().zip(outs) {
        let (p, next) = bell_project(&st, &x.into(), &y.into(), o)?;
        prob *= p;
        st = next;
    }
    Ok((prob, st))
}

pub fn security_check(seed: u64) -> Result<SecurityReport> {
    let config = SchemeConfig::four_epr(Receiver::Charlie);
    let layout = config.layout()?;
    let table = derive_correction_table(&config)?;
    let (r0, r1) = layout.receiver_qubits.clone();
    let mixed = DensityMatrix::maximally_mixed(labels(["8"]));

    // Sampled run on a Haar-random secret.
    let mut rng = SeededRng::new(seed);
    let random_secret = TwoQubitSecret::haar_random(&mut rng);
    let mut st = build_setup(&random_secret, &config)?;
    let mut sampled = Vec::with_capacity(3);
    for (x, y) in alice_pairs() {
        let (o, next) = bell_measure(&st, &x.into(), &y.into(), &mut rng)?;
        sampled.push(o);
        st = next;
    }
    let rho_single = st.partial_trace(&labels(["8"]))?;
    let rho_6 = st.partial_trace(&labels(["6"]))?;
    let rho_6_deviation_from_mixed = rho_6.max_deviation_from(&DensityMatrix::maximally_mixed(labels(["6"])))?;
    let mut max_deviation_from_mixed = rho_single.max_deviation_from(&mixed)?;

    // Every Alice triple on the generic fiducial secret.
    let secret = TwoQubitSecret::fiducial();
    let target = secret.to_state(r0.clone(), r1.clone());
    let setup = build_setup(&secret, &config)?;
    let bob = &layout.schedule[3].pair;
    let mut distinct_min = usize::MAX;
    let mut guess_max: f64 = 0.0;
    let mut brute_max: f64 = 0.0;
    let mut wrong_max: f64 = 0.0;
    let mut publications = 0;
    for a in BellOutcome::ALL {
        for b in BellOutcome::ALL {
            for c in BellOutcome::ALL {
                let (_, after) = project_alice(&setup, [a, b, c])?;
                max_deviation_from_mixed =
                    max_deviation_from_mixed.max(after.partial_trace(&labels(["8"]))?.max_deviation_from(&mixed)?);

                let mut branches = Vec::with_capacity(4);
                for r in BellOutcome::ALL {
                    let (p, fin) = bell_project(&after, &bob.0, &bob.1, r)?;
                    let key = layout.key_for_outcomes(&[a, b, c, r]);
                    let ops = table.correction_for(&key)?;
                    branches.push((p, fin.reorder(&[r0.clone(), r1.clone()])?, ops));
                }

                let mut ops: Vec<_> = branches.iter().map(|b| b.2).collect();
                ops.sort();
                ops.dedup();
                distinct_min = distinct_min.min(ops.len());

                // Probability that a fixed guess equals the required pair.
                let guess = ops
                    .iter()
                    .map(|o| branches.iter().filter(|b| b.2 == *o).map(|b| b.0).sum::<f64>())
                    .fold(0.0, f64::max);
                guess_max = guess_max.max(guess);

                let mut brute: f64 = 0.0;
                for (i, j) in op_order() {
                    let mut success = 0.0;
                    for (p, st, right) in &branches {
                        let f = target.fidelity(&apply_pauli_pair(st, i, &r0, j, &r1)?)?;
                        if f >= 1.0 - RESTORE_TOL {
                            success += p;
                        }
                        if (i, j) != *right {
                            wrong_max = wrong_max.max(f);
                        }
                    }
                    brute = brute.max(success);
                }
                brute_max = brute_max.max(brute);
                publications += 1;
            }
        }
    }

    let passed = max_deviation_from_mixed < MIXED_TOL
        && distinct_min == 4
        && (guess_max - 0.25).abs() < 1e-12
        && (brute_max - 0.25).abs() < 1e-12
        && wrong_max < 1.0 - WRONG_GAP;
    Ok(SecurityReport {
        seed,
        sampled_alice_outcomes: sampled,
        rho_single,
        rho_6,
        rho_6_deviation_from_mixed,
        max_deviation_from_mixed,
        publications_checked: publications,
        distinct_corrections_per_publication: distinct_min,
        guess_success_probability: guess_max,
        brute_force_guess_success: brute_max,
        max_wrong_correction_fidelity: wrong_max,
        passed,
    })
}

/// Corrections Bob's four outcomes demand after Alice's `outcomes`, in Bell
/// enumeration order of Bob's result.
pub fn corrections_after(outcomes: [BellOutcome; 3]) -> Result<Vec<(BellOutcome, (PauliOp, PauliOp))>> {
    let config = SchemeConfig::four_epr(Receiver::Charlie);
    let layout = config.layout()?;
    let table = derive_correction_table(&config)?;
    BellOutcome::ALL
        .into_iter()
        .map(|r| {
            let key = layout.key_for_outcomes(&[outcomes[0], outcomes[1], outcomes[2], r]);
            Ok((r, table.correction_for(&key)?))
        })
        .collect()
}
