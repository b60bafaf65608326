//! Pure-state simulation of two-qubit quantum state sharing over EPR pairs.
//!
//! Two schemes are covered: a four-EPR-pair scheme with two agents, and a
//! circular scheme where each of `N` agents shares an EPR pair with its
//! neighbour. Alongside execution, the crate brute-forces the Pauli
//! correction tables, checks them against the printed reference tables in
//! `data/`, and runs Monte Carlo and security checks.

pub mod bell;
pub mod error;
pub mod protocol;
pub mod state;
pub mod table;
pub mod verify;

pub use bell::{
    apply_pauli_pair, bell_measure, bell_probabilities, bell_project, bell_state, derive_seed, BellOutcome, PauliOp,
    SeededRng, Sign,
};
pub use error::{QstsError, Result};
pub use protocol::{
    alice_publication, build_setup, correction_for, final_state_for_outcomes, fold_branches, run_protocol, Agent,
    Layout, MeasurementRecord, Protocol, ProtocolTranscript, PublishedBits, Receiver, Scheme, SchemeConfig,
    TwoQubitSecret,
};
pub use state::{labels, Amplitude, DensityMatrix, Matrix2, PureState, QubitLabel};
pub use table::{
    derive_correction_table, derive_correction_table_with, CorrectionKey, CorrectionRule, CorrectionTable, StatePattern,
};
pub use verify::{run_verification, VerificationSummary};
