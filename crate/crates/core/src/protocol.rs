//! Execution of the four-EPR and circular state-sharing schemes.
//!
//! Qubit labels follow the photon numbering of both schemes: the secret
//! lives on `a, b`; EPR pairs are `(1,2), (3,4), (5,6), (7,8)` for the
//! four-EPR scheme and `(3,4), (5,6), (7,8), ..., (2N+3, 2N+4)` for the
//! circular scheme.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bell::{apply_pauli_pair, bell_measure, bell_project, bell_state, BellOutcome, PauliOp, SeededRng, Sign};
use crate::error::{QstsError, Result};
use crate::state::{labels, PureState, QubitLabel, NORM_TOL};
use crate::table::{cached_table, CorrectionKey, CorrectionTable};

/// Arbitrary two-qubit state `α|00⟩ + β|01⟩ + γ|10⟩ + δ|11⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoQubitSecret {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub gamma: Complex64,
    pub delta: Complex64,
}

impl TwoQubitSecret {
    pub fn new(alpha: Complex64, beta: Complex64, gamma: Complex64, delta: Complex64) -> Result<Self> {
        let s = TwoQubitSecret {
            alpha,
            beta,
            gamma,
            delta,
        };
        s.validate()?;
        Ok(s)
    }

    /// `re, im` interleaved in the order α, β, γ, δ.
    pub fn from_reals(v: [f64; 8]) -> Result<Self> {
        Self::new(
            Complex64::new(v[0], v[1]),
            Complex64::new(v[2], v[3]),
            Complex64::new(v[4], v[5]),
            Complex64::new(v[6], v[7]),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.coefficients();
        if c.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(QstsError::NotNormalized(f64::NAN));
        }
        let norm = c.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(QstsError::NotNormalized(norm));
        }
        Ok(())
    }

    /// Generic secret with magnitudes ∝ (1, 2, 3, 4) and phases (0, π/7, π/3, π/5).
    pub fn fiducial() -> Self {
        use std::f64::consts::PI;
        Self::from_polar([1.0, 2.0, 3.0, 4.0], [0.0, PI / 7.0, PI / 3.0, PI / 5.0])
    }

    /// Second generic secret, used when the first one turns out degenerate
    /// and in table-independence checks.
    pub fn alternate_fiducial() -> Self {
        use std::f64::consts::PI;
        Self::from_polar([5.0, 3.0, 2.0, 7.0], [PI / 11.0, -PI / 4.0, 2.0 * PI / 9.0, PI / 2.0])
    }

    fn from_polar(mags: [f64; 4], phases: [f64; 4]) -> Self {
        let norm = mags.iter().map(|m| m * m).sum::<f64>().sqrt();
        let c: [Complex64; 4] = std::array::from_fn(|i| Complex64::from_polar(mags[i] / norm, phases[i]));
        TwoQubitSecret {
            alpha: c[0],
            beta: c[1],
            gamma: c[2],
            delta: c[3],
        }
    }

    /// Haar-random state: eight standard normals, normalized.
    pub fn haar_random(rng: &mut SeededRng) -> Self {
        let g = rng.generator();
        let v: [f64; 8] = std::array::from_fn(|_| StandardNormal.sample(&mut *g));
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let c: [Complex64; 4] = std::array::from_fn(|i| Complex64::new(v[2 * i] / norm, v[2 * i + 1] / norm));
        TwoQubitSecret {
            alpha: c[0],
            beta: c[1],
            gamma: c[2],
            delta: c[3],
        }
    }

    pub fn coefficients(&self) -> [Complex64; 4] {
        [self.alpha, self.beta, self.gamma, self.delta]
    }

    pub fn to_state(&self, first: QubitLabel, second: QubitLabel) -> PureState {
        PureState::new(vec![first, second], self.coefficients().to_vec()).expect("two labels, four amplitudes")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    FourEpr,
    Circular,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::FourEpr => "four-epr",
            Scheme::Circular => "circular",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Receiver {
    Bob,
    Charlie,
}

impl fmt::Display for Receiver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Receiver::Bob => "bob",
            Receiver::Charlie => "charlie",
        })
    }
}

/// Protocol participant. The four-EPR scheme's single Bob is `Bob(1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Agent {
    Alice,
    Bob(usize),
    Charlie,
}

impl fmt::Display for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Agent::Alice => f.write_str("alice"),
            Agent::Bob(i) => write!(f, "bob{i}"),
            Agent::Charlie => f.write_str("charlie"),
        }
    }
}

impl Serialize for Agent {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Agent {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        match s.as_str() {
            "alice" => Ok(Agent::Alice),
            "charlie" => Ok(Agent::Charlie),
            other => other
                .strip_prefix("bob")
                .and_then(|n| n.parse().ok())
                .map(Agent::Bob)
                .ok_or_else(|| serde::de::Error::custom(format!("unknown agent `{other}`"))),
        }
    }
}

pub const MIN_AGENTS: usize = 2;
pub const MAX_AGENTS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub n_agents: usize,
    pub receiver: Receiver,
}

impl SchemeConfig {
    pub fn four_epr(receiver: Receiver) -> Self {
        SchemeConfig {
            scheme: Scheme::FourEpr,
            n_agents: 2,
            receiver,
        }
    }

    pub fn circular(n_agents: usize) -> Result<Self> {
        let c = SchemeConfig {
            scheme: Scheme::Circular,
            n_agents,
            receiver: Receiver::Charlie,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        match self.scheme {
            Scheme::FourEpr if self.n_agents != 2 => Err(QstsError::InvalidAgents(self.n_agents)),
            Scheme::Circular if !(MIN_AGENTS..=MAX_AGENTS).contains(&self.n_agents) => {
                Err(QstsError::InvalidAgents(self.n_agents))
            }
            Scheme::Circular if self.receiver != Receiver::Charlie => {
                Err(QstsError::InvalidReceiver(self.receiver.to_string()))
            }
            _ => Ok(()),
        }
    }

    pub fn layout(&self) -> Result<Layout> {
        self.validate()?;
        Ok(match self.scheme {
            Scheme::FourEpr => four_epr_layout(self.receiver),
            Scheme::Circular => circular_layout(self.n_agents),
        })
    }
}

impl fmt::Display for SchemeConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.scheme {
            Scheme::FourEpr => write!(f, "four-epr/{}", self.receiver),
            Scheme::Circular => write!(f, "circular/N={}", self.n_agents),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduledMeasurement {
    pub pair: (QubitLabel, QubitLabel),
    pub actor: Agent,
}

/// Static description of a scheme: resources, who holds what, and the
/// measurement schedule.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub epr_pairs: Vec<(QubitLabel, QubitLabel)>,
    pub ownership: BTreeMap<Agent, Vec<QubitLabel>>,
    pub schedule: Vec<ScheduledMeasurement>,
    pub controllers: Vec<Agent>,
    pub receiver: Agent,
    /// Receiver's qubits in the order that carries `(a, b)`.
    pub receiver_qubits: (QubitLabel, QubitLabel),
    /// Schedule index of the Alice measurement she announces in full:
    /// `(b,5)` when the receiver sits on qubit 6, `(a,3)` when it sits on 4.
    pub announced: usize,
}

impl Layout {
    pub fn num_qubits(&self) -> usize {
        2 + 2 * self.epr_pairs.len()
    }

    pub fn alice_measurements(&self) -> usize {
        self.schedule.iter().filter(|m| m.actor == Agent::Alice).count()
    }

    pub fn announced_pair(&self) -> &(QubitLabel, QubitLabel) {
        &self.schedule[self.announced].pair
    }

    /// Key for a full outcome list in schedule order.
    pub fn key_for_outcomes(&self, outcomes: &[BellOutcome]) -> CorrectionKey {
        CorrectionKey::from_outcomes(outcomes[self.announced], outcomes.iter().copied())
    }
}

fn pair(x: &str, y: &str) -> (QubitLabel, QubitLabel) {
    (x.into(), y.into())
}

fn four_epr_layout(receiver: Receiver) -> Layout {
    let alice = |x, y| ScheduledMeasurement {
        pair: pair(x, y),
        actor: Agent::Alice,
    };
    let mut schedule = vec![alice("a", "3"), alice("b", "5"), alice("1", "7")];
    let (controller, receiver_agent, receiver_qubits, announced) = match receiver {
        Receiver::Charlie => {
            schedule.push(ScheduledMeasurement {
                pair: pair("2", "4"),
                actor: Agent::Bob(1),
            });
            (Agent::Bob(1), Agent::Charlie, pair("8", "6"), 1)
        }
        Receiver::Bob => {
            schedule.push(ScheduledMeasurement {
                pair: pair("8", "6"),
                actor: Agent::Charlie,
            });
            (Agent::Charlie, Agent::Bob(1), pair("4", "2"), 0)
        }
    };
    let ownership = BTreeMap::from([
        (Agent::Alice, labels(["a", "b", "1", "3", "5", "7"])),
        (Agent::Bob(1), labels(["2", "4"])),
        (Agent::Charlie, labels(["8", "6"])),
    ]);
    Layout {
        epr_pairs: vec![pair("1", "2"), pair("3", "4"), pair("5", "6"), pair("7", "8")],
        ownership,
        schedule,
        controllers: vec![controller],
        receiver: receiver_agent,
        receiver_qubits,
        announced,
    }
}

fn circular_layout(n: usize) -> Layout {
    let q = |k: usize| QubitLabel::from(k);
    let mut epr_pairs = vec![pair("3", "4"), pair("5", "6")];
    for i in 1..=n - 2 {
        epr_pairs.push((q(2 * i + 5), q(2 * i + 6)));
    }
    epr_pairs.push((q(2 * n + 3), q(2 * n + 4)));

    let mut ownership = BTreeMap::from([
        (Agent::Alice, labels(["a", "b", "3", "5"])),
        (Agent::Charlie, vec![q(2 * n + 4), q(6)]),
    ]);
    let mut schedule = vec![
        ScheduledMeasurement {
            pair: pair("a", "3"),
            actor: Agent::Alice,
        },
        ScheduledMeasurement {
            pair: pair("b", "5"),
            actor: Agent::Alice,
        },
    ];
    let mut controllers = Vec::new();
    for i in 1..n {
        // Bob_i holds the right half of the link to his left neighbour
        // (photon 4 for Bob_1) and the left half of the link to his right.
        let left = if i == 1 { q(4) } else { q(2 * i + 4) };
        let right = q(2 * i + 5);
        ownership.insert(Agent::Bob(i), vec![left.clone(), right.clone()]);
        schedule.push(ScheduledMeasurement {
            pair: (left, right),
            actor: Agent::Bob(i),
        });
        controllers.push(Agent::Bob(i));
    }
    Layout {
        epr_pairs,
        ownership,
        schedule,
        controllers,
        receiver: Agent::Charlie,
        receiver_qubits: (q(2 * n + 4), q(6)),
        announced: 1,
    }
}

/// Joint initial state `|χ⟩_ab ⊗ |ψ⁻⟩ ⊗ ... ⊗ |ψ⁻⟩` for the scheme.
pub fn build_setup(secret: &TwoQubitSecret, config: &SchemeConfig) -> Result<PureState> {
    secret.validate()?;
    let layout = config.layout()?;
    let mut state = secret.to_state("a".into(), "b".into());
    for (x, y) in layout.epr_pairs {
        state = state.tensor(&bell_state(BellOutcome::PsiMinus, x, y)?)?;
    }
    Ok(state)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub pair: (QubitLabel, QubitLabel),
    pub outcome: BellOutcome,
    pub actor: Agent,
    /// Index of the uniform draw that selected the outcome; `None` when forced.
    pub draw_index: Option<u64>,
}

/// Alice's four published bits. The `_b5` fields carry whichever pair the
/// layout announces in full.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PublishedBits {
    pub v_b5: u8,
    pub v_combined: u8,
    pub p_b5: Sign,
    pub p_combined: Sign,
}

impl PublishedBits {
    pub const BITS: u32 = 4;
}

/// Bits Alice announces: the outcome on `announced` in full, plus the XOR
/// of bit values and the product of parities over all of her outcomes.
pub fn alice_publication(records: &[MeasurementRecord], announced: &(QubitLabel, QubitLabel)) -> Result<PublishedBits> {
    let alice: Vec<_> = records.iter().filter(|r| r.actor == Agent::Alice).collect();
    let has = |x: &str, y: &str| alice.iter().find(|r| r.pair == pair(x, y));
    has("a", "3").ok_or_else(|| QstsError::MissingRecord("(a,3)".into()))?;
    has("b", "5").ok_or_else(|| QstsError::MissingRecord("(b,5)".into()))?;
    let b5 = alice
        .iter()
        .find(|r| r.pair == *announced)
        .ok_or_else(|| QstsError::MissingRecord(format!("({},{})", announced.0, announced.1)))?;
    Ok(PublishedBits {
        v_b5: b5.outcome.bit_value(),
        v_combined: alice.iter().fold(0, |v, r| v ^ r.outcome.bit_value()),
        p_b5: b5.outcome.parity(),
        p_combined: alice.iter().fold(Sign::Plus, |p, r| p * r.outcome.parity()),
    })
}

/// Correction key from Alice's publication and every controller's outcome.
pub fn correction_key(
    published: &PublishedBits,
    controller_outcomes: impl IntoIterator<Item = BellOutcome>,
) -> CorrectionKey {
    let (v, p) = controller_outcomes
        .into_iter()
        .fold((published.v_combined, published.p_combined), |(v, p), o| {
            (v ^ o.bit_value(), p * o.parity())
        });
    CorrectionKey {
        v_total: v,
        v_b5: published.v_b5,
        p_b5: published.p_b5,
        p_total: p,
    }
}

/// Receiver-pair state, before correction, for a forced outcome sequence.
pub fn final_state_for_outcomes(
    secret: &TwoQubitSecret,
    config: &SchemeConfig,
    outcomes: &[BellOutcome],
) -> Result<PureState> {
    let layout = config.layout()?;
    if outcomes.len() != layout.schedule.len() {
        return Err(QstsError::OutcomeCount {
            expected: layout.schedule.len(),
            got: outcomes.len(),
        });
    }
    let mut state = build_setup(secret, config)?;
    for (m, &o) in layout.schedule.iter().zip(outcomes) {
        state = bell_project(&state, &m.pair.0, &m.pair.1, o)?.1;
    }
    let (r0, r1) = &layout.receiver_qubits;
    state.reorder(&[r0.clone(), r1.clone()])
}

/// One leaf of the full outcome tree.
pub struct Branch<'a> {
    pub outcomes: &'a [BellOutcome],
    pub probability: f64,
    /// Receiver pair in `receiver_qubits` order, normalized.
    pub receiver_state: &'a PureState,
}

/// Folds over every complete outcome combination of the schedule, using
/// forced projections. The first measurement fans out across threads and
/// partial results are reduced in the fixed outcome order.
pub fn fold_branches<T, I, F, R>(
    secret: &TwoQubitSecret,
    config: &SchemeConfig,
    init: I,
    fold: F,
    reduce: R,
) -> Result<T>
where
    T: Send,
    I: Fn() -> T + Sync,
    F: Fn(T, &Branch<'_>) -> Result<T> + Sync,
    R: Fn(T, T) -> Result<T>,
{
    let layout = config.layout()?;
    let setup = build_setup(secret, config)?;
    let receiver = [layout.receiver_qubits.0.clone(), layout.receiver_qubits.1.clone()];

    #[allow(clippy::too_many_arguments)]
    fn walk<T, F>(
        state: PureState,
        depth: usize,
        prob: f64,
        outcomes: &mut Vec<BellOutcome>,
        layout: &Layout,
        receiver: &[QubitLabel; 2],
        acc: T,
        fold: &F,
    ) -> Result<T>
    where
        F: Fn(T, &Branch<'_>) -> Result<T>,
    {
        if depth == layout.schedule.len() {
            let rs = state.reorder(receiver)?;
            return fold(
                acc,
                &Branch {
                    outcomes,
                    probability: prob,
                    receiver_state: &rs,
                },
            );
        }
        let (x, y) = &layout.schedule[depth].pair;
        let mut acc = acc;
        for o in BellOutcome::ALL {
            let (p, next) = bell_project(&state, x, y, o)?;
            outcomes.push(o);
            acc = walk(next, depth + 1, prob * p, outcomes, layout, receiver, acc, fold)?;
            outcomes.pop();
        }
        Ok(acc)
    }

    let (x, y) = &layout.schedule[0].pair;
    let parts: Vec<T> = BellOutcome::ALL
        .par_iter()
        .map(|&o| {
            let (p, next) = bell_project(&setup, x, y, o)?;
            let mut outcomes = vec![o];
            walk(next, 1, p, &mut outcomes, &layout, &receiver, init(), &fold)
        })
        .collect::<Result<_>>()?;
    let mut it = parts.into_iter();
    let first = it.next().expect("four first-level branches");
    it.try_fold(first, reduce)
}

/// Full record of one protocol run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolTranscript {
    pub config: SchemeConfig,
    pub secret: TwoQubitSecret,
    pub seed: Option<u64>,
    pub records: Vec<MeasurementRecord>,
    pub published: PublishedBits,
    pub key: CorrectionKey,
    pub corrections: (PauliOp, PauliOp),
    pub final_labels: (QubitLabel, QubitLabel),
    /// Receiver's pair after correction.
    pub final_state: PureState,
    pub fidelity: f64,
    pub classical_bits_sent: BTreeMap<Agent, u32>,
}

impl ProtocolTranscript {
    pub fn outcomes(&self) -> Vec<BellOutcome> {
        self.records.iter().map(|r| r.outcome).collect()
    }
}

/// A scheme bound to its derived correction table.
#[derive(Clone, Debug)]
pub struct Protocol {
    config: SchemeConfig,
    layout: Layout,
    table: Arc<CorrectionTable>,
}

impl Protocol {
    pub fn new(config: SchemeConfig) -> Result<Self> {
        let layout = config.layout()?;
        let table = cached_table(&config)?;
        Ok(Protocol { config, layout, table })
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.config
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn table(&self) -> &CorrectionTable {
        &self.table
    }

    /// Runs the schedule with outcomes sampled from `rng`.
    pub fn run(&self, secret: &TwoQubitSecret, rng: &mut SeededRng) -> Result<ProtocolTranscript> {
        self.execute(secret, Some(rng), None)
    }

    /// Runs the schedule with the given outcomes (zero-probability branches are errors).
    pub fn run_forced(&self, secret: &TwoQubitSecret, outcomes: &[BellOutcome]) -> Result<ProtocolTranscript> {
        if outcomes.len() != self.layout.schedule.len() {
            return Err(QstsError::OutcomeCount {
                expected: self.layout.schedule.len(),
                got: outcomes.len(),
            });
        }
        self.execute(secret, None, Some(outcomes))
    }

    fn execute(
        &self,
        secret: &TwoQubitSecret,
        mut rng: Option<&mut SeededRng>,
        forced: Option<&[BellOutcome]>,
    ) -> Result<ProtocolTranscript> {
        let seed = rng.as_ref().map(|r| r.seed());
        let mut state = build_setup(secret, &self.config)?;
        let mut records = Vec::with_capacity(self.layout.schedule.len());
        for (i, m) in self.layout.schedule.iter().enumerate() {
            let (x, y) = &m.pair;
            let (outcome, draw_index, next) = match (forced, rng.as_deref_mut()) {
                (Some(f), _) => {
                    let (_, next) = bell_project(&state, x, y, f[i])?;
                    (f[i], None, next)
                }
                (None, Some(r)) => {
                    let idx = r.draws();
                    let (o, next) = bell_measure(&state, x, y, r)?;
                    (o, Some(idx), next)
                }
                (None, None) => unreachable!("either forced outcomes or an rng"),
            };
            records.push(MeasurementRecord {
                pair: m.pair.clone(),
                outcome,
                actor: m.actor,
                draw_index,
            });
            state = next;
        }

        let published = alice_publication(&records, self.layout.announced_pair())?;
        let key = correction_key(
            &published,
            records.iter().filter(|r| r.actor != Agent::Alice).map(|r| r.outcome),
        );
        let corrections = self.table.correction_for(&key)?;
        let (r0, r1) = self.layout.receiver_qubits.clone();
        let received = state.reorder(&[r0.clone(), r1.clone()])?;
        let final_state = apply_pauli_pair(&received, corrections.0, &r0, corrections.1, &r1)?;
        let fidelity = secret.to_state(r0.clone(), r1.clone()).fidelity(&final_state)?;

        let mut classical_bits_sent = BTreeMap::from([(Agent::Alice, PublishedBits::BITS)]);
        for c in &self.layout.controllers {
            classical_bits_sent.insert(*c, 2);
        }
        Ok(ProtocolTranscript {
            config: self.config,
            secret: *secret,
            seed,
            records,
            published,
            key,
            corrections,
            final_labels: (r0, r1),
            final_state,
            fidelity,
            classical_bits_sent,
        })
    }
}

/// Sampled end-to-end run.
pub fn run_protocol(secret: &TwoQubitSecret, config: &SchemeConfig, rng: &mut SeededRng) -> Result<ProtocolTranscript> {
    Protocol::new(*config)?.run(secret, rng)
}

/// Pauli pair the receiver applies for `key`, from the derived table of `config`.
pub fn correction_for(key: &CorrectionKey, config: &SchemeConfig) -> Result<(PauliOp, PauliOp)> {
    cached_table(config)?.correction_for(key)
}

#[cfg(test)]
mod tests {
    use super::*;
    use BellOutcome::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn secret() -> TwoQubitSecret {
        TwoQubitSecret::fiducial()
    }

    fn charlie() -> SchemeConfig {
        SchemeConfig::four_epr(Receiver::Charlie)
    }

    /// State `(coef[0]|b0⟩ + ...)` where `terms[k] = (coefficient index, sign)` on basis k.
    fn pattern_state(s: &TwoQubitSecret, l0: &str, l1: &str, terms: [(usize, f64); 4]) -> PureState {
        let co = s.coefficients();
        PureState::new(labels([l0, l1]), terms.iter().map(|&(i, sg)| co[i] * sg).collect()).unwrap()
    }

    fn assert_same_up_to_phase(a: &PureState, b: &PureState) {
        let f = a.fidelity(b).unwrap();
        assert!((f - 1.0).abs() < 1e-12, "fidelity {f}");
    }

    #[test]
    fn secret_validation() {
        assert!(TwoQubitSecret::from_reals([1., 0., 0., 0., 0., 0., 0., 0.]).is_ok());
        assert!(matches!(
            TwoQubitSecret::from_reals([1., 0., 0., 0., 0., 0., 1., 0.]),
            Err(QstsError::NotNormalized(_))
        ));
        let f = TwoQubitSecret::fiducial();
        f.validate().unwrap();
        let mags: Vec<f64> = f.coefficients().iter().map(|a| a.norm()).collect();
        assert!((mags[1] / mags[0] - 2.0).abs() < 1e-12);
        assert!((mags[3] / mags[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn haar_secrets_are_normalized_and_reproducible() {
        let a = TwoQubitSecret::haar_random(&mut SeededRng::new(5));
        let b = TwoQubitSecret::haar_random(&mut SeededRng::new(5));
        assert_eq!(a, b);
        a.validate().unwrap();
    }

    #[test]
    fn four_epr_setup() {
        let basis = TwoQubitSecret::from_reals([1., 0., 0., 0., 0., 0., 0., 0.]).unwrap();
        let s = build_setup(&basis, &charlie()).unwrap();
        assert_eq!(s.num_qubits(), 10);
        let nz: Vec<_> = s.amplitudes().iter().filter(|a| a.norm() > 1e-12).collect();
        assert_eq!(nz.len(), 16);
        assert!(nz.iter().all(|a| (a.norm() - 0.25).abs() < 1e-12));
        // Kronecker oracle: |00⟩_ab ⊗ four singlets.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let sing = [0.0, h, -h, 0.0];
        for (idx, amp) in s.amplitudes().iter().enumerate() {
            let ab = idx >> 8;
            let want = if ab == 0 {
                (0..4).map(|k| sing[(idx >> (6 - 2 * k)) & 3]).product::<f64>()
            } else {
                0.0
            };
            assert!((amp - c(want, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn circular_layouts() {
        let l2 = SchemeConfig::circular(2).unwrap().layout().unwrap();
        assert_eq!(l2.num_qubits(), 8);
        assert_eq!(l2.ownership[&Agent::Bob(1)], labels(["4", "7"]));
        assert_eq!(l2.ownership[&Agent::Charlie], labels(["8", "6"]));
        let s = build_setup(&secret(), &SchemeConfig::circular(2).unwrap()).unwrap();
        let mut got: Vec<_> = s.labels().iter().map(|l| l.to_string()).collect();
        got.sort();
        let mut want: Vec<String> = ["a", "b", "3", "4", "5", "6", "7", "8"].map(String::from).to_vec();
        want.sort();
        assert_eq!(got, want);

        let l3 = SchemeConfig::circular(3).unwrap().layout().unwrap();
        assert_eq!(l3.ownership[&Agent::Bob(2)], labels(["8", "9"]));
        assert_eq!(l3.ownership[&Agent::Charlie], labels(["10", "6"]));
        assert_eq!(l3.num_qubits(), 10);
        let l10 = SchemeConfig::circular(10).unwrap().layout().unwrap();
        assert_eq!(l10.num_qubits(), 24);

        assert_eq!(SchemeConfig::circular(1).unwrap_err(), QstsError::InvalidAgents(1));
        assert_eq!(SchemeConfig::circular(11).unwrap_err(), QstsError::InvalidAgents(11));
        let bad = SchemeConfig {
            scheme: Scheme::Circular,
            n_agents: 3,
            receiver: Receiver::Bob,
        };
        assert!(matches!(bad.validate(), Err(QstsError::InvalidReceiver(_))));
    }

    #[test]
    fn every_qubit_is_owned_exactly_once() {
        for cfg in [
            charlie(),
            SchemeConfig::four_epr(Receiver::Bob),
            SchemeConfig::circular(2).unwrap(),
            SchemeConfig::circular(6).unwrap(),
        ] {
            let l = cfg.layout().unwrap();
            let mut owned: Vec<_> = l.ownership.values().flatten().cloned().collect();
            owned.sort();
            let mut all = labels(["a", "b"]);
            all.extend(l.epr_pairs.iter().flat_map(|(x, y)| [x.clone(), y.clone()]));
            all.sort();
            assert_eq!(owned, all, "{cfg}");
            for m in &l.schedule {
                let held = &l.ownership[&m.actor];
                assert!(held.contains(&m.pair.0) && held.contains(&m.pair.1));
            }
        }
    }

    #[test]
    fn publication_examples() {
        let rec = |x: &str, y: &str, o| MeasurementRecord {
            pair: pair(x, y),
            outcome: o,
            actor: Agent::Alice,
            draw_index: None,
        };
        let b5 = pair("b", "5");
        let p = alice_publication(
            &[
                rec("a", "3", PsiMinus),
                rec("b", "5", PsiMinus),
                rec("1", "7", PsiMinus),
            ],
            &b5,
        )
        .unwrap();
        assert_eq!(
            (p.v_b5, p.v_combined, p.p_b5, p.p_combined),
            (1, 1, Sign::Minus, Sign::Minus)
        );
        let p = alice_publication(
            &[rec("a", "3", PsiMinus), rec("b", "5", PhiMinus), rec("1", "7", PsiPlus)],
            &b5,
        )
        .unwrap();
        assert_eq!(
            (p.v_b5, p.v_combined, p.p_b5, p.p_combined),
            (0, 0, Sign::Minus, Sign::Plus)
        );
        let p = alice_publication(
            &[rec("a", "3", PhiPlus), rec("b", "5", PhiPlus), rec("1", "7", PhiPlus)],
            &b5,
        )
        .unwrap();
        assert_eq!(
            (p.v_b5, p.v_combined, p.p_b5, p.p_combined),
            (0, 0, Sign::Plus, Sign::Plus)
        );
        assert!(matches!(
            alice_publication(&[rec("a", "3", PhiPlus)], &b5),
            Err(QstsError::MissingRecord(_))
        ));
    }

    #[test]
    fn singlet_outcomes_leave_secret_on_receiver() {
        let s = secret();
        let got = final_state_for_outcomes(&s, &charlie(), &[PsiMinus; 4]).unwrap();
        assert_same_up_to_phase(&got, &s.to_state("8".into(), "6".into()));
        let t = Protocol::new(charlie())
            .unwrap()
            .run_forced(&s, &[PsiMinus; 4])
            .unwrap();
        assert_eq!(t.corrections, (PauliOp::U0, PauliOp::U0));
        assert!(t.fidelity > 1.0 - 1e-10);
    }

    #[test]
    fn two_step_swap_branches() {
        // Measuring only (a,3) then (b,5): ψ⁻ψ⁻ leaves the secret on (4,6).
        let s = secret();
        let setup = s
            .to_state("a".into(), "b".into())
            .tensor(&bell_state(PsiMinus, "3".into(), "4".into()).unwrap())
            .unwrap()
            .tensor(&bell_state(PsiMinus, "5".into(), "6".into()).unwrap())
            .unwrap();
        let (_, st) = bell_project(&setup, &"a".into(), &"3".into(), PsiMinus).unwrap();
        let (_, st) = bell_project(&st, &"b".into(), &"5".into(), PsiMinus).unwrap();
        assert_same_up_to_phase(&st, &s.to_state("4".into(), "6".into()));
    }

    #[test]
    fn receiver_states_for_bob_outcomes() {
        let s = secret();
        // ψ⁺_24: α|00⟩+β|01⟩−γ|10⟩−δ|11⟩ on (8,6)
        let got = final_state_for_outcomes(&s, &charlie(), &[PsiMinus, PsiMinus, PsiMinus, PsiPlus]).unwrap();
        assert_same_up_to_phase(
            &got,
            &pattern_state(&s, "8", "6", [(0, 1.), (1, 1.), (2, -1.), (3, -1.)]),
        );
        // φ⁻_24: α|10⟩+β|11⟩+γ|00⟩+δ|01⟩
        let got = final_state_for_outcomes(&s, &charlie(), &[PsiMinus, PsiMinus, PsiMinus, PhiMinus]).unwrap();
        assert_same_up_to_phase(&got, &pattern_state(&s, "8", "6", [(2, 1.), (3, 1.), (0, 1.), (1, 1.)]));
        // φ⁺_24: α|10⟩+β|11⟩−γ|00⟩−δ|01⟩
        let got = final_state_for_outcomes(&s, &charlie(), &[PsiMinus, PsiMinus, PsiMinus, PhiPlus]).unwrap();
        assert_same_up_to_phase(
            &got,
            &pattern_state(&s, "8", "6", [(2, -1.), (3, -1.), (0, 1.), (1, 1.)]),
        );

        let circ = SchemeConfig::circular(2).unwrap();
        let got = final_state_for_outcomes(&s, &circ, &[PsiMinus; 3]).unwrap();
        assert_same_up_to_phase(&got, &s.to_state("8".into(), "6".into()));
        assert_eq!(
            final_state_for_outcomes(&s, &circ, &[PsiMinus; 4]).unwrap_err(),
            QstsError::OutcomeCount { expected: 3, got: 4 }
        );
    }

    #[test]
    fn worked_example() {
        let s = secret();
        let t = Protocol::new(charlie())
            .unwrap()
            .run_forced(&s, &[PsiMinus, PhiMinus, PsiPlus, PsiMinus])
            .unwrap();
        assert_eq!(t.key.v_total, 1);
        assert_eq!(t.key.v_b5, 0);
        assert_eq!(t.key.p_b5, Sign::Minus);
        assert_eq!(t.key.p_total, Sign::Minus);
        assert_eq!(t.corrections, (PauliOp::U1, PauliOp::U2));
        assert!(t.fidelity >= 1.0 - 1e-10);
    }

    #[test]
    fn alice_measurements_commute() {
        let s = secret();
        let cfg = charlie();
        let orders: [[(&str, &str); 3]; 3] = [
            [("a", "3"), ("b", "5"), ("1", "7")],
            [("1", "7"), ("a", "3"), ("b", "5")],
            [("b", "5"), ("1", "7"), ("a", "3")],
        ];
        for outs in [[PsiMinus, PhiMinus, PsiPlus], [PhiPlus, PsiPlus, PhiMinus]] {
            let mut results = Vec::new();
            for order in &orders {
                let mut st = build_setup(&s, &cfg).unwrap();
                for &(x, y) in order {
                    let k = [("a", "3"), ("b", "5"), ("1", "7")]
                        .iter()
                        .position(|p| *p == (x, y))
                        .unwrap();
                    st = bell_project(&st, &x.into(), &y.into(), outs[k]).unwrap().1;
                }
                results.push(st);
            }
            for r in &results[1..] {
                assert_same_up_to_phase(r, &results[0]);
            }
        }
    }

    #[test]
    fn sampled_runs_are_deterministic_and_exact() {
        let s = TwoQubitSecret::haar_random(&mut SeededRng::new(11));
        for cfg in [
            charlie(),
            SchemeConfig::four_epr(Receiver::Bob),
            SchemeConfig::circular(4).unwrap(),
        ] {
            let a = run_protocol(&s, &cfg, &mut SeededRng::new(3)).unwrap();
            let b = run_protocol(&s, &cfg, &mut SeededRng::new(3)).unwrap();
            assert_eq!(a, b);
            assert!(a.fidelity >= 1.0 - 1e-10, "{cfg}: {}", a.fidelity);
            assert_eq!(a.records.len(), cfg.layout().unwrap().schedule.len());
            let draws: Vec<_> = a.records.iter().map(|r| r.draw_index.unwrap()).collect();
            assert_eq!(draws, (0..draws.len() as u64).collect::<Vec<_>>());
        }
    }

    #[test]
    fn classical_cost() {
        let t = run_protocol(&secret(), &SchemeConfig::circular(4).unwrap(), &mut SeededRng::new(1)).unwrap();
        assert_eq!(t.classical_bits_sent[&Agent::Alice], 4);
        for i in 1..4 {
            assert_eq!(t.classical_bits_sent[&Agent::Bob(i)], 2);
        }
        assert!(!t.classical_bits_sent.contains_key(&Agent::Charlie));
    }

    #[test]
    fn agent_serde() {
        let j = serde_json::to_string(&Agent::Bob(3)).unwrap();
        assert_eq!(j, "\"bob3\"");
        assert_eq!(serde_json::from_str::<Agent>(&j).unwrap(), Agent::Bob(3));
        assert!(serde_json::from_str::<Agent>("\"eve\"").is_err());
    }
}
