//! Correction keys, state patterns and brute-force derivation of the
//! receiver's correction table.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::bell::{apply_pauli_pair, bell_project, bell_state, BellOutcome, PauliOp, Sign};
use crate::error::{QstsError, Result};
use crate::protocol::{fold_branches, Scheme, SchemeConfig, TwoQubitSecret};
use crate::state::{PureState, QubitLabel};

/// Fidelity above which a correction counts as restoring the secret.
pub const RESTORE_TOL: f64 = 1e-9;

/// Full outcome trees larger than this are covered by a reduced enumeration.
pub const MAX_EXHAUSTIVE_BRANCHES: usize = 4096;

/// `(V_total, V_b5, P_b5, P_total)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CorrectionKey {
    pub v_total: u8,
    pub v_b5: u8,
    pub p_b5: Sign,
    pub p_total: Sign,
}

impl CorrectionKey {
    pub fn new(v_total: u8, v_b5: u8, p_b5: Sign, p_total: Sign) -> Self {
        CorrectionKey {
            v_total,
            v_b5,
            p_b5,
            p_total,
        }
    }

    /// Key from `R_b5` and every outcome of the run, `R_b5` included.
    pub fn from_outcomes(b5: BellOutcome, all: impl IntoIterator<Item = BellOutcome>) -> Self {
        let (v, p) = all
            .into_iter()
            .fold((0u8, Sign::Plus), |(v, p), o| (v ^ o.bit_value(), p * o.parity()));
        CorrectionKey {
            v_total: v,
            v_b5: b5.bit_value(),
            p_b5: b5.parity(),
            p_total: p,
        }
    }

    /// All 16 keys.
    pub fn all() -> impl Iterator<Item = CorrectionKey> {
        let signs = [Sign::Minus, Sign::Plus];
        (0..2u8).flat_map(move |v| {
            (0..2u8).flat_map(move |vb| {
                signs
                    .into_iter()
                    .flat_map(move |pb| signs.into_iter().map(move |p| CorrectionKey::new(v, vb, pb, p)))
            })
        })
    }
}

impl fmt::Display for CorrectionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{},{})", self.v_total, self.v_b5, self.p_b5, self.p_total)
    }
}

impl FromStr for CorrectionKey {
    type Err = QstsError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || QstsError::UnknownKey(s.to_string());
        let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
        let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(bad());
        }
        let bit = |p: &str| match p {
            "0" => Ok(0),
            "1" => Ok(1),
            _ => Err(bad()),
        };
        Ok(CorrectionKey {
            v_total: bit(parts[0])?,
            v_b5: bit(parts[1])?,
            p_b5: parts[2].parse().map_err(|_| bad())?,
            p_total: parts[3].parse().map_err(|_| bad())?,
        })
    }
}

/// A state `Σ_k s_k c_k |π(k)⟩` where `c = (α, β, γ, δ)`, modulo global phase.
/// `slots[k]` holds the basis index `π(k)` and sign `s_k`; `s_0` is always `+`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StatePattern {
    slots: [(u8, Sign); 4],
}

const COEF_NAMES: [char; 4] = ['a', 'b', 'c', 'd'];
const BASIS_NAMES: [&str; 4] = ["00", "01", "10", "11"];

fn permutations4() -> Vec<[u8; 4]> {
    let mut out = Vec::with_capacity(24);
    for code in 0..256u32 {
        let p: [u8; 4] = std::array::from_fn(|k| ((code >> (2 * k)) & 3) as u8);
        if (0..4).all(|i| (i + 1..4).all(|j| p[i] != p[j])) {
            out.push(p);
        }
    }
    out
}

impl StatePattern {
    pub fn new(slots: [(u8, Sign); 4]) -> Result<Self> {
        let mut seen = [false; 4];
        for &(b, _) in &slots {
            if b > 3 || seen[b as usize] {
                return Err(QstsError::NotSignedPermutation);
            }
            seen[b as usize] = true;
        }
        let mut slots = slots;
        if slots[0].1 == Sign::Minus {
            for s in &mut slots {
                s.1 = s.1 * Sign::Minus;
            }
        }
        Ok(StatePattern { slots })
    }

    pub fn identity() -> Self {
        StatePattern {
            slots: [(0, Sign::Plus), (1, Sign::Plus), (2, Sign::Plus), (3, Sign::Plus)],
        }
    }

    pub fn slots(&self) -> [(u8, Sign); 4] {
        self.slots
    }

    /// The state this pattern denotes for `secret`, on `(l0, l1)`.
    pub fn to_state(&self, secret: &TwoQubitSecret, l0: QubitLabel, l1: QubitLabel) -> PureState {
        let c = secret.coefficients();
        let mut amps = vec![num_complex::Complex64::new(0.0, 0.0); 4];
        for (k, &(b, s)) in self.slots.iter().enumerate() {
            amps[b as usize] = c[k] * s.as_f64();
        }
        PureState::new(vec![l0, l1], amps).expect("signed permutation of a normalized vector")
    }

    /// Identifies `state` (two qubits) as a signed permutation of `secret`.
    /// Fails if none fits, or if more than one does.
    pub fn from_state(state: &PureState, secret: &TwoQubitSecret) -> Result<Self> {
        if state.num_qubits() != 2 {
            return Err(QstsError::BadLength {
                len: state.amplitudes().len(),
                expected: 4,
            });
        }
        let (l0, l1) = (state.labels()[0].clone(), state.labels()[1].clone());
        let mut found = None;
        for perm in permutations4() {
            for signs in 0..8u8 {
                let mut slots = [(0u8, Sign::Plus); 4];
                for k in 0..4 {
                    let neg = k > 0 && (signs >> (k - 1)) & 1 == 1;
                    slots[k] = (perm[k], if neg { Sign::Minus } else { Sign::Plus });
                }
                let cand = StatePattern { slots };
                let f = cand.to_state(secret, l0.clone(), l1.clone()).fidelity(state)?;
                if f >= 1.0 - RESTORE_TOL {
                    if found.is_some() {
                        return Err(QstsError::DegenerateSecret(cand.to_string()));
                    }
                    found = Some(cand);
                }
            }
        }
        found.ok_or(QstsError::NotSignedPermutation)
    }

    /// Pattern left by applying `ops` to the plain secret.
    pub fn after(self, ops: (PauliOp, PauliOp)) -> Self {
        let mut slots = self.slots;
        for s in &mut slots {
            let (hi, lo) = (s.0 >> 1, s.0 & 1);
            let (hi, sh) = pauli_on_bit(ops.0, hi);
            let (lo, sl) = pauli_on_bit(ops.1, lo);
            *s = ((hi << 1) | lo, s.1 * sh * sl);
        }
        StatePattern::new(slots).expect("Paulis permute the basis")
    }
}

fn pauli_on_bit(op: PauliOp, bit: u8) -> (u8, Sign) {
    match (op, bit) {
        (PauliOp::U0, b) => (b, Sign::Plus),
        (PauliOp::U1, 0) => (0, Sign::Plus),
        (PauliOp::U1, _) => (1, Sign::Minus),
        (PauliOp::U2, b) => (1 - b, Sign::Plus),
        // [[0,1],[-1,0]]: |0⟩ → -|1⟩, |1⟩ → |0⟩
        (PauliOp::U3, 0) => (1, Sign::Minus),
        (PauliOp::U3, _) => (0, Sign::Plus),
    }
}

impl fmt::Display for StatePattern {
    /// ASCII form, e.g. `a|01>-b|00>+c|11>-d|10>`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, &(b, s)) in self.slots.iter().enumerate() {
            if k > 0 || s == Sign::Minus {
                write!(f, "{}", s.symbol())?;
            }
            write!(f, "{}|{}>", COEF_NAMES[k], BASIS_NAMES[b as usize])?;
        }
        Ok(())
    }
}

impl FromStr for StatePattern {
    type Err = QstsError;

    /// Accepts the ASCII form and the Greek/ket form (`α|01⟩ − β|00⟩ ...`).
    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                'α' => 'a',
                'β' => 'b',
                'γ' => 'c',
                'δ' => 'd',
                '⟩' => '>',
                '−' => '-',
                other => other,
            })
            .collect();
        let mut slots: [Option<(u8, Sign)>; 4] = [None; 4];
        let mut rest = norm.as_str();
        while !rest.is_empty() {
            let sign = match rest.as_bytes()[0] {
                b'+' => {
                    rest = &rest[1..];
                    Sign::Plus
                }
                b'-' => {
                    rest = &rest[1..];
                    Sign::Minus
                }
                _ => Sign::Plus,
            };
            let term_end = rest.find('>').ok_or(QstsError::NotSignedPermutation)?;
            let term = &rest[..term_end];
            rest = &rest[term_end + 1..];
            let (name, ket) = term.split_once('|').ok_or(QstsError::NotSignedPermutation)?;
            let k = COEF_NAMES
                .iter()
                .position(|c| name.len() == 1 && name.starts_with(*c))
                .ok_or(QstsError::NotSignedPermutation)?;
            let b = BASIS_NAMES
                .iter()
                .position(|x| *x == ket)
                .ok_or(QstsError::NotSignedPermutation)?;
            if slots[k].replace((b as u8, sign)).is_some() {
                return Err(QstsError::NotSignedPermutation);
            }
        }
        let slots: Option<Vec<_>> = slots.into_iter().collect();
        let slots = slots.ok_or(QstsError::NotSignedPermutation)?;
        StatePattern::new([slots[0], slots[1], slots[2], slots[3]])
    }
}

impl Serialize for StatePattern {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for StatePattern {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// One row: key, the receiver's uncorrected pattern, the Pauli pair that undoes it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectionRule {
    pub key: CorrectionKey,
    pub pattern: StatePattern,
    pub op_i: PauliOp,
    pub op_j: PauliOp,
    /// Outcome combinations that produced this key.
    pub branches: usize,
}

impl CorrectionRule {
    pub fn ops(&self) -> (PauliOp, PauliOp) {
        (self.op_i, self.op_j)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectionTable {
    pub config: SchemeConfig,
    pub receiver_qubits: (QubitLabel, QubitLabel),
    /// Rows sorted by operator pair in the canonical order of [`op_order`].
    pub rules: Vec<CorrectionRule>,
    pub branches_examined: usize,
    /// `false` when a reduced enumeration was used (long circular chains).
    pub exhaustive: bool,
}

/// Canonical row order of operator pairs.
pub fn op_order() -> [(PauliOp, PauliOp); 16] {
    use PauliOp::*;
    [
        (U0, U0),
        (U0, U1),
        (U1, U0),
        (U1, U1),
        (U0, U2),
        (U0, U3),
        (U1, U2),
        (U1, U3),
        (U2, U0),
        (U2, U1),
        (U3, U0),
        (U3, U1),
        (U2, U2),
        (U2, U3),
        (U3, U2),
        (U3, U3),
    ]
}

impl CorrectionTable {
    pub fn lookup(&self, key: &CorrectionKey) -> Option<&CorrectionRule> {
        self.rules.iter().find(|r| r.key == *key)
    }

    pub fn correction_for(&self, key: &CorrectionKey) -> Result<(PauliOp, PauliOp)> {
        self.lookup(key)
            .map(CorrectionRule::ops)
            .ok_or_else(|| QstsError::UnknownKey(key.to_string()))
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

/// One complete outcome combination and the receiver's normalized pair state.
#[derive(Clone, Debug)]
pub struct Leaf {
    pub outcomes: Vec<BellOutcome>,
    pub probability: f64,
    pub receiver_state: PureState,
}

/// Every leaf of the outcome tree, or, when the tree exceeds
/// [`MAX_EXHAUSTIVE_BRANCHES`], a reduced set in which controllers beyond
/// the first take a few fixed outcome patterns. The flag reports which.
pub fn enumerate_leaves(secret: &TwoQubitSecret, config: &SchemeConfig) -> Result<(Vec<Leaf>, bool)> {
    let layout = config.layout()?;
    let m = layout.schedule.len();
    if 4usize.pow(m as u32) <= MAX_EXHAUSTIVE_BRANCHES {
        let leaves = fold_branches(
            secret,
            config,
            Vec::new,
            |mut acc: Vec<Leaf>, b| {
                acc.push(Leaf {
                    outcomes: b.outcomes.to_vec(),
                    probability: b.probability,
                    receiver_state: b.receiver_state.clone(),
                });
                Ok(acc)
            },
            |mut a, b| {
                a.extend(b);
                Ok(a)
            },
        )?;
        return Ok((leaves, true));
    }
    debug_assert_eq!(config.scheme, Scheme::Circular);
    let fills: [fn(usize) -> BellOutcome; 4] = [
        |_| BellOutcome::PsiMinus,
        |_| BellOutcome::PhiPlus,
        |i| BellOutcome::ALL[i % 4],
        |i| BellOutcome::ALL[3 - i % 4],
    ];
    let mut leaves = Vec::new();
    for fill in fills {
        let tail: Vec<BellOutcome> = (0..m - 3).map(fill).collect();
        leaves.extend(reduced_circular_leaves(secret, config, &tail)?);
    }
    Ok((leaves, false))
}

/// Collapses the Bob chain with the given outcomes for Bob_2.. first, then
/// enumerates Alice and Bob_1 on the small remaining register. Projections
/// on disjoint qubits commute with the tensor product, so each leaf equals
/// the one reached by the scheduled order.
fn reduced_circular_leaves(secret: &TwoQubitSecret, config: &SchemeConfig, tail: &[BellOutcome]) -> Result<Vec<Leaf>> {
    let layout = config.layout()?;
    let chain_pairs = &layout.epr_pairs[2..];
    let mut chain = bell_state(
        BellOutcome::PsiMinus,
        chain_pairs[0].0.clone(),
        chain_pairs[0].1.clone(),
    )?;
    let mut prob = 1.0;
    for (k, (x, y)) in chain_pairs[1..].iter().enumerate() {
        chain = chain.tensor(&bell_state(BellOutcome::PsiMinus, x.clone(), y.clone())?)?;
        let m = &layout.schedule[3 + k];
        let (p, next) = bell_project(&chain, &m.pair.0, &m.pair.1, tail[k])?;
        prob *= p;
        chain = next;
    }
    let state = secret
        .to_state("a".into(), "b".into())
        .tensor(&bell_state(BellOutcome::PsiMinus, "3".into(), "4".into())?)?
        .tensor(&bell_state(BellOutcome::PsiMinus, "5".into(), "6".into())?)?
        .tensor(&chain)?;
    let receiver = [layout.receiver_qubits.0.clone(), layout.receiver_qubits.1.clone()];
    let mut leaves = Vec::with_capacity(64);
    for o0 in BellOutcome::ALL {
        let (p0, s0) = bell_project(&state, &"a".into(), &"3".into(), o0)?;
        for o1 in BellOutcome::ALL {
            let (p1, s1) = bell_project(&s0, &"b".into(), &"5".into(), o1)?;
            let bob1 = &layout.schedule[2].pair;
            for o2 in BellOutcome::ALL {
                let (p2, s2) = bell_project(&s1, &bob1.0, &bob1.1, o2)?;
                let mut outcomes = vec![o0, o1, o2];
                outcomes.extend_from_slice(tail);
                leaves.push(Leaf {
                    outcomes,
                    probability: prob * p0 * p1 * p2,
                    receiver_state: s2.reorder(&receiver)?,
                });
            }
        }
    }
    Ok(leaves)
}

/// Derives the table with the default generic secret, falling back to a
/// second one if the first is degenerate for this scheme.
pub fn derive_correction_table(config: &SchemeConfig) -> Result<CorrectionTable> {
    match derive_correction_table_with(config, &TwoQubitSecret::fiducial()) {
        Err(QstsError::DegenerateSecret(_)) => {
            derive_correction_table_with(config, &TwoQubitSecret::alternate_fiducial())
        }
        other => other,
    }
}

/// For every outcome combination, finds the unique Pauli pair that maps the
/// receiver's state back to `secret`, then checks that the correction
/// depends on the outcomes only through their key.
pub fn derive_correction_table_with(config: &SchemeConfig, secret: &TwoQubitSecret) -> Result<CorrectionTable> {
    let layout = config.layout()?;
    let (r0, r1) = layout.receiver_qubits.clone();
    let target = secret.to_state(r0.clone(), r1.clone());
    let (leaves, exhaustive) = enumerate_leaves(secret, config)?;

    let mut by_key: BTreeMap<CorrectionKey, CorrectionRule> = BTreeMap::new();
    for leaf in &leaves {
        let key = layout.key_for_outcomes(&leaf.outcomes);
        let label = outcome_label(&leaf.outcomes);
        let mut hit = None;
        for (i, j) in op_order() {
            let fixed = apply_pauli_pair(&leaf.receiver_state, i, &r0, j, &r1)?;
            if target.fidelity(&fixed)? >= 1.0 - RESTORE_TOL {
                if hit.is_some() {
                    return Err(QstsError::DegenerateSecret(label));
                }
                hit = Some((i, j));
            }
        }
        let (op_i, op_j) = hit.ok_or_else(|| QstsError::NoCorrection(label.clone()))?;
        let pattern = StatePattern::from_state(&leaf.receiver_state, secret)?;
        match by_key.get_mut(&key) {
            Some(rule) => {
                if rule.ops() != (op_i, op_j) || rule.pattern != pattern {
                    return Err(QstsError::InconsistentKey(key.to_string()));
                }
                rule.branches += 1;
            }
            None => {
                by_key.insert(
                    key,
                    CorrectionRule {
                        key,
                        pattern,
                        op_i,
                        op_j,
                        branches: 1,
                    },
                );
            }
        }
    }

    let order = op_order();
    let mut rules: Vec<CorrectionRule> = by_key.into_values().collect();
    rules.sort_by_key(|r| order.iter().position(|o| *o == r.ops()));
    Ok(CorrectionTable {
        config: *config,
        receiver_qubits: (r0, r1),
        rules,
        branches_examined: leaves.len(),
        exhaustive,
    })
}

pub(crate) fn outcome_label(outcomes: &[BellOutcome]) -> String {
    let names: Vec<&str> = outcomes.iter().map(|o| o.name()).collect();
    format!("[{}]", names.join(","))
}

type TableCache = Mutex<HashMap<SchemeConfig, Arc<CorrectionTable>>>;

/// Derived tables, computed once per configuration.
pub(crate) fn cached_table(config: &SchemeConfig) -> Result<Arc<CorrectionTable>> {
    static CACHE: OnceLock<TableCache> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(t) = cache.lock().expect("table cache poisoned").get(config) {
        return Ok(t.clone());
    }
    let table = Arc::new(derive_correction_table(config)?);
    let mut guard = cache.lock().expect("table cache poisoned");
    Ok(guard.entry(*config).or_insert(table).clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{correction_for, Receiver};
    use PauliOp::*;

    fn key(s: &str) -> CorrectionKey {
        s.parse().unwrap()
    }

    #[test]
    fn key_parse_and_display() {
        let k = key("(1,0,-,+)");
        assert_eq!(k, CorrectionKey::new(1, 0, Sign::Minus, Sign::Plus));
        assert_eq!(k.to_string(), "(1,0,-,+)");
        assert!("(2,0,-,+)".parse::<CorrectionKey>().is_err());
        assert_eq!(CorrectionKey::all().count(), 16);
    }

    #[test]
    fn pattern_round_trip() {
        let p: StatePattern = "α|01⟩ − β|00⟩ + γ|11⟩ − δ|10⟩".parse().unwrap();
        assert_eq!(p.to_string(), "a|01>-b|00>+c|11>-d|10>");
        assert_eq!(p.to_string().parse::<StatePattern>().unwrap(), p);
        // overall sign is dropped
        let q: StatePattern = "-a|01>+b|00>-c|11>+d|10>".parse().unwrap();
        assert_eq!(p, q);
        assert!("a|00>+b|00>+c|10>+d|11>".parse::<StatePattern>().is_err());
        assert!("a|00>+b|01>+c|10>".parse::<StatePattern>().is_err());
    }

    #[test]
    fn pattern_from_state() {
        let s = TwoQubitSecret::fiducial();
        let p: StatePattern = "a|10>+b|11>-c|00>-d|01>".parse().unwrap();
        let st = p.to_state(&s, "8".into(), "6".into());
        let phased = st.scaled(num_complex::Complex64::from_polar(1.0, 0.7));
        assert_eq!(StatePattern::from_state(&phased, &s).unwrap(), p);
        let basis = TwoQubitSecret::from_reals([1., 0., 0., 0., 0., 0., 0., 0.]).unwrap();
        assert!(matches!(
            StatePattern::from_state(&st, &basis),
            Err(QstsError::NotSignedPermutation) | Err(QstsError::DegenerateSecret(_))
        ));
    }

    #[test]
    fn pauli_action_on_patterns_matches_state_action() {
        let s = TwoQubitSecret::fiducial();
        let pats = [
            StatePattern::identity(),
            "a|11>-b|10>-c|01>+d|00>".parse().unwrap(),
            "a|01>+b|00>-c|11>-d|10>".parse().unwrap(),
        ];
        for p in pats {
            for (i, j) in op_order() {
                let st = p.to_state(&s, "x".into(), "y".into());
                let moved = apply_pauli_pair(&st, i, &"x".into(), j, &"y".into()).unwrap();
                assert_eq!(StatePattern::from_state(&moved, &s).unwrap(), p.after((i, j)));
            }
        }
    }

    #[test]
    fn four_epr_table_shape() {
        let t = derive_correction_table(&SchemeConfig::four_epr(Receiver::Charlie)).unwrap();
        assert!(t.exhaustive);
        assert_eq!(t.branches_examined, 256);
        assert_eq!(t.len(), 16);
        assert!(t.rules.iter().all(|r| r.branches == 16));
        let ops: Vec<_> = t.rules.iter().map(|r| r.ops()).collect();
        assert_eq!(ops, op_order().to_vec());
        for r in &t.rules {
            assert_eq!(r.pattern.after(r.ops()), StatePattern::identity(), "{}", r.key);
        }
    }

    #[test]
    fn four_epr_rows_from_hand_derivation() {
        let cfg = SchemeConfig::four_epr(Receiver::Charlie);
        let cases = [
            ("(0,1,-,+)", (U0, U0)),
            ("(0,1,+,-)", (U0, U1)),
            ("(0,1,-,-)", (U1, U0)),
            ("(0,1,+,+)", (U1, U1)),
            ("(1,0,-,-)", (U1, U2)),
            ("(0,0,+,+)", (U3, U3)),
            ("(1,1,-,+)", (U2, U0)),
            ("(0,0,-,-)", (U3, U2)),
        ];
        for (k, ops) in cases {
            assert_eq!(correction_for(&key(k), &cfg).unwrap(), ops, "{k}");
        }
    }

    #[test]
    fn table_independent_of_generic_secret() {
        for cfg in [
            SchemeConfig::four_epr(Receiver::Charlie),
            SchemeConfig::four_epr(Receiver::Bob),
            SchemeConfig::circular(2).unwrap(),
            SchemeConfig::circular(3).unwrap(),
        ] {
            let a = derive_correction_table_with(&cfg, &TwoQubitSecret::fiducial()).unwrap();
            let b = derive_correction_table_with(&cfg, &TwoQubitSecret::alternate_fiducial()).unwrap();
            assert_eq!(a.rules, b.rules, "{cfg}");
        }
    }

    #[test]
    fn degenerate_secret_is_reported() {
        let basis = TwoQubitSecret::from_reals([1., 0., 0., 0., 0., 0., 0., 0.]).unwrap();
        let r = derive_correction_table_with(&SchemeConfig::four_epr(Receiver::Charlie), &basis);
        assert!(matches!(r, Err(QstsError::DegenerateSecret(_))));
    }

    #[test]
    fn circular_tables_depend_on_chain_parity() {
        let t2 = derive_correction_table(&SchemeConfig::circular(2).unwrap()).unwrap();
        let t4 = derive_correction_table(&SchemeConfig::circular(4).unwrap()).unwrap();
        let t3 = derive_correction_table(&SchemeConfig::circular(3).unwrap()).unwrap();
        let t5 = derive_correction_table(&SchemeConfig::circular(5).unwrap()).unwrap();
        let keyed = |t: &CorrectionTable| t.rules.iter().map(|r| (r.key, r.ops())).collect::<Vec<_>>();
        assert_eq!(keyed(&t2), keyed(&t4));
        assert_eq!(keyed(&t3), keyed(&t5));
        assert_ne!(keyed(&t2), keyed(&t3));
        assert_eq!(t5.branches_examined, 4096);
    }

    #[test]
    fn reduced_enumeration_agrees_with_full_tree() {
        let cfg = SchemeConfig::circular(4).unwrap();
        let s = TwoQubitSecret::fiducial();
        let full = derive_correction_table_with(&cfg, &s).unwrap();
        let layout = cfg.layout().unwrap();
        let target = s.to_state(layout.receiver_qubits.0.clone(), layout.receiver_qubits.1.clone());
        for tail in [
            [BellOutcome::PsiMinus, BellOutcome::PhiPlus],
            [BellOutcome::PsiPlus, BellOutcome::PhiMinus],
        ] {
            for leaf in reduced_circular_leaves(&s, &cfg, &tail).unwrap() {
                let k = layout.key_for_outcomes(&leaf.outcomes);
                let (i, j) = full.correction_for(&k).unwrap();
                let fixed = apply_pauli_pair(
                    &leaf.receiver_state,
                    i,
                    &layout.receiver_qubits.0,
                    j,
                    &layout.receiver_qubits.1,
                )
                .unwrap();
                assert!(target.fidelity(&fixed).unwrap() > 1.0 - 1e-10);
                assert!((leaf.probability - 1.0 / 1024.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn long_chains_use_reduced_enumeration() {
        let t = derive_correction_table(&SchemeConfig::circular(8).unwrap()).unwrap();
        assert!(!t.exhaustive);
        assert_eq!(t.len(), 16);
        let t2 = derive_correction_table(&SchemeConfig::circular(2).unwrap()).unwrap();
        let keyed = |t: &CorrectionTable| t.rules.iter().map(|r| (r.key, r.ops())).collect::<Vec<_>>();
        assert_eq!(keyed(&t), keyed(&t2));
        assert_eq!(t.receiver_qubits, (QubitLabel::from(20usize), QubitLabel::from(6usize)));
    }
}
