//! Bell states, Bell-basis measurement and the four local unitaries U0..U3.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QstsError, Result};
use crate::state::{Matrix2, PureState, QubitLabel};

/// Parity of a Bell outcome, composed multiplicatively.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

impl Mul for Sign {
    type Output = Sign;

    fn mul(self, rhs: Sign) -> Sign {
        if self == rhs {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

impl FromStr for Sign {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "+" => Ok(Sign::Plus),
            "-" | "−" => Ok(Sign::Minus),
            other => Err(format!("bad sign `{other}`")),
        }
    }
}

/// One of the four Bell-basis results.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BellOutcome {
    #[serde(rename = "psi-")]
    PsiMinus,
    #[serde(rename = "psi+")]
    PsiPlus,
    #[serde(rename = "phi-")]
    PhiMinus,
    #[serde(rename = "phi+")]
    PhiPlus,
}

impl BellOutcome {
    /// Fixed enumeration order used for probability vectors, tables and histograms.
    pub const ALL: [BellOutcome; 4] = [
        BellOutcome::PsiMinus,
        BellOutcome::PsiPlus,
        BellOutcome::PhiMinus,
        BellOutcome::PhiPlus,
    ];

    /// 1 for anti-parallel (ψ) outcomes, 0 for parallel (φ).
    pub fn bit_value(self) -> u8 {
        match self {
            BellOutcome::PsiMinus | BellOutcome::PsiPlus => 1,
            BellOutcome::PhiMinus | BellOutcome::PhiPlus => 0,
        }
    }

    pub fn parity(self) -> Sign {
        match self {
            BellOutcome::PsiPlus | BellOutcome::PhiPlus => Sign::Plus,
            BellOutcome::PsiMinus | BellOutcome::PhiMinus => Sign::Minus,
        }
    }

    pub fn from_bits(bit_value: u8, parity: Sign) -> BellOutcome {
        match (bit_value & 1, parity) {
            (1, Sign::Minus) => BellOutcome::PsiMinus,
            (1, Sign::Plus) => BellOutcome::PsiPlus,
            (_, Sign::Minus) => BellOutcome::PhiMinus,
            (_, Sign::Plus) => BellOutcome::PhiPlus,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Coefficients on `|00⟩, |01⟩, |10⟩, |11⟩` of the pair.
    pub fn vector(self) -> [f64; 4] {
        let h = FRAC_1_SQRT_2;
        match self {
            BellOutcome::PsiMinus => [0.0, h, -h, 0.0],
            BellOutcome::PsiPlus => [0.0, h, h, 0.0],
            BellOutcome::PhiMinus => [h, 0.0, 0.0, -h],
            BellOutcome::PhiPlus => [h, 0.0, 0.0, h],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BellOutcome::PsiMinus => "psi-",
            BellOutcome::PsiPlus => "psi+",
            BellOutcome::PhiMinus => "phi-",
            BellOutcome::PhiPlus => "phi+",
        }
    }
}

impl fmt::Display for BellOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BellOutcome {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let t = s.trim().replace('−', "-").replace('ψ', "psi").replace('φ', "phi");
        BellOutcome::ALL
            .into_iter()
            .find(|o| o.name() == t)
            .ok_or_else(|| format!("bad Bell outcome `{s}`"))
    }
}

/// The local unitaries U0 = I, U1 = Z, U2 = X, U3 = |0⟩⟨1| − |1⟩⟨0|.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PauliOp {
    U0,
    U1,
    U2,
    U3,
}

impl PauliOp {
    pub const ALL: [PauliOp; 4] = [PauliOp::U0, PauliOp::U1, PauliOp::U2, PauliOp::U3];

    pub fn matrix(self) -> Matrix2 {
        let z = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        match self {
            PauliOp::U0 => [[one, z], [z, one]],
            PauliOp::U1 => [[one, z], [z, -one]],
            PauliOp::U2 => [[z, one], [one, z]],
            PauliOp::U3 => [[z, one], [-one, z]],
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for PauliOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "U{}", self.index())
    }
}

impl FromStr for PauliOp {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "U0" => Ok(PauliOp::U0),
            "U1" => Ok(PauliOp::U1),
            "U2" => Ok(PauliOp::U2),
            "U3" => Ok(PauliOp::U3),
            other => Err(format!("bad operator `{other}`")),
        }
    }
}

/// Mixes `(master, index)` into an independent 64-bit seed (splitmix64 finalizer).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    mix(master.wrapping_add(mix(index.wrapping_add(0x9e37_79b9_7f4a_7c15))))
}

/// Deterministic generator passed explicitly to every stochastic call.
#[derive(Clone, Debug)]
pub struct SeededRng {
    seed: u64,
    draws: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng {
            seed,
            draws: 0,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of uniform draws taken so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    /// Uniform in `[0, 1)` from the top 53 bits of one 64-bit word.
    pub fn uniform(&mut self) -> f64 {
        self.draws += 1;
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Raw generator for distribution sampling. Draws taken here are not counted.
    pub fn generator(&mut self) -> &mut ChaCha8Rng {
        &mut self.inner
    }
}

/// `|kind⟩` on the ordered pair `(la, lb)`.
pub fn bell_state(kind: BellOutcome, la: QubitLabel, lb: QubitLabel) -> Result<PureState> {
    let amps = kind.vector().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    PureState::new(vec![la, lb], amps)
}

#[inline]
fn insert_zero(x: usize, bit: usize) -> usize {
    ((x >> bit) << (bit + 1)) | (x & ((1usize << bit) - 1))
}

struct PairView {
    shift_a: usize,
    shift_b: usize,
    lo: usize,
    hi: usize,
    rest_labels: Vec<QubitLabel>,
}

impl PairView {
    fn new(state: &PureState, la: &QubitLabel, lb: &QubitLabel) -> Result<Self> {
        if la == lb {
            return Err(QstsError::DuplicateLabel(la.to_string()));
        }
        let pa = state.position(la)?;
        let pb = state.position(lb)?;
        let shift_a = state.shift_of(pa);
        let shift_b = state.shift_of(pb);
        let rest_labels = state
            .labels()
            .iter()
            .filter(|l| *l != la && *l != lb)
            .cloned()
            .collect();
        Ok(PairView {
            shift_a,
            shift_b,
            lo: shift_a.min(shift_b),
            hi: shift_a.max(shift_b),
            rest_labels,
        })
    }

    /// Index of `(x_a, x_b)` within the block selected by `rest`.
    #[inline]
    fn base(&self, rest: usize) -> usize {
        insert_zero(insert_zero(rest, self.lo), self.hi)
    }

    #[inline]
    fn offset(&self, k: usize) -> usize {
        (((k >> 1) & 1) << self.shift_a) | ((k & 1) << self.shift_b)
    }

    /// Unnormalized `⟨kind|_pair |state⟩` on the remaining qubits.
    fn project(&self, state: &PureState, kind: BellOutcome) -> Vec<Complex64> {
        let amps = state.amplitudes();
        let v = kind.vector();
        let rest_dim = amps.len() >> 2;
        let offs: [usize; 4] = std::array::from_fn(|k| self.offset(k));
        (0..rest_dim)
            .map(|r| {
                let b = self.base(r);
                (0..4).filter(|&k| v[k] != 0.0).map(|k| amps[b | offs[k]] * v[k]).sum()
            })
            .collect()
    }
}

/// Outcome probabilities on `(la, lb)` in the order ψ−, ψ+, φ−, φ+.
pub fn bell_probabilities(state: &PureState, la: &QubitLabel, lb: &QubitLabel) -> Result<[f64; 4]> {
    let view = PairView::new(state, la, lb)?;
    let amps = state.amplitudes();
    let offs: [usize; 4] = std::array::from_fn(|k| view.offset(k));
    let mut p = [0.0f64; 4];
    for r in 0..amps.len() >> 2 {
        let b = view.base(r);
        let c: [Complex64; 4] = std::array::from_fn(|k| amps[b | offs[k]]);
        for (slot, kind) in p.iter_mut().zip(BellOutcome::ALL) {
            let v = kind.vector();
            let proj: Complex64 = (0..4).map(|k| c[k] * v[k]).sum();
            *slot += proj.norm_sqr();
        }
    }
    Ok(p)
}

/// Projects `(la, lb)` onto `kind`, removes the pair and renormalizes.
/// Returns the branch probability alongside the residual state.
pub fn bell_project(
    state: &PureState,
    la: &QubitLabel,
    lb: &QubitLabel,
    kind: BellOutcome,
) -> Result<(f64, PureState)> {
    let view = PairView::new(state, la, lb)?;
    let mut rest = view.project(state, kind);
    let prob: f64 = rest.iter().map(|a| a.norm_sqr()).sum();
    if prob <= f64::EPSILON * 1e-8 {
        return Err(QstsError::ZeroProbability(la.to_string(), lb.to_string()));
    }
    let scale = 1.0 / prob.sqrt();
    rest.iter_mut().for_each(|a| *a *= scale);
    Ok((prob, PureState::from_parts_unchecked(view.rest_labels, rest)))
}

/// Diagnostic projection that keeps the measured pair in the register
/// (left in `|kind⟩`).
pub fn bell_project_retained(
    state: &PureState,
    la: &QubitLabel,
    lb: &QubitLabel,
    kind: BellOutcome,
) -> Result<PureState> {
    let view = PairView::new(state, la, lb)?;
    let rest = view.project(state, kind);
    let v = kind.vector();
    let offs: [usize; 4] = std::array::from_fn(|k| view.offset(k));
    let mut amps = vec![Complex64::new(0.0, 0.0); state.amplitudes().len()];
    for (r, a) in rest.iter().enumerate() {
        let b = view.base(r);
        for k in 0..4 {
            amps[b | offs[k]] = a * v[k];
        }
    }
    PureState::new(state.labels().to_vec(), amps)?.normalized()
}

/// Samples a Bell measurement on `(la, lb)`. The measured pair is removed
/// from the returned register.
pub fn bell_measure(
    state: &PureState,
    la: &QubitLabel,
    lb: &QubitLabel,
    rng: &mut SeededRng,
) -> Result<(BellOutcome, PureState)> {
    let probs = bell_probabilities(state, la, lb)?;
    let u = rng.uniform() * probs.iter().sum::<f64>();
    let mut acc = 0.0;
    let mut chosen = None;
    for (kind, p) in BellOutcome::ALL.into_iter().zip(probs) {
        if p <= 0.0 {
            continue;
        }
        chosen = Some(kind);
        acc += p;
        if u < acc {
            break;
        }
    }
    let kind = chosen.ok_or_else(|| QstsError::ZeroProbability(la.to_string(), lb.to_string()))?;
    let (_, post) = bell_project(state, la, lb, kind)?;
    Ok((kind, post))
}

/// `U_i` on `l_i` followed by `U_j` on `l_j`.
pub fn apply_pauli_pair(
    state: &PureState,
    op_i: PauliOp,
    l_i: &QubitLabel,
    op_j: PauliOp,
    l_j: &QubitLabel,
) -> Result<PureState> {
    if l_i == l_j {
        return Err(QstsError::DuplicateLabel(l_i.to_string()));
    }
    state
        .apply_one_qubit(l_i, &op_i.matrix())?
        .apply_one_qubit(l_j, &op_j.matrix())
}
