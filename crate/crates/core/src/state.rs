//! Dense pure states and density matrices over labeled qubit registers.
//!
//! The leftmost label is the most significant bit of the amplitude index,
//! so `|01⟩_ab` means `a = 0, b = 1` and sits at index 1. States are
//! immutable values: every operation returns a new state.

use std::collections::HashSet;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QstsError, Result};

pub type Amplitude = Complex64;

/// Row-major 2×2 complex matrix acting on one qubit.
pub type Matrix2 = [[Complex64; 2]; 2];

/// Largest register the simulator accepts (circular scheme with ten agents).
pub const MAX_QUBITS: usize = 24;

/// Tolerance for accepting externally supplied states as normalized.
pub const NORM_TOL: f64 = 1e-9;

/// Tolerance for internal algebraic identities.
pub const ALGEBRA_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QubitLabel(String);

impl QubitLabel {
    pub fn new(name: impl Into<String>) -> Self {
        QubitLabel(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for QubitLabel {
    fn from(s: &str) -> Self {
        QubitLabel(s.to_owned())
    }
}

impl From<String> for QubitLabel {
    fn from(s: String) -> Self {
        QubitLabel(s)
    }
}

impl From<usize> for QubitLabel {
    fn from(n: usize) -> Self {
        QubitLabel(n.to_string())
    }
}

impl fmt::Display for QubitLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Builds a label list from anything label-like.
pub fn labels<L: Into<QubitLabel>>(items: impl IntoIterator<Item = L>) -> Vec<QubitLabel> {
    items.into_iter().map(Into::into).collect()
}

fn check_unique(labels: &[QubitLabel]) -> Result<()> {
    let mut seen = HashSet::with_capacity(labels.len());
    for l in labels {
        if !seen.insert(l) {
            return Err(QstsError::DuplicateLabel(l.to_string()));
        }
    }
    Ok(())
}

fn label_names(labels: &[QubitLabel]) -> Vec<String> {
    labels.iter().map(ToString::to_string).collect()
}

/// A labeled multi-qubit pure state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PureState {
    labels: Vec<QubitLabel>,
    amps: Vec<Amplitude>,
}

impl PureState {
    /// Wraps an amplitude vector. Checks length, label uniqueness and
    /// finiteness but not normalization.
    pub fn new(labels: Vec<QubitLabel>, amps: Vec<Amplitude>) -> Result<Self> {
        if labels.len() > MAX_QUBITS {
            return Err(QstsError::TooManyQubits(labels.len()));
        }
        check_unique(&labels)?;
        let expected = 1usize << labels.len();
        if amps.len() != expected {
            return Err(QstsError::BadLength {
                len: amps.len(),
                expected,
            });
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(QstsError::NotNormalized(f64::NAN));
        }
        Ok(PureState { labels, amps })
    }

    /// Like [`PureState::new`] but also requires unit norm within [`NORM_TOL`].
    pub fn new_normalized(labels: Vec<QubitLabel>, amps: Vec<Amplitude>) -> Result<Self> {
        let s = Self::new(labels, amps)?;
        let norm = s.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(QstsError::NotNormalized(norm));
        }
        Ok(s)
    }

    /// The zero-qubit register, amplitude 1.
    pub fn empty() -> Self {
        PureState {
            labels: Vec::new(),
            amps: vec![Complex64::new(1.0, 0.0)],
        }
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(labels: Vec<QubitLabel>, index: usize) -> Result<Self> {
        let n = labels.len();
        if n > MAX_QUBITS {
            return Err(QstsError::TooManyQubits(n));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1usize << n];
        if index >= amps.len() {
            return Err(QstsError::BadLength {
                len: index,
                expected: amps.len(),
            });
        }
        amps[index] = Complex64::new(1.0, 0.0);
        Self::new(labels, amps)
    }

    pub(crate) fn from_parts_unchecked(labels: Vec<QubitLabel>, amps: Vec<Amplitude>) -> Self {
        debug_assert_eq!(amps.len(), 1usize << labels.len());
        PureState { labels, amps }
    }

    pub fn labels(&self) -> &[QubitLabel] {
        &self.labels
    }

    pub fn amplitudes(&self) -> &[Amplitude] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Amplitude> {
        self.amps
    }

    pub fn num_qubits(&self) -> usize {
        self.labels.len()
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(QstsError::NotNormalized(norm));
        }
        Ok(self.scaled(Complex64::new(1.0 / norm, 0.0)))
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        PureState {
            labels: self.labels.clone(),
            amps: self.amps.iter().map(|a| a * factor).collect(),
        }
    }

    /// Position of `label` in the register (0 = leftmost).
    pub fn position(&self, label: &QubitLabel) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| QstsError::UnknownLabel(label.to_string()))
    }

    /// Bit shift of the qubit at `position` inside an amplitude index.
    pub(crate) fn shift_of(&self, position: usize) -> usize {
        self.labels.len() - 1 - position
    }

    /// Kronecker product; labels are concatenated.
    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        let mut labels = self.labels.clone();
        labels.extend(other.labels.iter().cloned());
        if labels.len() > MAX_QUBITS {
            return Err(QstsError::TooManyQubits(labels.len()));
        }
        check_unique(&labels)?;
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for a in &self.amps {
            amps.extend(other.amps.iter().map(|b| a * b));
        }
        Ok(PureState { labels, amps })
    }

    /// Applies a unitary on one qubit, identity elsewhere.
    pub fn apply_one_qubit(&self, target: &QubitLabel, op: &Matrix2) -> Result<PureState> {
        let dev = unitarity_deviation(op);
        if dev > ALGEBRA_TOL {
            return Err(QstsError::NotUnitary(dev));
        }
        let pos = self.position(target)?;
        let stride = 1usize << self.shift_of(pos);
        let mut amps = self.amps.clone();
        for base in (0..amps.len()).filter(|i| i & stride == 0) {
            let a0 = amps[base];
            let a1 = amps[base | stride];
            amps[base] = op[0][0] * a0 + op[0][1] * a1;
            amps[base | stride] = op[1][0] * a0 + op[1][1] * a1;
        }
        Ok(PureState {
            labels: self.labels.clone(),
            amps,
        })
    }

    /// Permutes the tensor factors into `new_order`.
    pub fn reorder(&self, new_order: &[QubitLabel]) -> Result<PureState> {
        let n = self.labels.len();
        if new_order.len() != n {
            return Err(QstsError::NotAPermutation);
        }
        check_unique(new_order).map_err(|_| QstsError::NotAPermutation)?;
        let mut shifts = Vec::with_capacity(n);
        for l in new_order {
            let old = self.position(l).map_err(|_| QstsError::NotAPermutation)?;
            shifts.push(self.shift_of(old));
        }
        if shifts.iter().enumerate().all(|(p, &s)| s == n - 1 - p) {
            return Ok(self.clone());
        }
        let amps = (0..self.amps.len())
            .map(|new_idx| {
                let mut old_idx = 0usize;
                for (p, &old_shift) in shifts.iter().enumerate() {
                    if (new_idx >> (n - 1 - p)) & 1 == 1 {
                        old_idx |= 1 << old_shift;
                    }
                }
                self.amps[old_idx]
            })
            .collect();
        Ok(PureState {
            labels: new_order.to_vec(),
            amps,
        })
    }

    /// `⟨self|other⟩`; both registers must have identical label order.
    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        if self.labels != other.labels {
            return Err(QstsError::LabelMismatch {
                left: label_names(&self.labels),
                right: label_names(&other.labels),
            });
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// `|⟨self|other⟩|²`, insensitive to global phase.
    pub fn fidelity(&self, other: &PureState) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr().clamp(0.0, 1.0))
    }

    /// Reduced density matrix over `keep`, in the order given.
    pub fn partial_trace(&self, keep: &[QubitLabel]) -> Result<DensityMatrix> {
        if keep.is_empty() {
            return Err(QstsError::EmptyKeepSet);
        }
        check_unique(keep)?;
        for l in keep {
            self.position(l)?;
        }
        let mut order = keep.to_vec();
        order.extend(self.labels.iter().filter(|l| !keep.contains(l)).cloned());
        let arranged = self.reorder(&order)?;
        let kdim = 1usize << keep.len();
        let rdim = arranged.amps.len() / kdim;
        let mut rows = vec![vec![Complex64::new(0.0, 0.0); kdim]; kdim];
        for (i, row) in rows.iter_mut().enumerate() {
            let ri = &arranged.amps[i * rdim..(i + 1) * rdim];
            for (j, cell) in row.iter_mut().enumerate() {
                let rj = &arranged.amps[j * rdim..(j + 1) * rdim];
                *cell = ri.iter().zip(rj).map(|(a, b)| a * b.conj()).sum();
            }
        }
        Ok(DensityMatrix {
            labels: keep.to_vec(),
            rows,
        })
    }
}

/// Max elementwise deviation of `U†U` from the identity.
pub fn unitarity_deviation(op: &Matrix2) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            let v: Complex64 = (0..2).map(|k| op[k][i].conj() * op[k][j]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((v - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// Hermitian, unit-trace density matrix over labeled qubits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix {
    labels: Vec<QubitLabel>,
    rows: Vec<Vec<Complex64>>,
}

impl DensityMatrix {
    /// `I / 2^n` over the given labels.
    pub fn maximally_mixed(labels: Vec<QubitLabel>) -> Self {
        let dim = 1usize << labels.len();
        let w = 1.0 / dim as f64;
        let rows = (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|j| Complex64::new(if i == j { w } else { 0.0 }, 0.0))
                    .collect()
            })
            .collect();
        DensityMatrix { labels, rows }
    }

    pub fn labels(&self) -> &[QubitLabel] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.rows[i][j]
    }

    pub fn rows(&self) -> &[Vec<Complex64>] {
        &self.rows
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.rows[i][i]).sum()
    }

    pub fn hermitian_deviation(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                worst = worst.max((self.rows[i][j] - self.rows[j][i].conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let d = self.dim();
        let m = DMatrix::from_fn(d, d, |i, j| (self.rows[i][j] + self.rows[j][i].conj()) * 0.5);
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Hermitian, trace one and positive semidefinite, all within `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
            && (self.trace() - Complex64::new(1.0, 0.0)).norm() <= tol
            && self.eigenvalues().first().is_none_or(|&e| e >= -tol)
    }

    /// Largest elementwise modulus of `self - other`.
    pub fn max_deviation_from(&self, other: &DensityMatrix) -> Result<f64> {
        if self.labels != other.labels {
            return Err(QstsError::LabelMismatch {
                left: label_names(&self.labels),
                right: label_names(&other.labels),
            });
        }
        Ok(self
            .rows
            .iter()
            .flatten()
            .zip(other.rows.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}
