//! Python module `qsts`: states, Bell measurements, protocol runs, table
//! derivation and the verification reports.

use std::collections::BTreeMap;

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use qsts_core as core;
use qsts_core::{Amplitude, BellOutcome, QstsError, Receiver, SchemeConfig, SeededRng};

create_exception!(
    qsts,
    QstsException,
    PyValueError,
    "Invalid input or failed simulation step."
);

fn err(e: QstsError) -> PyErr {
    QstsException::new_err(e.to_string())
}

fn to_json<T: serde::Serialize>(v: &T) -> PyResult<String> {
    serde_json::to_string(v).map_err(|e| QstsException::new_err(e.to_string()))
}

fn outcome(name: &str) -> PyResult<BellOutcome> {
    name.parse().map_err(QstsException::new_err)
}

fn config(scheme: &str, agents: Option<usize>, receiver: &str) -> PyResult<SchemeConfig> {
    let receiver = match receiver {
        "bob" => Receiver::Bob,
        "charlie" => Receiver::Charlie,
        other => return Err(QstsException::new_err(format!("unknown receiver `{other}`"))),
    };
    match (scheme, agents) {
        ("four-epr", None) => Ok(SchemeConfig::four_epr(receiver)),
        ("four-epr", Some(_)) => Err(QstsException::new_err("agents applies only to the circular scheme")),
        ("circular", Some(n)) if receiver == Receiver::Charlie => SchemeConfig::circular(n).map_err(err),
        ("circular", Some(_)) => Err(QstsException::new_err("the circular scheme always delivers to charlie")),
        ("circular", None) => Err(QstsException::new_err("the circular scheme needs agents")),
        (other, _) => Err(QstsException::new_err(format!("unknown scheme `{other}`"))),
    }
}

/// Labelled pure state; the first label is the most significant bit.
#[pyclass(name = "PureState", module = "qsts", frozen)]
pub struct PyPureState(core::PureState);

#[pymethods]
impl PyPureState {
    #[new]
    fn new(labels: Vec<String>, amplitudes: Vec<Amplitude>) -> PyResult<Self> {
        core::PureState::new(core::labels(labels), amplitudes)
            .map(PyPureState)
            .map_err(err)
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.0.labels().iter().map(|l| l.to_string()).collect()
    }

    #[getter]
    fn amplitudes(&self) -> Vec<Amplitude> {
        self.0.amplitudes().to_vec()
    }

    fn norm(&self) -> f64 {
        self.0.norm()
    }

    fn normalized(&self) -> PyResult<Self> {
        self.0.normalized().map(PyPureState).map_err(err)
    }

    fn fidelity(&self, other: &PyPureState) -> PyResult<f64> {
        self.0.fidelity(&other.0).map_err(err)
    }

    fn reorder(&self, order: Vec<String>) -> PyResult<Self> {
        self.0.reorder(&core::labels(order)).map(PyPureState).map_err(err)
    }

    /// Reduced density matrix of `keep` as nested lists of complex numbers.
    fn partial_trace(&self, keep: Vec<String>) -> PyResult<Vec<Vec<Amplitude>>> {
        let rho = self.0.partial_trace(&core::labels(keep)).map_err(err)?;
        Ok(rho.rows().to_vec())
    }

    fn bell_probabilities(&self, a: &str, b: &str) -> PyResult<[f64; 4]> {
        core::bell_probabilities(&self.0, &a.into(), &b.into()).map_err(err)
    }

    /// Projects pair `(a, b)` onto Bell state `outcome`; returns `(probability, state)`.
    fn bell_project(&self, a: &str, b: &str, outcome_name: &str) -> PyResult<(f64, PyPureState)> {
        let (p, st) = core::bell_project(&self.0, &a.into(), &b.into(), outcome(outcome_name)?).map_err(err)?;
        Ok((p, PyPureState(st)))
    }

    fn apply_pauli_pair(&self, op_i: usize, a: &str, op_j: usize, b: &str) -> PyResult<Self> {
        let op = |k: usize| {
            core::PauliOp::ALL
                .get(k)
                .copied()
                .ok_or_else(|| QstsException::new_err(format!("no operator U{k}")))
        };
        core::apply_pauli_pair(&self.0, op(op_i)?, &a.into(), op(op_j)?, &b.into())
            .map(PyPureState)
            .map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.0)
    }

    fn __len__(&self) -> usize {
        self.0.amplitudes().len()
    }

    fn __repr__(&self) -> String {
        format!("PureState(labels={:?}, norm={:.12})", self.labels(), self.0.norm())
    }
}

/// Two-qubit secret `α|00⟩ + β|01⟩ + γ|10⟩ + δ|11⟩`.
#[pyclass(name = "TwoQubitSecret", module = "qsts", frozen)]
pub struct PySecret(core::TwoQubitSecret);

#[pymethods]
impl PySecret {
    #[new]
    fn new(alpha: Amplitude, beta: Amplitude, gamma: Amplitude, delta: Amplitude) -> PyResult<Self> {
        core::TwoQubitSecret::new(alpha, beta, gamma, delta)
            .map(PySecret)
            .map_err(err)
    }

    #[staticmethod]
    fn haar_random(seed: u64) -> Self {
        PySecret(core::TwoQubitSecret::haar_random(&mut SeededRng::new(seed)))
    }

    #[staticmethod]
    fn fiducial() -> Self {
        PySecret(core::TwoQubitSecret::fiducial())
    }

    #[getter]
    fn coefficients(&self) -> [Amplitude; 4] {
        self.0.coefficients()
    }

    fn to_state(&self, first: &str, second: &str) -> PyPureState {
        PyPureState(self.0.to_state(first.into(), second.into()))
    }

    fn __repr__(&self) -> String {
        let [a, b, c, d] = self.0.coefficients();
        format!("TwoQubitSecret({a}, {b}, {c}, {d})")
    }
}

/// One protocol run.
#[pyclass(name = "Transcript", module = "qsts", frozen)]
pub struct PyTranscript(core::ProtocolTranscript);

#[pymethods]
impl PyTranscript {
    #[getter]
    fn fidelity(&self) -> f64 {
        self.0.fidelity
    }

    #[getter]
    fn key(&self) -> String {
        self.0.key.to_string()
    }

    #[getter]
    fn corrections(&self) -> (String, String) {
        (self.0.corrections.0.to_string(), self.0.corrections.1.to_string())
    }

    #[getter]
    fn outcomes(&self) -> Vec<&'static str> {
        self.0.outcomes().into_iter().map(BellOutcome::name).collect()
    }

    #[getter]
    fn classical_bits_sent(&self) -> BTreeMap<String, u32> {
        self.0
            .classical_bits_sent
            .iter()
            .map(|(a, b)| (a.to_string(), *b))
            .collect()
    }

    #[getter]
    fn final_state(&self) -> PyPureState {
        PyPureState(self.0.final_state.clone())
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.0)
    }

    fn __repr__(&self) -> String {
        format!(
            "Transcript({}, key={}, corrections={}{}, fidelity={:.17})",
            self.0.config, self.0.key, self.0.corrections.0, self.0.corrections.1, self.0.fidelity
        )
    }
}

#[pyfunction]
fn bell_state(kind: &str, a: &str, b: &str) -> PyResult<PyPureState> {
    core::bell_state(outcome(kind)?, a.into(), b.into())
        .map(PyPureState)
        .map_err(err)
}

/// Runs the protocol with outcomes sampled from `seed`.
#[pyfunction]
#[pyo3(signature = (secret, seed, scheme = "four-epr", agents = None, receiver = "charlie"))]
fn run_protocol(
    secret: &PySecret,
    seed: u64,
    scheme: &str,
    agents: Option<usize>,
    receiver: &str,
) -> PyResult<PyTranscript> {
    let cfg = config(scheme, agents, receiver)?;
    core::run_protocol(&secret.0, &cfg, &mut SeededRng::new(seed))
        .map(PyTranscript)
        .map_err(err)
}

/// Runs the protocol with every measurement outcome forced, in schedule order.
#[pyfunction]
#[pyo3(signature = (secret, outcomes, scheme = "four-epr", agents = None, receiver = "charlie"))]
fn run_forced(
    secret: &PySecret,
    outcomes: Vec<String>,
    scheme: &str,
    agents: Option<usize>,
    receiver: &str,
) -> PyResult<PyTranscript> {
    let cfg = config(scheme, agents, receiver)?;
    let outs = outcomes.iter().map(|o| outcome(o)).collect::<PyResult<Vec<_>>>()?;
    core::Protocol::new(cfg)
        .and_then(|p| p.run_forced(&secret.0, &outs))
        .map(PyTranscript)
        .map_err(err)
}

/// Derived correction table as rows `(key, state_pattern, op_i, op_j)`.
#[pyfunction]
#[pyo3(signature = (scheme = "four-epr", agents = None, receiver = "charlie"))]
fn derive_table(
    scheme: &str,
    agents: Option<usize>,
    receiver: &str,
) -> PyResult<Vec<(String, String, String, String)>> {
    let table = core::derive_correction_table(&config(scheme, agents, receiver)?).map_err(err)?;
    Ok(table
        .rules
        .iter()
        .map(|r| {
            (
                r.key.to_string(),
                r.pattern.to_string(),
                r.op_i.to_string(),
                r.op_j.to_string(),
            )
        })
        .collect())
}

/// Full verification summary as JSON.
#[pyfunction]
fn verify(py: Python<'_>, trials: u64, seed: u64) -> PyResult<String> {
    let summary = py.detach(|| core::run_verification(trials, seed)).map_err(err)?;
    to_json(&summary)
}

/// Lone-receiver security report as JSON.
#[pyfunction]
fn security(seed: u64) -> PyResult<String> {
    to_json(&core::verify::security_check(seed).map_err(err)?)
}

/// Audit of the printed 16-branch expansion as JSON.
#[pyfunction]
fn audit_expansion() -> PyResult<String> {
    to_json(&core::verify::audit_expansion().map_err(err)?)
}

#[pymodule]
fn qsts(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("QstsException", m.py().get_type::<QstsException>())?;
    m.add_class::<PyPureState>()?;
    m.add_class::<PySecret>()?;
    m.add_class::<PyTranscript>()?;
    m.add_function(wrap_pyfunction!(bell_state, m)?)?;
    m.add_function(wrap_pyfunction!(run_protocol, m)?)?;
    m.add_function(wrap_pyfunction!(run_forced, m)?)?;
    m.add_function(wrap_pyfunction!(derive_table, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(security, m)?)?;
    m.add_function(wrap_pyfunction!(audit_expansion, m)?)?;
    Ok(())
}
