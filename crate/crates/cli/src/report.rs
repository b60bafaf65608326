//! The JSON envelope every subcommand writes.

use std::path::PathBuf;

use qsts_core::verify::golden::TableComparison;
use qsts_core::verify::SecurityReport;
use qsts_core::{CorrectionTable, ProtocolTranscript, VerificationSummary};
use serde::{Deserialize, Serialize};

pub const TOOL: &str = "qsts";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportEnvelope {
    pub tool: String,
    pub version: String,
    pub request: RunRequest,
    /// RFC 3339, UTC. The only field that differs between identical invocations.
    pub timestamp: String,
    pub payload: Payload,
}

impl ReportEnvelope {
    pub fn new(request: RunRequest, payload: Payload) -> Self {
        ReportEnvelope {
            tool: TOOL.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            request,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            payload,
        }
    }
}

/// Echo of the parsed command line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRequest {
    pub subcommand: String,
    pub scheme: Option<String>,
    pub n_agents: Option<usize>,
    pub receiver: Option<String>,
    pub secret_source: Option<SecretSource>,
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub format: String,
    pub out: Option<PathBuf>,
    pub check: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum SecretSource {
    Explicit { values: [f64; 8] },
    File { path: PathBuf },
    HaarRandom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableReport {
    pub table: CorrectionTable,
    /// Present with `--check`.
    pub check: Option<TableComparison>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Payload {
    Transcript(ProtocolTranscript),
    Table(TableReport),
    Verification(Box<VerificationSummary>),
    Security(SecurityReport),
}

/// Table rows as CSV, columns in printed-table order.
pub fn table_csv(table: &CorrectionTable) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["v_total", "v_b5", "p_b5", "p_total", "state_pattern", "op_i", "op_j"])?;
    for r in &table.rules {
        w.write_record([
            r.key.v_total.to_string(),
            r.key.v_b5.to_string(),
            r.key.p_b5.to_string(),
            r.key.p_total.to_string(),
            r.pattern.to_string(),
            r.op_i.to_string(),
            r.op_j.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
