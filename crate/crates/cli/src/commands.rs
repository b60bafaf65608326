use std::fs;
use std::io::Write;
use std::path::Path;

use log::{debug, info};
use qsts_core::table::RESTORE_TOL;
use qsts_core::verify::golden::{compare_keyed, GoldenTable};
use qsts_core::verify::security_check;
use qsts_core::{
    derive_correction_table, run_protocol, run_verification, Receiver, Scheme, SchemeConfig, SeededRng, TwoQubitSecret,
};
use serde::Deserialize;

use crate::args::{Command, Format, OutputArgs, ReceiverArg, SchemeArg, SchemeArgs, SecretArgs};
use crate::report::{table_csv, Payload, ReportEnvelope, RunRequest, SecretSource, TableReport};

/// Exit status: 0 success, 1 a check failed, 2 bad usage or input.
pub type ExitCode = i32;

#[derive(Debug)]
pub enum CliError {
    /// Malformed flags, secrets or files.
    Input(String),
    /// A verification step could not run to completion.
    Failure(String),
}

impl CliError {
    pub fn code(&self) -> ExitCode {
        match self {
            CliError::Input(_) => 2,
            CliError::Failure(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Failure(m) => m,
        }
    }
}

fn input<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

fn failure<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Failure(e.to_string())
}

pub fn execute(command: Command) -> Result<ExitCode, CliError> {
    match command {
        Command::Run(a) => cmd_run(&a.scheme, &a.secret, a.seed, &a.output),
        Command::DeriveTable(a) => cmd_derive_table(&a.scheme, a.check, &a.output),
        Command::Verify(a) => cmd_verify(a.trials, a.seed, &a.output),
        Command::Security(a) => cmd_security(a.seed, &a.output),
    }
}

fn config_from(args: &SchemeArgs) -> Result<SchemeConfig, CliError> {
    match args.scheme {
        SchemeArg::FourEpr => {
            if args.agents.is_some() {
                return Err(CliError::Input("--agents applies only to the circular scheme".into()));
            }
            let receiver = match args.receiver.unwrap_or(ReceiverArg::Charlie) {
                ReceiverArg::Bob => Receiver::Bob,
                ReceiverArg::Charlie => Receiver::Charlie,
            };
            Ok(SchemeConfig::four_epr(receiver))
        }
        SchemeArg::Circular => {
            if args.receiver == Some(ReceiverArg::Bob) {
                return Err(CliError::Input("the circular scheme always delivers to charlie".into()));
            }
            let n = args
                .agents
                .ok_or_else(|| CliError::Input("--agents is required for the circular scheme".into()))?;
            SchemeConfig::circular(n).map_err(input)
        }
    }
}

fn request(subcommand: &str, config: Option<&SchemeConfig>, output: &OutputArgs) -> RunRequest {
    RunRequest {
        subcommand: subcommand.to_string(),
        scheme: config.map(|c| c.scheme.to_string()),
        n_agents: config.filter(|c| c.scheme == Scheme::Circular).map(|c| c.n_agents),
        receiver: config.map(|c| c.receiver.to_string()),
        secret_source: None,
        seed: None,
        trials: None,
        format: match output.format {
            Format::Json => "json".into(),
            Format::Csv => "csv".into(),
        },
        out: output.out.clone(),
        check: false,
    }
}

pub fn parse_secret_values(text: &str) -> Result<[f64; 8], CliError> {
    let values = text
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Input(format!("bad secret component `{p}`: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let values: [f64; 8] = values
        .try_into()
        .map_err(|v: Vec<f64>| CliError::Input(format!("--secret needs 8 reals, got {}", v.len())))?;
    if values.iter().any(|x| !x.is_finite()) {
        return Err(CliError::Input("secret components must be finite".into()));
    }
    Ok(values)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SecretFile {
    alpha: [f64; 2],
    beta: [f64; 2],
    gamma: [f64; 2],
    delta: [f64; 2],
}

fn read_secret_file(path: &Path) -> Result<[f64; 8], CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let f: SecretFile = serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let [a, b, c, d] = [f.alpha, f.beta, f.gamma, f.delta];
    Ok([a[0], a[1], b[0], b[1], c[0], c[1], d[0], d[1]])
}

fn resolve_secret(args: &SecretArgs, rng: &mut SeededRng) -> Result<(TwoQubitSecret, SecretSource), CliError> {
    if let Some(text) = &args.secret {
        let values = parse_secret_values(text)?;
        Ok((
            TwoQubitSecret::from_reals(values).map_err(input)?,
            SecretSource::Explicit { values },
        ))
    } else if let Some(path) = &args.secret_file {
        let values = read_secret_file(path)?;
        let secret = TwoQubitSecret::from_reals(values).map_err(input)?;
        Ok((secret, SecretSource::File { path: path.clone() }))
    } else {
        Ok((TwoQubitSecret::haar_random(rng), SecretSource::HaarRandom))
    }
}

fn emit(output: &OutputArgs, body: &str) -> Result<(), CliError> {
    match &output.out {
        Some(path) => {
            fs::write(path, body).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            info!("report written to {}", path.display());
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes())
                .and_then(|_| out.flush())
                .map_err(failure)?;
        }
    }
    Ok(())
}

fn emit_json(output: &OutputArgs, envelope: &ReportEnvelope) -> Result<(), CliError> {
    let mut body = serde_json::to_string_pretty(envelope).map_err(failure)?;
    body.push('\n');
    emit(output, &body)
}

fn json_only(output: &OutputArgs, subcommand: &str) -> Result<(), CliError> {
    match output.format {
        Format::Json => Ok(()),
        Format::Csv => Err(CliError::Input(format!(
            "{subcommand} reports are JSON only; csv is for derive-table"
        ))),
    }
}

fn cmd_run(scheme: &SchemeArgs, secret: &SecretArgs, seed: u64, output: &OutputArgs) -> Result<ExitCode, CliError> {
    json_only(output, "run")?;
    let config = config_from(scheme)?;
    let mut rng = SeededRng::new(seed);
    let (secret, source) = resolve_secret(secret, &mut rng)?;
    info!("running {config} with seed {seed}");
    let transcript = run_protocol(&secret, &config, &mut rng).map_err(input)?;
    debug!("outcomes {:?}, key {}", transcript.outcomes(), transcript.key);
    let fidelity = transcript.fidelity;

    let mut req = request("run", Some(&config), output);
    req.secret_source = Some(source);
    req.seed = Some(seed);
    emit_json(output, &ReportEnvelope::new(req, Payload::Transcript(transcript)))?;
    if fidelity >= 1.0 - RESTORE_TOL {
        Ok(0)
    } else {
        log::error!("fidelity {fidelity} below 1 - {RESTORE_TOL:e}");
        Ok(1)
    }
}

fn cmd_derive_table(scheme: &SchemeArgs, check: bool, output: &OutputArgs) -> Result<ExitCode, CliError> {
    let config = config_from(scheme)?;
    let golden = match (check, config.scheme, config.receiver) {
        (false, _, _) => None,
        (true, Scheme::FourEpr, Receiver::Charlie) => Some(GoldenTable::four_epr()),
        (true, Scheme::Circular, _) => Some(GoldenTable::circular()),
        (true, _, _) => return Err(CliError::Input(format!("no printed table to check {config} against"))),
    };
    info!("deriving the correction table for {config}");
    let table = derive_correction_table(&config).map_err(failure)?;
    let comparison = golden.map(|g| compare_keyed(&g, &table));
    let passed = comparison.as_ref().is_none_or(|c| c.passed);
    if let Some(c) = &comparison {
        eprintln!("{}/16 printed rows reproduced", c.matching_rows);
        for m in c.mismatches() {
            eprintln!(
                "  row {} key {}: printed {} {}{}, derived {}",
                m.row,
                m.key,
                m.printed_pattern,
                m.printed_ops.0,
                m.printed_ops.1,
                m.derived_ops.map_or("none".to_string(), |(i, j)| format!("{i}{j}")),
            );
        }
    }

    match output.format {
        Format::Csv => emit(output, &table_csv(&table).map_err(failure)?)?,
        Format::Json => {
            let mut req = request("derive-table", Some(&config), output);
            req.check = check;
            let payload = Payload::Table(TableReport {
                table,
                check: comparison,
            });
            emit_json(output, &ReportEnvelope::new(req, payload))?;
        }
    }
    Ok(if passed { 0 } else { 1 })
}

fn cmd_verify(trials: u64, seed: u64, output: &OutputArgs) -> Result<ExitCode, CliError> {
    json_only(output, "verify")?;
    info!("verification campaign: {trials} trials per configuration, seed {seed}");
    let summary = run_verification(trials, seed).map_err(failure)?;
    for c in &summary.checks {
        eprintln!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let passed = summary.all_passed;
    let mut req = request("verify", None, output);
    req.seed = Some(seed);
    req.trials = Some(trials);
    emit_json(
        output,
        &ReportEnvelope::new(req, Payload::Verification(Box::new(summary))),
    )?;
    Ok(if passed { 0 } else { 1 })
}

fn cmd_security(seed: u64, output: &OutputArgs) -> Result<ExitCode, CliError> {
    json_only(output, "security")?;
    let report = security_check(seed).map_err(failure)?;
    eprintln!(
        "{} security: max deviation of rho_8 from I/2 {:.3e}, guess success {}, worst wrong correction {:.6}",
        if report.passed { "PASS" } else { "FAIL" },
        report.max_deviation_from_mixed,
        report.guess_success_probability,
        report.max_wrong_correction_fidelity,
    );
    let passed = report.passed;
    let config = SchemeConfig::four_epr(Receiver::Charlie);
    let mut req = request("security", Some(&config), output);
    req.seed = Some(seed);
    emit_json(output, &ReportEnvelope::new(req, Payload::Security(report)))?;
    Ok(if passed { 0 } else { 1 })
}
