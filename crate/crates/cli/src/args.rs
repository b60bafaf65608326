use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "qsts",
    version,
    about = "Simulate and verify two-qubit controlled state sharing"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one protocol instance with sampled measurement outcomes.
    Run(RunArgs),
    /// Derive the 16-row correction table by brute force.
    DeriveTable(TableArgs),
    /// Run the full verification campaign.
    Verify(VerifyArgs),
    /// Lone-receiver security report for the four-EPR scheme.
    Security(SecurityArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    FourEpr,
    Circular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReceiverArg {
    Bob,
    Charlie,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct SchemeArgs {
    #[arg(long, value_enum, default_value = "four-epr")]
    pub scheme: SchemeArg,
    /// Number of controlling agents (circular scheme only).
    #[arg(long = "agents", value_name = "N")]
    pub agents: Option<usize>,
    /// Receiving agent; defaults to charlie.
    #[arg(long, value_enum)]
    pub receiver: Option<ReceiverArg>,
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct SecretArgs {
    /// Eight reals: re,im of alpha, beta, gamma, delta.
    #[arg(long, value_name = "RE,IM,...", allow_hyphen_values = true)]
    pub secret: Option<String>,
    /// JSON file with fields alpha..delta, each [re, im].
    #[arg(long, value_name = "PATH")]
    pub secret_file: Option<PathBuf>,
    /// Draw a Haar-random secret from the seeded generator.
    #[arg(long)]
    pub random_state: bool,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Write the report here instead of standard output.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub scheme: SchemeArgs,
    #[command(flatten)]
    pub secret: SecretArgs,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TableArgs {
    #[command(flatten)]
    pub scheme: SchemeArgs,
    /// Compare against the printed table; exit 1 on any mismatch.
    #[arg(long)]
    pub check: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SecurityArgs {
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}
