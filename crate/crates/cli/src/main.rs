mod commands;
mod demos;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;

#[derive(Parser)]
#[command(name = "globalctl", version, about = "Globally controlled qubit chain simulator and pulse compiler")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
pub enum Cmd {
    /// Run a pulse program on a layout with the hybrid simulator.
    Simulate {
        #[arg(long)]
        layout: PathBuf,
        #[arg(long)]
        program: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Named initial pattern (all-zero, single-CU, three-CU, level-<i>).
        #[arg(long, default_value = "single-CU")]
        init: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compile a circuit (JSON array of ops) to a pulse program.
    Compile {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long)]
        layout: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a protocol demonstration and write its report.
    Demo {
        #[arg(long, value_parser = ["two-qubit-gate", "buffer-reset", "syndrome-table", "correction-cycle"])]
        name: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Monte Carlo CU survival sweep; writes CSV plus a JSON summary.
    Mc {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Hybrid-vs-dense equivalence sweep over random programs.
    Verify {
        #[arg(long, default_value_t = 12)]
        n: usize,
        #[arg(long, default_value_t = 50)]
        programs: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Find three-CU pulse parameters for a single-qubit target.
    Solve {
        /// Gate name (x, y, z, h, s, t), `axis:X,Y,Z:ANGLE`, or a JSON matrix.
        #[arg(long)]
        target: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure reported as JSON on stderr.
#[derive(Debug, Serialize)]
pub struct CliError {
    pub error: String,
    pub message: String,
}

impl CliError {
    pub fn new(kind: &str, msg: impl Into<String>) -> Self {
        CliError { error: kind.to_string(), message: msg.into() }
    }
}

impl From<globalctl::Error> for CliError {
    fn from(e: globalctl::Error) -> Self {
        CliError::new(e.kind(), e.to_string())
    }
}

/// What a command hands back for the run record.
#[derive(Default)]
pub struct Outcome {
    pub config: Value,
    pub seeds: Vec<u64>,
    pub outputs: Vec<PathBuf>,
    pub summary: Value,
}

#[derive(Serialize)]
struct RunRecord {
    command: String,
    argv: Vec<String>,
    config: Value,
    seeds: Vec<u64>,
    elapsed_ms: f64,
    outputs: Vec<PathBuf>,
    versions: Value,
    summary: Value,
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => return fail(CliError::new("Usage", e.to_string().trim_end())),
    };
    let name = commands::name(&cli.cmd);
    let t0 = Instant::now();
    match commands::run(cli.cmd) {
        Ok(o) => {
            let rec = RunRecord {
                command: name.to_string(),
                argv,
                config: o.config,
                seeds: o.seeds,
                elapsed_ms: t0.elapsed().as_secs_f64() * 1e3,
                outputs: o.outputs,
                versions: serde_json::json!({ "globalctl": env!("CARGO_PKG_VERSION") }),
                summary: o.summary,
            };
            println!("{}", serde_json::to_string_pretty(&rec).expect("record serializes"));
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("{}", serde_json::to_string(&e).expect("error serializes"));
    ExitCode::from(1)
}
