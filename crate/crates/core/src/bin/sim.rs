use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use intcode::channel::AdversaryKind;
use intcode::harness::{sweep, write_report, ExperimentConfig, RATES_HEADER};
use intcode::protocol::ProtocolFamily;
use intcode::randex::ExchangeMode;
use intcode::schemes::{Scheme, SchemeConfig};

/// Simulates a coded interactive protocol over an adversarial channel.
#[derive(Parser, Debug)]
#[command(version)]
struct Args {
    /// a1, a3 or a4.
    #[arg(long)]
    scheme: Scheme,
    /// Length of the noiseless protocol.
    #[arg(long)]
    n: usize,
    /// Comma-separated noise rates.
    #[arg(long, value_delimiter = ',', required = true)]
    eps: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// none, bsc, burst, oblivious, mitm or greedy.
    #[arg(long, default_value = "none")]
    adversary: AdversaryKind,
    /// repetition, ideal or hidden.
    #[arg(long, default_value = "repetition")]
    exchange: ExchangeMode,
    /// full-entropy, pointer-jumping or echo.
    #[arg(long, default_value = "full-entropy")]
    family: ProtocolFamily,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trials per noise rate whose traces are written.
    #[arg(long, default_value_t = 1)]
    traces: usize,
    /// Hash output bits of A3 and of the second A4 layer.
    #[arg(long)]
    hash_bits: Option<usize>,
    /// Slack iterations per unit of nε.
    #[arg(long)]
    slack: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut constants = SchemeConfig::default();
    if let Some(o) = args.hash_bits {
        constants.hash_bits = o;
    }
    constants.slack = args.slack;
    let config = ExperimentConfig {
        scheme: args.scheme,
        n: args.n,
        eps: args.eps,
        trials: args.trials,
        adversary: args.adversary,
        exchange: args.exchange,
        family: args.family,
        seed: args.seed,
        constants,
        traced_trials: args.traces,
    };
    let report = match sweep(&config).and_then(|r| write_report(&r, &args.out).map(|_| r)) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("sim: {e}");
            return ExitCode::FAILURE;
        }
    };
    println!("{RATES_HEADER}");
    for p in &report.points {
        println!("{}", p.csv_row());
    }
    ExitCode::SUCCESS
}
