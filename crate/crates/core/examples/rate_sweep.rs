// Sweeps the noise rate for A3 under oblivious noise and writes the same
// files as the `sim` binary.

use intcode::channel::AdversaryKind;
use intcode::harness::{sweep, write_report, ExperimentConfig, RATES_HEADER};
use intcode::schemes::Scheme;

pub fn run_example() -> intcode::Result<()> {
    let mut config = ExperimentConfig::new(Scheme::A3, 1 << 10, vec![0.001, 0.002, 0.004], AdversaryKind::Oblivious);
    config.trials = 8;
    config.seed = 2024;
    let report = sweep(&config)?;
    println!("{RATES_HEADER}");
    for p in &report.points {
        println!("{}", p.csv_row());
    }

    let dir = std::env::temp_dir().join(format!("intcode-sweep-{}", std::process::id()));
    write_report(&report, &dir)?;
    println!("wrote {}", dir.display());
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> intcode::Result<()> {
    run_example()
}
