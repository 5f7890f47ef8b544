// Failure rate of every scheme against every built-in adversary.

use intcode::harness::stress;
use intcode::randex::ExchangeMode;

pub fn run_example() -> intcode::Result<()> {
    let rows = stress(1 << 9, 0.004, 4, ExchangeMode::Repetition, 1)?;
    println!("{:<6}{:<12}{:>10}{:>14}{:>12}", "scheme", "adversary", "failures", "corruptions", "max drop");
    for r in rows {
        println!(
            "{:<6}{:<12}{:>10.2}{:>14.1}{:>12.0}",
            r.scheme.name(),
            r.adversary.name(),
            r.failure_rate,
            r.mean_corruptions,
            r.max_drop
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> intcode::Result<()> {
    run_example()
}
