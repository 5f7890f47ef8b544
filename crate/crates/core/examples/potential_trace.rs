// Logs every iteration of an adversarial A4 run, checks the potential
// lemmas and prints the iterations where the potential fell.

use intcode::analysis::ITERATION_HEADER;
use intcode::channel::{write_trace, AdversaryKind};
use intcode::harness::run_trial;
use intcode::protocol::ProtocolFamily;
use intcode::randex::ExchangeMode;
use intcode::schemes::{Scheme, SchemeConfig, SchemeParams};

pub fn run_example() -> intcode::Result<()> {
    let params = SchemeParams::new(Scheme::A4, 1 << 10, 0.004, ExchangeMode::Repetition, &SchemeConfig::default())?;
    let res = run_trial(&params, ProtocolFamily::FullEntropy, AdversaryKind::Mitm, 9, true)?;
    let report = res.lemma_report(&params);
    println!(
        "{} iterations, Φ₀ = {}, final Φ = {} (bound {}), max drop {} (bound {:.0}), violations {}",
        res.traces.len(),
        res.phi0,
        report.final_phi,
        report.final_bound,
        report.max_drop,
        report.drop_bound,
        report.violations()
    );

    let mut prev = res.phi0;
    let mut falls = Vec::new();
    for t in &res.traces {
        if t.phi < prev {
            falls.push(t.clone());
        }
        prev = t.phi;
    }
    println!("iterations where Φ fell:");
    println!("{ITERATION_HEADER}");
    for t in falls.iter().take(8) {
        println!("{}", t.csv_row());
    }

    let mut channel = Vec::new();
    write_trace(&mut channel, &res.events)?;
    let text = String::from_utf8_lossy(&channel);
    println!("first channel rounds:");
    for line in text.lines().take(4) {
        println!("{line}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> intcode::Result<()> {
    run_example()
}
