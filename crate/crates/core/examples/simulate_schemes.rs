// One run of each scheme against the adversary that targets it hardest.

use intcode::channel::AdversaryKind;
use intcode::harness::run_trial;
use intcode::protocol::ProtocolFamily;
use intcode::randex::ExchangeMode;
use intcode::schemes::{Scheme, SchemeConfig, SchemeParams};

pub fn run_example() -> intcode::Result<()> {
    let (n, eps) = (1 << 10, 0.004);
    let cells = [
        (Scheme::A1, AdversaryKind::Mitm),
        (Scheme::A3, AdversaryKind::Burst),
        (Scheme::A4, AdversaryKind::Greedy),
    ];
    for (scheme, adversary) in cells {
        let params = SchemeParams::new(scheme, n, eps, ExchangeMode::Repetition, &SchemeConfig::default())?;
        let res = run_trial(&params, ProtocolFamily::FullEntropy, adversary, 42, false)?;
        println!(
            "{scheme} vs {adversary}: r = {}, r_c = {}, {} rounds ({:.2}x), {} corruptions, {} collision iterations, success = {}",
            params.r,
            params.r_c,
            params.total_rounds,
            params.overhead(),
            res.corruptions,
            res.collisions.iterations,
            res.success
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> intcode::Result<()> {
    run_example()
}
