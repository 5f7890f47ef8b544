// Alice sends a short seed through a repetition code while an oblivious
// adversary spends its whole budget on copies of the first seed bit; both
// parties still read the same δ-biased string.

use intcode::channel::{Channel, Oblivious};
use intcode::protocol::Alphabet;
use intcode::randex::{exchange, floor_n_eps, rng_for, ExchangeMode, ExchangePlan};
use intcode::smallbias::Bias;

pub fn run_example() -> intcode::Result<()> {
    let (n, eps) = (1 << 12, 0.002);
    let plan = ExchangePlan::new(ExchangeMode::Repetition, 1 << 20, Bias::pow2(30.0), n, eps);
    let seed = plan.sample_seed(&mut rng_for(3, 0));
    println!(
        "seed {} bits, repetition factor {}, {} rounds, adversary budget {}",
        plan.seed_len(),
        plan.repetition.map_or(1, |c| c.factor()),
        plan.rounds,
        floor_n_eps(n, eps)
    );

    // Copy j of bit 0 goes out in round j·l.
    let budget = floor_n_eps(n, eps);
    let l = plan.seed_len() as u64;
    let adversary = Box::new(Oblivious::fixed((0..budget).map(|j| (j * l, 1)).collect()));
    let total = (budget as f64 / eps).ceil() as u64;
    let mut channel = Channel::new(adversary, eps, total.max(plan.rounds), Alphabet::BINARY, false);
    let mut out = exchange(&plan, &seed, &mut channel)?;
    println!("corruptions {}, seeds agree: {}", out.corruptions, out.agreed());

    let a = out.alice.next_seed_bits(64)?;
    let b = out.bob.next_seed_bits(64)?;
    println!("first 64 shared bits equal: {}", a == b);
    Ok(())
}

#[allow(dead_code)]
fn main() -> intcode::Result<()> {
    run_example()
}
