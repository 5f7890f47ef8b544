// Stretches a short seed into a long δ-biased string and measures the bias
// of a few random parities.

use intcode::bits::BitString;
use intcode::smallbias::{stretch, Bias};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> intcode::Result<()> {
    let l = 4096;
    let delta = Bias::pow2(8.0);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let seed_len = intcode::smallbias::required_seed_len(l as u64, delta);
    println!("l = {l}, δ = 2^-8, seed = {seed_len} bits");

    // Bias of a fixed parity, averaged over many seeds.
    let mask = BitString::from_bools((0..l).map(|_| rng.gen_bool(0.5)));
    let samples = 2000;
    let mut ones = 0;
    for _ in 0..samples {
        let seed = BitString::from_bools((0..seed_len).map(|_| rng.gen::<bool>()));
        let out = stretch(&seed, l, delta)?;
        ones += out.bits.masked_parity(&mask, 0) as u32;
    }
    let p = ones as f64 / samples as f64;
    println!("Pr[parity = 1] = {p:.3}, |bias| = {:.3}, guaranteed ≤ {:.4} (+ sampling noise)", (1.0 - 2.0 * p).abs(), delta.value());
    Ok(())
}

#[allow(dead_code)]
fn main() -> intcode::Result<()> {
    run_example()
}
