// Inner product hashing: exact collision fractions over all seeds, and the
// short-seed family used by the fully adversarial scheme.

use intcode::bits::BitString;
use intcode::hashing::{collision_prob_oracle, nn_hash, HashKind, InnerProductHashSpec, NnHashParams};

pub fn run_example() -> intcode::Result<()> {
    let x = BitString::parse("101100").unwrap();
    let y = BitString::parse("10110").unwrap();

    let spec = InnerProductHashSpec::new(6, 2)?;
    let exact = collision_prob_oracle(HashKind::UniformIp(spec), &x, &y)?;
    println!("uniform seed, o = 2: {} / {} = {}", exact.collisions, exact.seeds, exact.value());

    let biased = collision_prob_oracle(HashKind::BiasedIp { spec, degree: 8 }, &x, &y)?;
    println!("δ-biased seed, m = 8: {:.4}", biased.value());

    let params = NnHashParams::new(0.25, 3, 16, 6)?;
    let short = collision_prob_oracle(HashKind::Nn(params), &x, &y)?;
    println!("short-seed family (s = 16): {:.4} ≤ {:.4}", short.value(), params.collision_bound());

    let params = NnHashParams::recommended(0.1, 1 << 14)?;
    let seed = BitString::from_bools((0..params.seed_len()).map(|i| (i * 7) % 5 < 2));
    let x = BitString::from_bools((0..1000).map(|i| i % 3 == 0));
    println!(
        "recommended for p = 0.1: o = {}, s = {}, h(x) = {:0w$b}",
        params.output_len(),
        params.seed_len(),
        nn_hash(&params, &seed, &x)?.bits(),
        w = params.output_len()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> intcode::Result<()> {
    run_example()
}
