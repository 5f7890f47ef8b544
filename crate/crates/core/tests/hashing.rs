use intcode::analysis::{count_collisions, IterationTrace};
use intcode::bits::BitString;
use intcode::hashing::{collision_prob_oracle, ip_hash, nn_hash, HashKind, InnerProductHashSpec, NnHashParams, NnHasher};
use intcode::smallbias::stretch_with_degree;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_bits(rng: &mut ChaCha8Rng, len: usize) -> BitString {
    BitString::from_bools((0..len).map(|_| rng.gen::<bool>()))
}

fn distinct_pair(rng: &mut ChaCha8Rng, max_len: usize) -> (BitString, BitString) {
    loop {
        let (lx, ly) = (rng.gen_range(0..=max_len), rng.gen_range(0..=max_len));
        let x = random_bits(rng, lx);
        let y = random_bits(rng, ly);
        if x != y {
            return (x, y);
        }
    }
}

#[test]
fn short_seed_family_exhaustive_quarter_bound() {
    let params = NnHashParams::new(0.25, 3, 16, 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..12 {
        let (x, y) = distinct_pair(&mut rng, 8);
        let f = collision_prob_oracle(HashKind::Nn(params), &x, &y).unwrap();
        assert_eq!(f.seeds, (1 << 16) - (1 << 8));
        assert!(f.value() <= 0.25, "{x:?} vs {y:?}: {}", f.value());
    }
}

#[test]
fn short_seed_family_monte_carlo() {
    let p = 0.1;
    let params = NnHashParams::recommended(p, 32).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pairs = 100_000;
    let mut hits = 0u32;
    for _ in 0..pairs {
        let x = rng.gen::<u32>();
        let mut y = rng.gen::<u32>();
        while y == x {
            y = rng.gen::<u32>();
        }
        let seed = random_bits(&mut rng, params.seed_len());
        let hx = nn_hash(&params, &seed, &BitString::from_u64(x as u64, 32)).unwrap();
        let hy = nn_hash(&params, &seed, &BitString::from_u64(y as u64, 32)).unwrap();
        hits += u32::from(hx == hy);
    }
    let rate = hits as f64 / pairs as f64;
    let sigma = (p * (1.0 - p) / pairs as f64).sqrt();
    assert!(rate <= p + 3.0 * sigma, "rate {rate}");
}

fn trace_with_collision(h1: u64) -> IterationTrace {
    IterationTrace {
        iter: 0,
        l_plus: 0,
        l_minus: 1,
        k_a: 1,
        k_b: 1,
        e_a: 0,
        e_b: 0,
        bvc: 0,
        bvc_added: 0,
        phi: 0.0,
        had_error: false,
        had_collision: h1 > 0,
        h1_collisions: h1,
        h2_collisions: 0,
        dangerous: true,
        corruptions: 0,
        computed: [false, false],
        len_a: 4,
        len_b: 4,
        resets: [false, false],
    }
}

#[test]
fn forced_collision_is_counted_once() {
    // Search all inputs of up to 4 bits for two that collide under a fixed
    // stretched seed.
    let spec = InnerProductHashSpec::new(4, 2).unwrap();
    let seed = stretch_with_degree(&BitString::from_u64(0b1011_0110_0101_1101, 16), 8, spec.required_seed_len()).unwrap();
    let inputs: Vec<BitString> = (0..=4usize)
        .flat_map(|len| (0..1u64 << len).map(move |v| BitString::from_u64(v, len)))
        .collect();
    let (x, y) = inputs
        .iter()
        .enumerate()
        .flat_map(|(i, x)| inputs[i + 1..].iter().map(move |y| (x, y)))
        .find(|(x, y)| ip_hash(&spec, &seed, x).unwrap() == ip_hash(&spec, &seed, y).unwrap())
        .expect("some pair collides among 31 inputs and 4 outputs");
    assert_ne!(x, y);

    let collided = u64::from(x != y && ip_hash(&spec, &seed, x).unwrap() == ip_hash(&spec, &seed, y).unwrap());
    let log = [trace_with_collision(0), trace_with_collision(collided), trace_with_collision(0)];
    let counts = count_collisions(&log);
    assert_eq!(counts.h1 + counts.h2, 1);
    assert_eq!(counts.iterations, 1);
    assert_eq!(counts.outside_dangerous, 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn uniform_seed_collides_with_probability_two_to_minus_o(seed in any::<u64>(), o in 1usize..=2) {
        let spec = InnerProductHashSpec::new(5, o).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, y) = distinct_pair(&mut rng, 5);
        let f = collision_prob_oracle(HashKind::UniformIp(spec), &x, &y).unwrap();
        prop_assert_eq!(f.collisions << o, f.seeds);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn algebraic_hasher_matches_literal_hash(seed in any::<u64>(), len in 0usize..600, cut in 0usize..600) {
        let params = NnHashParams::recommended(0.05, 600).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let key = random_bits(&mut rng, params.seed_len());
        let x = random_bits(&mut rng, len);
        let hasher = NnHasher::new(&params, &key).unwrap();
        prop_assert_eq!(hasher.hash(&x).unwrap(), nn_hash(&params, &key, &x).unwrap());
        let cut = cut.min(len);
        prop_assert_eq!(hasher.hash_prefix(&x, cut).unwrap(), nn_hash(&params, &key, &x.slice(0, cut)).unwrap());
    }

    #[test]
    fn hash_has_output_length(seed in any::<u64>(), o in 1usize..=128, len in 0usize..100) {
        let spec = InnerProductHashSpec::new(100, o).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let key = random_bits(&mut rng, spec.required_seed_len());
        let h = ip_hash(&spec, &key, &random_bits(&mut rng, len)).unwrap();
        prop_assert_eq!(h.len(), o);
        prop_assert!(o == 128 || h.bits() >> o == 0);
        prop_assert_eq!(spec.required_seed_len(), 2 * o * 100);
    }
}
