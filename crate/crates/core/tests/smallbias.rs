use intcode::bits::BitString;
use intcode::hashing::{ip_hash, InnerProductHashSpec};
use intcode::smallbias::{stretch_with_degree, BiasedGenerator, Field};
use proptest::prelude::*;

/// Histogram of the first `l` output bits over every seed with `a ≠ 0`.
/// Bit `i` is `⟨aⁱ, b⟩`; one seed per `a` is cross-checked against the
/// generator.
fn word_histogram(m: u32, l: usize) -> (Vec<u64>, u64) {
    let field = Field::for_degree(m).unwrap();
    let mut hist = vec![0u64; 1 << l];
    let mut seeds = 0;
    for a in 1u64..1 << m {
        let mut powers = Vec::with_capacity(l);
        let mut p = field.one();
        for _ in 0..l {
            powers.push(p[0]);
            p = field.mul(&p, &field.from_u64(a));
        }
        for b in 0u64..1 << m {
            let word = powers
                .iter()
                .enumerate()
                .fold(0usize, |w, (i, &p)| w | ((((p & b).count_ones() & 1) as usize) << i));
            if b == a {
                let gen = BiasedGenerator::from_elems(field.clone(), field.from_u64(a), field.from_u64(b), l as u64);
                assert_eq!(gen.materialize(0, l).read_bits(0, l) as usize, word);
            }
            hist[word] += 1;
            seeds += 1;
        }
    }
    (hist, seeds)
}

/// Histogram of the first `l` bits, from one over a longer prefix.
fn marginal(hist: &[u64], l: usize) -> Vec<u64> {
    let mut out = vec![0u64; 1 << l];
    for (word, &c) in hist.iter().enumerate() {
        out[word & ((1 << l) - 1)] += c;
    }
    out
}

/// Walsh–Hadamard transform in place: entry `S` becomes `Σ_x (−1)^{S·x} h[x]`.
fn walsh_hadamard(h: &[u64]) -> Vec<i64> {
    let mut v: Vec<i64> = h.iter().map(|&x| x as i64).collect();
    let mut len = 1;
    while len < v.len() {
        for i in (0..v.len()).step_by(2 * len) {
            for j in i..i + len {
                let (x, y) = (v[j], v[j + len]);
                v[j] = x + y;
                v[j + len] = x - y;
            }
        }
        len *= 2;
    }
    v
}

#[test]
fn every_subset_parity_within_bias_bound() {
    for m in 2u32..=10 {
        let (full, seeds) = word_histogram(m, 2 * m as usize);
        for l in 1..=2 * m as usize {
            let hist = marginal(&full, l);
            let bound = l as f64 / (1u64 << m) as f64;
            let spectrum = walsh_hadamard(&hist);
            let worst = spectrum[1..].iter().map(|c| c.unsigned_abs()).max().unwrap() as f64 / seeds as f64;
            assert!(worst <= bound + 1e-12, "m = {m}, l = {l}: bias {worst} > {bound}");
        }
    }
}

#[test]
fn independent_parities_close_to_uniform() {
    // Four independent parities over a 12-bit output: the unit vectors and
    // two mixed masks.
    let (m, l) = (6u32, 12usize);
    let (hist, seeds) = word_histogram(m, l);
    let delta = l as f64 / (1u64 << m) as f64;
    let mask_sets: [[u64; 4]; 3] = [
        [0b1, 0b10, 0b100, 0b1000],
        [0b1010_0000_0001, 0b0110_0000_0011, 0b0001_1000_0000, 0b0000_0111_0000],
        [0xfff, 0x0f0, 0x00f, 0x800],
    ];
    for masks in mask_sets {
        let mut joint = [0u64; 16];
        for (word, &count) in hist.iter().enumerate() {
            let mut key = 0;
            for (i, mask) in masks.iter().enumerate() {
                key |= (((word as u64 & mask).count_ones() & 1) as usize) << i;
            }
            joint[key] += count;
        }
        let sd: f64 = joint.iter().map(|&c| (c as f64 / seeds as f64 - 1.0 / 16.0).abs()).sum::<f64>() / 2.0;
        assert!(sd <= delta, "{masks:?}: distance {sd} > {delta}");
    }
}

#[test]
fn hash_windows_are_jointly_close_to_independent() {
    // Three disjoint seed windows, each hashing one fixed pair of 2-bit inputs
    // to a single bit. Under a uniform seed the three match indicators are
    // independent fair coins, since every pair differs.
    let spec = InnerProductHashSpec::new(2, 1).unwrap();
    let w = spec.required_seed_len();
    let pairs = [("10", "01"), ("1", "11"), ("", "00")];
    let l = 3 * w;
    let m = 10u32;
    let (hist, seeds) = word_histogram(m, l);
    let delta = l as f64 / (1u64 << m) as f64;
    let mut joint = [0u64; 8];
    for (word, &count) in hist.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let bits = BitString::from_u64(word as u64, l);
        let mut key = 0;
        for (i, (x, y)) in pairs.iter().enumerate() {
            let window = bits.slice(i * w, w);
            let hx = ip_hash(&spec, &window, &BitString::parse(x).unwrap()).unwrap();
            let hy = ip_hash(&spec, &window, &BitString::parse(y).unwrap()).unwrap();
            key |= usize::from(hx == hy) << i;
        }
        joint[key] += count;
    }
    let sd: f64 = joint.iter().map(|&c| (c as f64 / seeds as f64 - 1.0 / 8.0).abs()).sum::<f64>() / 2.0;
    assert!(sd <= delta, "distance {sd} > {delta}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stretch_is_a_prefix_of_longer_stretch(a in 1u64..1 << 20, b in any::<u64>(), l in 1usize..200, extra in 0usize..100) {
        let m = 20;
        let mut seed = BitString::from_u64(a, m);
        seed.extend_from(&BitString::from_u64(b & ((1 << m) - 1), m));
        let short = stretch_with_degree(&seed, m as u32, l).unwrap();
        let long = stretch_with_degree(&seed, m as u32, l + extra).unwrap();
        prop_assert_eq!(short, long.slice(0, l));
    }

    #[test]
    fn windows_agree_with_single_bits(a in 1u64..1 << 30, b in any::<u64>(), start in 0u64..5000, count in 0usize..150) {
        let m = 30;
        let mut seed = BitString::from_u64(a, m);
        seed.extend_from(&BitString::from_u64(b & ((1 << m) - 1), m));
        let gen = BiasedGenerator::from_seed_bits(&seed, m as u32, 6000).unwrap();
        let window = gen.materialize(start, count);
        for i in 0..count {
            prop_assert_eq!(window.get(i), gen.bit(start + i as u64));
        }
    }
}
