//! δ-biased stretching by the powering construction.
//!
//! A seed `(a, b) ∈ GF(2^m)²` expands to the bit string whose bit `i` is the
//! inner product `⟨a^i, b⟩`. For any nonempty set of positions the XOR of the
//! selected bits is `⟨p(a), b⟩` for a nonzero polynomial `p` of degree < l,
//! which is unbiased unless `a` is one of its at most `l − 1` roots, so the
//! string is `l / 2^m`-biased.
//!
//! Besides materialising bits, [`BiasedGenerator`] evaluates inner products of
//! arbitrary bit strings against windows of the stretched string in
//! `O(len / 64)` field operations, using
//! `Σ_t x_t·⟨a^(w+t), b⟩ = ⟨a^w · Σ_t x_t a^t, b⟩`.

pub mod field;

pub use field::{Elem, Field, Modulus, MAX_DEGREE};

use serde::Serialize;

use crate::bits::BitString;
use crate::{Error, Result};

/// A bias target δ, stored as `log₂(1/δ)` so tiny values do not underflow.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize)]
pub struct Bias {
    log2_inv: f64,
}

impl Bias {
    pub fn from_delta(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter(format!("bias {delta} outside (0, 1)")));
        }
        Ok(Self {
            log2_inv: -delta.log2(),
        })
    }

    /// δ = 2^(−exponent).
    pub fn pow2(exponent: f64) -> Self {
        assert!(exponent > 0.0);
        Self { log2_inv: exponent }
    }

    pub fn log2_inv(&self) -> f64 {
        self.log2_inv
    }

    pub fn value(&self) -> f64 {
        (-self.log2_inv).exp2()
    }
}

/// Field degree `m = ⌈log₂(l/δ)⌉` so that `l/2^m ≤ δ`.
pub fn required_degree(l: u64, delta: Bias) -> u32 {
    let raw = (l.max(1) as f64).log2() + delta.log2_inv();
    (raw - 1e-9).ceil().max(1.0) as u32
}

pub fn required_seed_len(l: u64, delta: Bias) -> usize {
    2 * required_degree(l, delta) as usize
}

/// Output of [`stretch`].
#[derive(Clone, Debug)]
pub struct BiasedString {
    pub bits: BitString,
    /// Bias guaranteed by the construction, `l / 2^m`.
    pub bias_delta: f64,
    pub source_seed_len: usize,
}

/// Stretches the first `2m` seed bits to `l` bits of bias at most `delta`.
pub fn stretch(seed: &BitString, l: usize, delta: Bias) -> Result<BiasedString> {
    let m = required_degree(l as u64, delta);
    if m > MAX_DEGREE {
        return Err(Error::InvalidParameter(format!(
            "required degree {m} exceeds {MAX_DEGREE}"
        )));
    }
    let gen = BiasedGenerator::from_seed_bits(seed, m, l as u64)?;
    Ok(BiasedString {
        bits: gen.materialize(0, l),
        bias_delta: gen.achieved_bias(),
        source_seed_len: gen.seed_len(),
    })
}

/// Stretch with an explicit field degree; the seed must hold `2m` bits.
pub fn stretch_with_degree(seed: &BitString, m: u32, l: usize) -> Result<BitString> {
    Ok(BiasedGenerator::from_seed_bits(seed, m, l as u64)?.materialize(0, l))
}

/// The stretched string of one seed, evaluated lazily.
#[derive(Clone, Debug)]
pub struct BiasedGenerator {
    field: Field,
    a: Elem,
    b: Elem,
    len: u64,
    /// Entry `256j + v`, stored as `limbs` consecutive words: for byte
    /// position `j` and byte `v`, `Σ_{u: v_u = 1} a^(8j+u)`.
    tables: Vec<u64>,
    a64: Elem,
}

impl BiasedGenerator {
    /// Seed layout: bits `[0, m)` are `a`, bits `[m, 2m)` are `b`.
    pub fn from_seed_bits(seed: &BitString, m: u32, len: u64) -> Result<Self> {
        let needed = 2 * m as usize;
        if seed.len() < needed {
            return Err(Error::SeedTooShort {
                needed,
                got: seed.len(),
            });
        }
        let field = Field::for_degree(m)?;
        let a = field.from_bit_range(seed, 0);
        let b = field.from_bit_range(seed, m as usize);
        Ok(Self::from_elems(field, a, b, len))
    }

    pub fn from_elems(field: Field, a: Elem, b: Elem, len: u64) -> Self {
        let mut powers = Vec::with_capacity(65);
        let mut p = field.one();
        for _ in 0..=64 {
            powers.push(p.clone());
            p = field.mul(&p, &a);
        }
        let limbs = field.limbs();
        let mut tables = vec![0u64; 8 * 256 * limbs];
        for j in 0..8 {
            for v in 1usize..256 {
                let u = v.trailing_zeros() as usize;
                let prev = (256 * j + (v & (v - 1))) * limbs;
                let at = (256 * j + v) * limbs;
                for (i, p) in powers[8 * j + u].iter().enumerate() {
                    tables[at + i] = tables[prev + i] ^ p;
                }
            }
        }
        let a64 = powers[64].clone();
        Self {
            field,
            a,
            b,
            len,
            tables,
            a64,
        }
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn degree(&self) -> u32 {
        self.field.degree()
    }

    pub fn seed_len(&self) -> usize {
        2 * self.degree() as usize
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Seed elements `(a, b)`.
    pub fn seed(&self) -> (&[u64], &[u64]) {
        (&self.a, &self.b)
    }

    /// `l / 2^m`, the bias bound of the construction (0 when it underflows).
    pub fn achieved_bias(&self) -> f64 {
        ((self.len.max(1) as f64).log2() - self.degree() as f64).exp2()
    }

    /// Bit `j` of the stretched string.
    pub fn bit(&self, j: u64) -> bool {
        self.field.inner(&self.field.pow(&self.a, j), &self.b)
    }

    /// Bits `[start, start + count)`.
    pub fn materialize(&self, start: u64, count: usize) -> BitString {
        let mut out = BitString::with_capacity(count);
        let mut p = self.field.pow(&self.a, start);
        let mut tmp = self.field.zero();
        for _ in 0..count {
            out.push(self.field.inner(&p, &self.b));
            self.field.mul_into(&p, &self.a, &mut tmp);
            std::mem::swap(&mut p, &mut tmp);
        }
        out
    }

    /// `a^e`.
    pub fn pow_a(&self, e: u64) -> Elem {
        self.field.pow(&self.a, e)
    }

    /// `a^t` for `t < 64`, by table lookup.
    pub fn small_power(&self, t: usize) -> &[u64] {
        assert!(t < 64);
        self.table_entry((t / 8) * 256 + (1 << (t % 8)))
    }

    fn table_entry(&self, i: usize) -> &[u64] {
        let limbs = self.field.limbs();
        &self.tables[i * limbs..(i + 1) * limbs]
    }

    /// `Σ_{t < 64} w_t a^t`.
    pub fn word_eval(&self, w: u64) -> Elem {
        let mut acc = self.field.zero();
        self.xor_word_eval(w, &mut acc);
        acc
    }

    /// `acc += Σ_{t < 64} w_t a^t`.
    pub fn xor_word_eval(&self, w: u64, acc: &mut [u64]) {
        let limbs = self.field.limbs();
        let acc = &mut acc[..limbs];
        for j in 0..8 {
            let byte = ((w >> (8 * j)) & 0xff) as usize;
            if byte != 0 {
                let base = (j * 256 + byte) * limbs;
                for (d, s) in acc.iter_mut().zip(&self.tables[base..base + limbs]) {
                    *d ^= s;
                }
            }
        }
    }

    /// `Σ_{t < len} x_t a^t` by Horner's rule over 64-bit words.
    pub fn eval(&self, bits: &BitString, len: usize) -> Elem {
        assert!(len <= bits.len());
        let full = len / 64;
        let rem = len % 64;
        let words = bits.words();
        let mut acc = self.field.zero();
        if rem > 0 {
            self.xor_word_eval(words[full] & ((1u64 << rem) - 1), &mut acc);
        }
        let mut tmp = self.field.zero();
        let mut started = rem > 0 && !self.field.is_zero(&acc);
        for w in (0..full).rev() {
            if started {
                self.field.mul_into(&acc, &self.a64, &mut tmp);
                std::mem::swap(&mut acc, &mut tmp);
            }
            if words[w] != 0 {
                self.xor_word_eval(words[w], &mut acc);
                started = true;
            }
        }
        acc
    }

    /// `⟨a^start · poly, b⟩`: the inner product of the string whose
    /// evaluation is `poly` with the stretched bits starting at `start`.
    pub fn window_parity(&self, start_power: &[u64], poly: &[u64]) -> bool {
        self.field.inner(&self.field.mul(start_power, poly), &self.b)
    }
}

/// Cached prefix evaluations of one growing/shrinking bit string.
#[derive(Clone, Debug)]
pub struct PrefixEvals {
    /// `evals[w]` = evaluation of the first `64w` bits.
    evals: Vec<Elem>,
    /// `pows[w]` = `a^(64w)`.
    pows: Vec<Elem>,
}

impl PrefixEvals {
    pub fn new(gen: &BiasedGenerator) -> Self {
        Self {
            evals: vec![gen.field.zero()],
            pows: vec![gen.field.one()],
        }
    }

    /// Invalidates cached words at or past `bit_len`.
    pub fn truncate(&mut self, bit_len: usize) {
        self.evals.truncate(bit_len / 64 + 1);
    }

    fn ensure_pow(&mut self, gen: &BiasedGenerator, w: usize) {
        while self.pows.len() <= w {
            let next = gen.field.mul(self.pows.last().unwrap(), &gen.a64);
            self.pows.push(next);
        }
    }

    /// `a^e`.
    pub fn power(&mut self, gen: &BiasedGenerator, e: usize) -> Elem {
        self.ensure_pow(gen, e / 64);
        gen.field.mul(&self.pows[e / 64], gen.small_power(e % 64))
    }

    /// Evaluation of `bits[0, len)`; `bits` must agree with every bit seen
    /// before the last [`PrefixEvals::truncate`].
    pub fn eval_prefix(&mut self, gen: &BiasedGenerator, bits: &BitString, len: usize) -> Elem {
        let full = len / 64;
        self.ensure_pow(gen, full);
        let words = bits.words();
        while self.evals.len() <= full {
            let w = self.evals.len() - 1;
            let q = gen.word_eval(words[w]);
            let shifted = gen.field.mul(&self.pows[w], &q);
            let next = gen.field.add(&self.evals[w], &shifted);
            self.evals.push(next);
        }
        let rem = len % 64;
        if rem == 0 {
            return self.evals[full].clone();
        }
        let q = gen.word_eval(words[full] & ((1u64 << rem) - 1));
        let shifted = gen.field.mul(&self.pows[full], &q);
        gen.field.add(&self.evals[full], &shifted)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_bits(rng: &mut ChaCha8Rng, n: usize) -> BitString {
        BitString::from_bools((0..n).map(|_| rng.gen::<bool>()))
    }

    #[test]
    fn zero_seed_gives_zero_string() {
        let s = stretch(&BitString::zeros(16), 16, Bias::from_delta(1.0 / 16.0).unwrap()).unwrap();
        assert_eq!(s.bits.count_ones(), 0);
        assert_eq!(s.source_seed_len, 16);
    }

    #[test]
    fn deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let seed = random_bits(&mut rng, 40);
        let d = Bias::from_delta(0.01).unwrap();
        assert_eq!(stretch(&seed, 100, d).unwrap().bits, stretch(&seed, 100, d).unwrap().bits);
    }

    #[test]
    fn short_seed_rejected() {
        let d = Bias::from_delta(1.0 / 16.0).unwrap();
        // l = 16, δ = 1/16 → m = 8 → 16 seed bits
        assert_eq!(required_seed_len(16, d), 16);
        assert!(matches!(
            stretch(&BitString::zeros(15), 16, d),
            Err(Error::SeedTooShort { needed: 16, got: 15 })
        ));
    }

    #[test]
    fn bit_matches_materialize() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let seed = random_bits(&mut rng, 2 * 70);
        let gen = BiasedGenerator::from_seed_bits(&seed, 70, 1000).unwrap();
        let window = gen.materialize(300, 50);
        for i in 0..50 {
            assert_eq!(window.get(i), gen.bit(300 + i as u64));
        }
    }

    #[test]
    fn algebraic_window_parity_matches_literal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in [9u32, 64, 130] {
            let seed = random_bits(&mut rng, 2 * m as usize);
            let gen = BiasedGenerator::from_seed_bits(&seed, m, 4000).unwrap();
            let stretched = gen.materialize(0, 4000);
            let mut cache = PrefixEvals::new(&gen);
            let x = random_bits(&mut rng, 700);
            for &len in &[0usize, 1, 63, 64, 65, 200, 700] {
                let start = rng.gen_range(0..3000u64);
                let literal = x.slice(0, len).masked_parity(&stretched, start as usize);
                let direct = gen.window_parity(&gen.pow_a(start), &gen.eval(&x, len));
                let cached = gen.window_parity(&gen.pow_a(start), &cache.eval_prefix(&gen, &x, len));
                assert_eq!(literal, direct, "m={m} len={len}");
                assert_eq!(literal, cached, "m={m} len={len}");
            }
            assert_eq!(cache.power(&gen, 777), gen.pow_a(777));
        }
    }

    #[test]
    fn prefix_cache_survives_truncation() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let seed = random_bits(&mut rng, 200);
        let gen = BiasedGenerator::from_seed_bits(&seed, 100, 1 << 20).unwrap();
        let mut cache = PrefixEvals::new(&gen);
        let mut x = random_bits(&mut rng, 500);
        cache.eval_prefix(&gen, &x, 500);
        x.truncate(130);
        cache.truncate(130);
        x.extend_from(&random_bits(&mut rng, 300));
        assert_eq!(cache.eval_prefix(&gen, &x, 430), gen.eval(&x, 430));
    }
}
