//! Inner product hashing and the short-seed hash family built on it.
//!
//! The inner product hash appends the input length to the input and outputs
//! `o` parities of the extended string against disjoint seed windows of width
//! `2L`. With a uniform seed two distinct inputs collide with probability
//! exactly `2^−o`; with a δ-biased seed the probability is at most `2^−o + δ`.
//!
//! The short-seed family stretches an `s`-bit seed with
//! [`crate::smallbias`] and hashes with the stretched string, so the
//! collision probability is at most `2^−o + 2oL/2^(s/2)`.

use std::fmt;

use serde::Serialize;

use crate::bits::{ceil_log2, BitString};
use crate::smallbias::{self, BiasedGenerator, Elem, Field, MAX_DEGREE};
use crate::{Error, Result};

/// Input cap `L` and output length `o` of an inner product hash.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct InnerProductHashSpec {
    input_cap: usize,
    output_len: usize,
}

impl InnerProductHashSpec {
    pub fn new(input_cap: usize, output_len: usize) -> Result<Self> {
        if input_cap == 0 {
            return Err(Error::InvalidParameter("hash input cap must be positive".into()));
        }
        if !(1..=MAX_OUTPUT_BITS).contains(&output_len) {
            return Err(Error::InvalidParameter(format!(
                "hash output length {output_len} outside 1..={MAX_OUTPUT_BITS}"
            )));
        }
        Ok(Self {
            input_cap,
            output_len,
        })
    }

    pub fn input_cap(&self) -> usize {
        self.input_cap
    }

    pub fn output_len(&self) -> usize {
        self.output_len
    }

    /// `2·o·L`.
    pub fn required_seed_len(&self) -> usize {
        2 * self.output_len * self.input_cap
    }

    pub fn window_width(&self) -> usize {
        2 * self.input_cap
    }

    /// Fixed width of the appended length field, `⌈log₂(L+1)⌉` (at least one bit).
    pub fn len_field_bits(&self) -> usize {
        (ceil_log2(self.input_cap as u64 + 1) as usize).max(1)
    }

    /// `x ∥ binary(|x|)`.
    pub fn extend_input(&self, x: &BitString) -> Result<BitString> {
        if x.len() > self.input_cap {
            return Err(Error::InputTooLong {
                len: x.len(),
                cap: self.input_cap,
            });
        }
        let mut out = x.clone();
        out.push_bits(x.len() as u64, self.len_field_bits());
        Ok(out)
    }
}

/// Longest supported hash output.
pub const MAX_OUTPUT_BITS: usize = 128;

/// An `o`-bit hash output.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct HashValue {
    bits: u128,
    len: u8,
}

impl HashValue {
    pub fn new(bits: u128, len: usize) -> Self {
        assert!((1..=MAX_OUTPUT_BITS).contains(&len));
        let bits = if len == 128 { bits } else { bits & ((1 << len) - 1) };
        Self {
            bits,
            len: len as u8,
        }
    }

    pub fn bits(&self) -> u128 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn to_bitstring(&self) -> BitString {
        let mut out = BitString::from_u64(self.bits as u64, self.len().min(64));
        if self.len() > 64 {
            out.push_bits((self.bits >> 64) as u64, self.len() - 64);
        }
        out
    }
}

impl fmt::Debug for HashValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HashValue({:0width$b})", self.bits, width = self.len())
    }
}

/// Inner product hash of `x` under an explicit seed.
pub fn ip_hash(spec: &InnerProductHashSpec, seed: &BitString, x: &BitString) -> Result<HashValue> {
    if seed.len() < spec.required_seed_len() {
        return Err(Error::SeedTooShort {
            needed: spec.required_seed_len(),
            got: seed.len(),
        });
    }
    let ext = spec.extend_input(x)?;
    let mut out = 0u128;
    for i in 0..spec.output_len {
        if ext.masked_parity(seed, i * spec.window_width()) {
            out |= 1 << i;
        }
    }
    Ok(HashValue::new(out, spec.output_len))
}

/// Evaluation `Σ x̃_t a^t` of the length-extended input, given the
/// evaluation of `x` itself and `a^|x|`.
pub fn extended_eval(
    gen: &BiasedGenerator,
    spec: &InnerProductHashSpec,
    x_eval: &[u64],
    x_len: usize,
    a_pow_len: &[u64],
) -> Elem {
    let field = gen.field();
    debug_assert!(x_len <= spec.input_cap);
    let tail = gen.word_eval(x_len as u64);
    // the length field is at most 64 bits wide for any cap we accept
    debug_assert!(spec.len_field_bits() <= 64);
    field.add(x_eval, &field.mul(a_pow_len, &tail))
}

/// Inner product hash against the window of `gen`'s string starting at the
/// bit whose power `a^start` is `start_pow`; `step_pow` is `a^(2L)`.
pub fn ip_hash_from_eval(
    gen: &BiasedGenerator,
    spec: &InnerProductHashSpec,
    start_pow: &[u64],
    step_pow: &[u64],
    ext_eval: &[u64],
) -> HashValue {
    let field = gen.field();
    let mut base = field.mul(start_pow, ext_eval);
    let mut tmp = field.zero();
    let (_, b) = gen.seed();
    let mut out = 0u128;
    for i in 0..spec.output_len {
        if i > 0 {
            field.mul_into(&base, step_pow, &mut tmp);
            std::mem::swap(&mut base, &mut tmp);
        }
        if field.inner(&base, b) {
            out |= 1 << i;
        }
    }
    HashValue::new(out, spec.output_len)
}

/// Parameters of the short-seed hash family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NnHashParams {
    collision_prob: f64,
    output_len: usize,
    seed_len: usize,
    input_cap: usize,
}

impl NnHashParams {
    /// Explicit sizes. Rejects `o < ⌈log₂(1/p)⌉`, odd or oversized seeds,
    /// and empty inputs caps.
    pub fn new(collision_prob: f64, output_len: usize, seed_len: usize, input_cap: usize) -> Result<Self> {
        if !(collision_prob > 0.0 && collision_prob < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "collision probability {collision_prob} outside (0, 1)"
            )));
        }
        let min_o = (-collision_prob.log2() - 1e-9).ceil() as usize;
        if output_len < min_o {
            return Err(Error::InvalidParameter(format!(
                "output length {output_len} below ⌈log₂(1/p)⌉ = {min_o}"
            )));
        }
        if seed_len < 2 || !seed_len.is_multiple_of(2) || seed_len / 2 > MAX_DEGREE as usize {
            return Err(Error::InvalidParameter(format!("seed length {seed_len} must be even, 2..={}", 2 * MAX_DEGREE)));
        }
        InnerProductHashSpec::new(input_cap, output_len)?;
        Ok(Self {
            collision_prob,
            output_len,
            seed_len,
            input_cap,
        })
    }

    /// `o = ⌈log₂(1/p)⌉`, `s = 4·(⌈log₂ L⌉ + ⌈log₂(1/p)⌉)`.
    pub fn recommended(collision_prob: f64, input_cap: usize) -> Result<Self> {
        let o = (-collision_prob.log2() - 1e-9).ceil().max(1.0) as usize;
        let s = 4 * (ceil_log2(input_cap as u64) as usize + o);
        Self::new(collision_prob, o, s, input_cap)
    }

    /// Output length `o` with the shortest seed for which
    /// `2^−o + 2oL/2^(s/2) ≤ p`.
    pub fn for_bound(collision_prob: f64, output_len: usize, input_cap: usize) -> Result<Self> {
        let slack = collision_prob - (-(output_len as f64)).exp2();
        if slack <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "2^-{output_len} already exceeds p = {collision_prob}"
            )));
        }
        let l = (2 * output_len * input_cap) as f64;
        let m = ((l / slack).log2() - 1e-9).ceil().max(1.0) as usize;
        Self::new(collision_prob, output_len, 2 * m, input_cap)
    }

    pub fn collision_prob(&self) -> f64 {
        self.collision_prob
    }

    pub fn output_len(&self) -> usize {
        self.output_len
    }

    pub fn seed_len(&self) -> usize {
        self.seed_len
    }

    pub fn input_cap(&self) -> usize {
        self.input_cap
    }

    pub fn degree(&self) -> u32 {
        (self.seed_len / 2) as u32
    }

    pub fn ip_spec(&self) -> InnerProductHashSpec {
        InnerProductHashSpec::new(self.input_cap, self.output_len).expect("validated")
    }

    /// Bias of the stretched seed, `2oL / 2^(s/2)`.
    pub fn effective_bias(&self) -> f64 {
        ((self.ip_spec().required_seed_len() as f64).log2() - self.degree() as f64).exp2()
    }

    /// `2^−o + δ`.
    pub fn collision_bound(&self) -> f64 {
        (-(self.output_len as f64)).exp2() + self.effective_bias()
    }
}

/// Short-seed hash of `x`: inner product hash under the stretched seed.
pub fn nn_hash(params: &NnHashParams, seed: &BitString, x: &BitString) -> Result<HashValue> {
    if seed.len() < params.seed_len {
        return Err(Error::SeedTooShort {
            needed: params.seed_len,
            got: seed.len(),
        });
    }
    let spec = params.ip_spec();
    let stretched = smallbias::stretch_with_degree(seed, params.degree(), spec.required_seed_len())?;
    ip_hash(&spec, &stretched, x)
}

/// One seeded member of the short-seed family, evaluated algebraically so
/// long inputs cost `O(|x|/64)` field operations.
#[derive(Clone, Debug)]
pub struct NnHasher {
    spec: InnerProductHashSpec,
    gen: BiasedGenerator,
    step: Elem,
}

impl NnHasher {
    pub fn new(params: &NnHashParams, seed: &BitString) -> Result<Self> {
        if seed.len() < params.seed_len {
            return Err(Error::SeedTooShort {
                needed: params.seed_len,
                got: seed.len(),
            });
        }
        let spec = params.ip_spec();
        let gen = BiasedGenerator::from_seed_bits(seed, params.degree(), spec.required_seed_len() as u64)?;
        let step = gen.pow_a(spec.window_width() as u64);
        Ok(Self { spec, gen, step })
    }

    /// Hash of the first `len` bits of `x`.
    pub fn hash_prefix(&self, x: &BitString, len: usize) -> Result<HashValue> {
        if len > self.spec.input_cap() {
            return Err(Error::InputTooLong {
                len,
                cap: self.spec.input_cap(),
            });
        }
        let eval = self.gen.eval(x, len);
        let a_len = self.gen.pow_a(len as u64);
        let ext = extended_eval(&self.gen, &self.spec, &eval, len, &a_len);
        Ok(ip_hash_from_eval(&self.gen, &self.spec, &self.gen.field().one(), &self.step, &ext))
    }

    pub fn hash(&self, x: &BitString) -> Result<HashValue> {
        self.hash_prefix(x, x.len())
    }
}

/// Which hash the collision oracle enumerates seeds for.
#[derive(Clone, Copy, Debug)]
pub enum HashKind {
    /// Inner product hash under every uniform seed of `2oL` bits.
    UniformIp(InnerProductHashSpec),
    /// Inner product hash under every stretched seed `(a, b) ∈ GF(2^m)²`, `a ≠ 0`.
    BiasedIp { spec: InnerProductHashSpec, degree: u32 },
    /// Short-seed family over every seed with `a ≠ 0`.
    Nn(NnHashParams),
}

/// Exact collision count over an enumerated seed space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CollisionFraction {
    pub collisions: u64,
    pub seeds: u64,
}

impl CollisionFraction {
    pub fn value(&self) -> f64 {
        self.collisions as f64 / self.seeds as f64
    }
}

/// Largest enumerable seed space, in bits.
pub const MAX_ORACLE_SEED_BITS: usize = 24;

/// Exact fraction of seeds under which `x` and `y` hash equally.
pub fn collision_prob_oracle(kind: HashKind, x: &BitString, y: &BitString) -> Result<CollisionFraction> {
    let (spec, seed_bits) = match kind {
        HashKind::UniformIp(spec) => (spec, spec.required_seed_len()),
        HashKind::BiasedIp { spec, degree } => (spec, 2 * degree as usize),
        HashKind::Nn(p) => (p.ip_spec(), p.seed_len()),
    };
    if seed_bits > MAX_ORACLE_SEED_BITS {
        return Err(Error::SeedSpaceTooLarge { bits: seed_bits });
    }
    let xe = spec.extend_input(x)?;
    let ye = spec.extend_input(y)?;
    let width = spec.window_width();
    let o = spec.output_len();
    if width > 64 || spec.required_seed_len() > 64 * 64 {
        return Err(Error::InvalidParameter("oracle supports L ≤ 32".into()));
    }
    let diff = xe.read_bits(0, xe.len()) ^ ye.read_bits(0, ye.len());
    let window_mask = if width == 64 { u64::MAX } else { (1u64 << width) - 1 };
    // collision iff every window has even overlap with the difference
    let collides = |windows: &dyn Fn(usize) -> u64| (0..o).all(|i| (diff & windows(i) & window_mask).count_ones().is_multiple_of(2));
    let mut collisions = 0u64;
    let mut seeds = 0u64;
    match kind {
        HashKind::UniformIp(_) => {
            let total = spec.required_seed_len();
            for s in 0..(1u64 << total) {
                seeds += 1;
                if collides(&|i| s >> (i * width)) {
                    collisions += 1;
                }
            }
        }
        HashKind::BiasedIp { .. } | HashKind::Nn(_) => {
            let degree = (seed_bits / 2) as u32;
            let field = Field::for_degree(degree)?;
            let l = spec.required_seed_len();
            let size = 1u64 << degree;
            let mut powers = Vec::with_capacity(l);
            for a in 1..size {
                powers.clear();
                let mut p = field.one();
                for _ in 0..l {
                    powers.push(p[0]);
                    p = field.mul(&p, &[a]);
                }
                for b in 0..size {
                    let mut windows = vec![0u64; o];
                    for (i, &pw) in powers.iter().enumerate() {
                        if (pw & b).count_ones() % 2 == 1 {
                            windows[i / width] |= 1 << (i % width);
                        }
                    }
                    seeds += 1;
                    if collides(&|i| windows[i]) {
                        collisions += 1;
                    }
                }
            }
        }
    }
    Ok(CollisionFraction { collisions, seeds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_bits(rng: &mut ChaCha8Rng, n: usize) -> BitString {
        BitString::from_bools((0..n).map(|_| rng.gen::<bool>()))
    }

    #[test]
    fn zero_seed_hashes_to_zero() {
        let spec = InnerProductHashSpec::new(6, 2).unwrap();
        let seed = BitString::zeros(spec.required_seed_len());
        for v in 0..64u64 {
            let x = BitString::from_u64(v, 6);
            assert_eq!(ip_hash(&spec, &seed, &x).unwrap().bits(), 0);
        }
    }

    #[test]
    fn spec_sizes() {
        let spec = InnerProductHashSpec::new(6, 2).unwrap();
        assert_eq!(spec.required_seed_len(), 24);
        assert_eq!(spec.len_field_bits(), 3);
        let empty = spec.extend_input(&BitString::new()).unwrap();
        assert_eq!(empty.len(), 3);
        assert_eq!(empty.count_ones(), 0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let spec = InnerProductHashSpec::new(6, 2).unwrap();
        assert!(matches!(
            ip_hash(&spec, &BitString::zeros(24), &BitString::zeros(7)),
            Err(Error::InputTooLong { .. })
        ));
        assert!(matches!(
            ip_hash(&spec, &BitString::zeros(23), &BitString::zeros(3)),
            Err(Error::SeedTooShort { .. })
        ));
        assert!(NnHashParams::new(0.25, 1, 16, 8).is_err());
        assert!(NnHashParams::new(0.25, 3, 15, 8).is_err());
        assert!(NnHashParams::new(1.5, 3, 16, 8).is_err());
    }

    #[test]
    fn recommended_params_follow_formula() {
        let p = NnHashParams::recommended(1.0 / 64.0, 1000).unwrap();
        assert_eq!(p.output_len(), 6);
        assert_eq!(p.seed_len(), 4 * (10 + 6));
        let b = NnHashParams::for_bound(0.1, 6, 10).unwrap();
        assert!(b.collision_bound() <= 0.1);
    }

    #[test]
    fn equal_inputs_always_collide() {
        let spec = InnerProductHashSpec::new(5, 2).unwrap();
        let x = BitString::parse("1011").unwrap();
        let f = collision_prob_oracle(HashKind::UniformIp(spec), &x, &x).unwrap();
        assert_eq!(f.collisions, f.seeds);
        let p = NnHashParams::new(0.25, 3, 12, 8).unwrap();
        let f = collision_prob_oracle(HashKind::Nn(p), &x, &x).unwrap();
        assert_eq!(f.collisions, f.seeds);
    }

    #[test]
    fn oracle_rejects_large_spaces() {
        let spec = InnerProductHashSpec::new(16, 2).unwrap();
        assert!(matches!(
            collision_prob_oracle(HashKind::UniformIp(spec), &BitString::new(), &BitString::new()),
            Err(Error::SeedSpaceTooLarge { bits: 64 })
        ));
    }

    #[test]
    fn prefix_is_length_bound() {
        // x a strict prefix of y: the length field separates them
        let spec = InnerProductHashSpec::new(6, 2).unwrap();
        let y = BitString::parse("000000").unwrap();
        for cut in 0..6 {
            let x = y.slice(0, cut);
            let f = collision_prob_oracle(HashKind::UniformIp(spec), &x, &y).unwrap();
            assert!(f.value() <= 0.25 + 1e-12, "cut {cut}: {}", f.value());
        }
    }

    #[test]
    fn algebraic_hasher_matches_literal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for &(cap, o) in &[(40usize, 3usize), (300, 7), (1000, 20)] {
            let params = NnHashParams::for_bound(0.9 * (0.5f64).powi(o as i32 - 1), o, cap).unwrap();
            for _ in 0..5 {
                let seed = rand_bits(&mut rng, params.seed_len());
                let hasher = NnHasher::new(&params, &seed).unwrap();
                let len = rng.gen_range(0..=cap);
                let x = rand_bits(&mut rng, len);
                assert_eq!(hasher.hash(&x).unwrap(), nn_hash(&params, &seed, &x).unwrap());
            }
        }
    }

    #[test]
    fn nn_hash_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let params = NnHashParams::new(0.25, 3, 16, 8).unwrap();
        let seed = rand_bits(&mut rng, 16);
        let x = rand_bits(&mut rng, 8);
        assert_eq!(nn_hash(&params, &seed, &x).unwrap(), nn_hash(&params, &seed, &x).unwrap());
    }
}
