//! Robust randomness exchange.
//!
//! Alice samples a short seed, sends it protected by an error correcting
//! code, and both parties stretch their copy into a long δ-biased string from
//! which per-iteration hash seeds are drawn.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::channel::{Channel, Phase, RoundAction};
use crate::smallbias::{self, Bias, BiasedGenerator, MAX_DEGREE};
use crate::{Error, Result};

/// Odd-factor repetition code, each bit repeated `factor` times in a block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RepetitionCode {
    factor: usize,
}

impl RepetitionCode {
    pub fn new(factor: usize) -> Result<Self> {
        if factor.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!("repetition factor {factor} must be odd")));
        }
        Ok(Self { factor })
    }

    /// Factor `4⌊nε⌋ + 1`, so `2⌊nε⌋` flips anywhere are always corrected.
    pub fn for_budget(n: usize, eps: f64) -> Self {
        Self {
            factor: 4 * floor_n_eps(n, eps) as usize + 1,
        }
    }

    pub fn factor(&self) -> usize {
        self.factor
    }

    pub fn min_distance(&self) -> usize {
        self.factor
    }

    pub fn codeword_len(&self, message_len: usize) -> usize {
        message_len * self.factor
    }

    pub fn encode(&self, message: &BitString) -> BitString {
        let mut out = BitString::with_capacity(self.codeword_len(message.len()));
        for b in message.iter() {
            for _ in 0..self.factor {
                out.push(b);
            }
        }
        out
    }

    /// Per-block majority.
    pub fn decode(&self, codeword: &BitString) -> BitString {
        assert_eq!(codeword.len() % self.factor, 0);
        let blocks = codeword.len() / self.factor;
        BitString::from_bools((0..blocks).map(|i| {
            let ones = (0..self.factor).filter(|&j| codeword.get(i * self.factor + j)).count();
            2 * ones > self.factor
        }))
    }

    /// Codeword position sent in transmission slot `t`: copy `t / l′` of
    /// message bit `t mod l′`, so a burst touches many blocks once each.
    pub fn interleaved_position(&self, message_len: usize, t: usize) -> usize {
        (t % message_len) * self.factor + t / message_len
    }
}

pub fn floor_n_eps(n: usize, eps: f64) -> u64 {
    (n as f64 * eps + 1e-9).floor() as u64
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExchangeMode {
    /// Interleaved repetition code over the channel.
    Repetition,
    /// Charges `⌈4(l′ + nH(ε))⌉` rounds; Bob gets the seed intact unless the
    /// adversary corrupts more than `2nε` of them.
    Ideal,
    /// Pre-agreed seed the adversary never sees; no rounds.
    Hidden,
}

impl ExchangeMode {
    pub const ALL: [ExchangeMode; 3] = [ExchangeMode::Repetition, ExchangeMode::Ideal, ExchangeMode::Hidden];

    pub fn name(self) -> &'static str {
        match self {
            ExchangeMode::Repetition => "repetition",
            ExchangeMode::Ideal => "ideal",
            ExchangeMode::Hidden => "hidden",
        }
    }

    /// Whether the adversary sees the seed on the wire.
    pub fn is_exposed(self) -> bool {
        self != ExchangeMode::Hidden
    }
}

impl fmt::Display for ExchangeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExchangeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExchangeMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown exchange mode {s:?}")))
    }
}

/// Sizes of one exchange, fixed before the run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExchangePlan {
    pub mode: ExchangeMode,
    /// Length of the stretched string.
    pub target_len: u64,
    /// Field degree; the seed is `2m` bits.
    pub degree: u32,
    /// Requested bias as `log₂(1/δ)`.
    pub requested_log2_inv_delta: f64,
    /// Achieved bias `l / 2^m` as `log₂(1/δ)`.
    pub effective_log2_inv_delta: f64,
    pub rounds: u64,
    pub repetition: Option<RepetitionCode>,
    /// Corruptions inside the exchange the ideal mode tolerates.
    pub tolerance: u64,
}

impl ExchangePlan {
    pub fn new(mode: ExchangeMode, target_len: u64, delta: Bias, n: usize, eps: f64) -> Self {
        let degree = smallbias::required_degree(target_len, delta).min(MAX_DEGREE);
        let seed_len = 2 * degree as u64;
        let code = RepetitionCode::for_budget(n, eps);
        let rounds = match mode {
            ExchangeMode::Repetition => code.codeword_len(seed_len as usize) as u64,
            ExchangeMode::Ideal => (4.0 * (seed_len as f64 + n as f64 * binary_entropy(eps)) - 1e-9).ceil() as u64,
            ExchangeMode::Hidden => 0,
        };
        Self {
            mode,
            target_len,
            degree,
            requested_log2_inv_delta: delta.log2_inv(),
            effective_log2_inv_delta: degree as f64 - (target_len.max(1) as f64).log2(),
            rounds,
            repetition: (mode == ExchangeMode::Repetition).then_some(code),
            tolerance: 2 * floor_n_eps(n, eps),
        }
    }

    pub fn seed_len(&self) -> usize {
        2 * self.degree as usize
    }

    /// Uniform seed with a nonzero generator element.
    pub fn sample_seed(&self, rng: &mut ChaCha8Rng) -> BitString {
        let m = self.degree as usize;
        loop {
            let seed = BitString::from_bools((0..2 * m).map(|_| rng.gen::<bool>()));
            if seed.slice(0, m).count_ones() > 0 {
                return seed;
            }
        }
    }
}

/// One party's copy of the stretched string and its read cursor.
#[derive(Clone, Debug)]
pub struct SharedRandomness {
    gen: BiasedGenerator,
    cursor: u64,
}

impl SharedRandomness {
    pub fn from_seed(seed: &BitString, degree: u32, len: u64) -> Result<Self> {
        Ok(Self {
            gen: BiasedGenerator::from_seed_bits(seed, degree, len)?,
            cursor: 0,
        })
    }

    pub fn generator(&self) -> &BiasedGenerator {
        &self.gen
    }

    pub fn cursor(&self) -> u64 {
        self.cursor
    }

    pub fn len(&self) -> u64 {
        self.gen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gen.len() == 0
    }

    /// Reserves the next `s` bits and returns the index of the first.
    pub fn next_seed(&mut self, s: u64) -> Result<u64> {
        if self.cursor + s > self.gen.len() {
            return Err(Error::RandomnessExhausted {
                cursor: self.cursor,
                requested: s,
                len: self.gen.len(),
            });
        }
        let start = self.cursor;
        self.cursor += s;
        Ok(start)
    }

    /// Like [`SharedRandomness::next_seed`] but materialises the bits.
    pub fn next_seed_bits(&mut self, s: usize) -> Result<BitString> {
        let start = self.next_seed(s as u64)?;
        Ok(self.gen.materialize(start, s))
    }
}

/// Both parties' copies after an exchange.
#[derive(Clone, Debug)]
pub struct ExchangeOutcome {
    pub alice: SharedRandomness,
    pub bob: SharedRandomness,
    pub alice_seed: BitString,
    pub bob_seed: BitString,
    pub corruptions: u64,
}

impl ExchangeOutcome {
    pub fn agreed(&self) -> bool {
        self.alice_seed == self.bob_seed
    }
}

/// Runs the exchange over `channel`; `seed` is Alice's sample.
pub fn exchange(plan: &ExchangePlan, seed: &BitString, channel: &mut Channel) -> Result<ExchangeOutcome> {
    let l = seed.len();
    let before = channel.corruptions();
    let bob_seed = match plan.mode {
        ExchangeMode::Hidden => seed.clone(),
        ExchangeMode::Repetition => {
            let code = plan.repetition.expect("repetition plan");
            let word = code.encode(seed);
            let mut received = BitString::zeros(word.len());
            for t in 0..word.len() {
                let pos = code.interleaved_position(l, t);
                let bit = word.get(pos) as u64;
                let e = channel.transmit(RoundAction::Send(bit), RoundAction::Listen, Phase::Exchange, None)?;
                received.set(pos, e.delivered_to_bob == Some(1));
            }
            code.decode(&received)
        }
        ExchangeMode::Ideal => {
            let mut ones = vec![0u32; l];
            let mut copies = vec![0u32; l];
            for t in 0..plan.rounds as usize {
                let i = t % l;
                let bit = seed.get(i) as u64;
                let e = channel.transmit(RoundAction::Send(bit), RoundAction::Listen, Phase::Exchange, None)?;
                copies[i] += 1;
                ones[i] += u32::from(e.delivered_to_bob == Some(1));
            }
            if channel.corruptions() - before <= plan.tolerance {
                seed.clone()
            } else {
                BitString::from_bools((0..l).map(|i| 2 * ones[i] > copies[i]))
            }
        }
    };
    Ok(ExchangeOutcome {
        alice: SharedRandomness::from_seed(seed, plan.degree, plan.target_len)?,
        bob: SharedRandomness::from_seed(&bob_seed, plan.degree, plan.target_len)?,
        alice_seed: seed.clone(),
        bob_seed,
        corruptions: channel.corruptions() - before,
    })
}

/// Fresh deterministic generator for per-run randomness streams.
pub fn rng_for(master: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{Noiseless, Oblivious};
    use crate::protocol::Alphabet;

    #[test]
    fn repetition_definition() {
        let code = RepetitionCode::new(3).unwrap();
        let w = code.encode(&BitString::parse("10").unwrap());
        assert_eq!(w.to_string(), "111000");
        assert_eq!(code.decode(&BitString::parse("101001").unwrap()).to_string(), "10");
        assert!(RepetitionCode::new(4).is_err());
        assert_eq!(RepetitionCode::for_budget(8192, 0.002).factor(), 65);
    }

    #[test]
    fn interleaving_is_a_permutation() {
        let code = RepetitionCode::new(5).unwrap();
        let mut seen: Vec<usize> = (0..35).map(|t| code.interleaved_position(7, t)).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..35).collect::<Vec<_>>());
    }

    #[test]
    fn monte_carlo_two_flips_per_block() {
        let code = RepetitionCode::new(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let msg = BitString::from_u64(rng.gen(), 64);
            let mut w = code.encode(&msg);
            for block in 0..64 {
                let a = rng.gen_range(0..5);
                let b = (a + rng.gen_range(1..5)) % 5;
                for j in [a, b] {
                    let p = block * 5 + j;
                    w.set(p, !w.get(p));
                }
            }
            assert_eq!(code.decode(&w), msg);
        }
    }

    #[test]
    fn cursor_windows_are_disjoint() {
        let seed = BitString::from_u64(0xdead_beef_1234, 48);
        let mut sr = SharedRandomness::from_seed(&seed, 24, 100).unwrap();
        assert_eq!(sr.next_seed(40).unwrap(), 0);
        assert_eq!(sr.next_seed(40).unwrap(), 40);
        assert!(matches!(sr.next_seed(40), Err(Error::RandomnessExhausted { .. })));
        assert_eq!(sr.cursor(), 80);
    }

    #[test]
    fn noiseless_exchange_agrees() {
        for mode in ExchangeMode::ALL {
            let plan = ExchangePlan::new(mode, 10_000, Bias::pow2(20.0), 256, 0.01);
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let seed = plan.sample_seed(&mut rng);
            let mut ch = Channel::new(Box::new(Noiseless), 0.01, plan.rounds.max(1), Alphabet::BINARY, false);
            let out = exchange(&plan, &seed, &mut ch).unwrap();
            assert!(out.agreed());
            assert_eq!(ch.round(), plan.rounds);
            assert_eq!(
                out.alice.generator().materialize(0, 64),
                out.bob.generator().materialize(0, 64)
            );
        }
    }

    #[test]
    fn burst_inside_repetition_exchange_is_harmless() {
        let plan = ExchangePlan::new(ExchangeMode::Repetition, 1 << 20, Bias::pow2(40.0), 2048, 0.004);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let seed = plan.sample_seed(&mut rng);
        // a burst far larger than 2⌊nε⌋, spread thin by the interleaver
        let plan_rounds: Vec<(u64, u64)> = (100..100 + plan.seed_len() as u64 * 4).map(|r| (r, 1)).collect();
        let mut ch = Channel::new(Box::new(Oblivious::fixed(plan_rounds)), 1.0, plan.rounds, Alphabet::BINARY, false);
        let out = exchange(&plan, &seed, &mut ch).unwrap();
        assert!(out.corruptions > 2 * 8);
        assert!(out.agreed());
    }

    #[test]
    fn ideal_exchange_breaks_past_tolerance() {
        let plan = ExchangePlan::new(ExchangeMode::Ideal, 1 << 12, Bias::pow2(8.0), 100, 0.02);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let seed = plan.sample_seed(&mut rng);
        let flips: Vec<(u64, u64)> = (0..plan.rounds).map(|r| (r, 1)).collect();
        let mut ch = Channel::new(Box::new(Oblivious::fixed(flips)), 1.0, plan.rounds, Alphabet::BINARY, false);
        let out = exchange(&plan, &seed, &mut ch).unwrap();
        assert!(!out.agreed());
    }

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.5), 1.0);
        assert!((binary_entropy(0.11) - 0.4999).abs() < 1e-3);
    }
}
