//! The three coding schemes and their shared iteration logic.
//!
//! * [`Scheme::A1`]: large alphabet, fresh private hash seed per iteration,
//!   roll back one block whenever hashes disagree and the own transcript is
//!   not shorter.
//! * [`Scheme::A3`]: binary alphabet, shared δ-biased hash seeds, meeting
//!   point backtracking driven by the status counters `k, E, v1, v2`.
//! * [`Scheme::A4`]: as A3, with every hash post-processed by a short-seed
//!   hash whose seed is fresh per iteration and sent along with the hashes.
//!
//! Every iteration has the same layout: a verification phase in which Alice
//! sends `r_c` symbols and then Bob sends `r_c`, followed by `r` computation
//! rounds.

mod engine;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use engine::{run_simulation, RunInputs, SimulationResult};

use crate::analysis::PotentialConstants;
use crate::analysis::Vote;
use crate::bits::{ceil_log2, BitString};
use crate::hashing::{HashValue, InnerProductHashSpec, NnHashParams};
use crate::protocol::{Alphabet, Symbol};
use crate::randex::{ExchangeMode, ExchangePlan};
use crate::smallbias::{self, Bias};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    A1,
    A3,
    A4,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::A1, Scheme::A3, Scheme::A4];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::A1 => "a1",
            Scheme::A3 => "a3",
            Scheme::A4 => "a4",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown scheme {s:?}")))
    }
}

/// Overrides for the scheme constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    /// Hash output bits for A3 and the second layer of A4.
    pub hash_bits: usize,
    /// Slack iterations per unit of `nε`: 32 for A1, 65 for A3 and A4 when unset.
    pub slack: Option<f64>,
    /// Collision probability of the second A4 layer.
    pub p2: f64,
    /// Meeting-point vote threshold as a fraction of `k̃`.
    pub vote_threshold: f64,
    pub potential: PotentialConstants,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            hash_bits: 6,
            slack: None,
            p2: 0.1,
            vote_threshold: 0.4,
            potential: PotentialConstants::default(),
        }
    }
}

/// Hash sizes of one scheme instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum HashLayout {
    /// Short-seed hash of the transcript under a fresh private seed, plus
    /// the transcript length in `len_bits` bits.
    A1 { params: NnHashParams, len_bits: usize },
    /// Inner product hash with shared seeds.
    A3 { spec: InnerProductHashSpec },
    /// Inner product hash with shared seeds, then a short-seed hash.
    A4 { spec1: InnerProductHashSpec, params2: NnHashParams },
}

impl HashLayout {
    /// Shared seed bits consumed per iteration.
    pub fn shared_seed_len(&self) -> u64 {
        match self {
            HashLayout::A1 { .. } => 0,
            HashLayout::A3 { spec } => spec.required_seed_len() as u64,
            HashLayout::A4 { spec1, .. } => spec1.required_seed_len() as u64,
        }
    }

    /// Payload bits one party sends per verification phase.
    pub fn message_bits(&self) -> usize {
        match self {
            HashLayout::A1 { params, len_bits } => params.seed_len() + params.output_len() + len_bits,
            HashLayout::A3 { spec } => 4 * spec.output_len(),
            HashLayout::A4 { params2, .. } => params2.seed_len() + 4 * params2.output_len(),
        }
    }
}

/// Every size of one run, fixed before round 0.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SchemeParams {
    pub scheme: Scheme,
    pub n: usize,
    pub eps: f64,
    pub alphabet: Alphabet,
    /// Computation rounds per iteration.
    pub r: usize,
    /// Verification symbols per direction.
    pub r_c: usize,
    pub r_total: u64,
    /// `R_total · r`, the padded protocol length.
    pub padded_len: usize,
    pub hash: HashLayout,
    pub exchange: Option<ExchangePlan>,
    pub iteration_rounds: u64,
    pub total_rounds: u64,
    pub slack: f64,
    pub config: SchemeConfig,
}

fn ceil_tol(x: f64) -> u64 {
    (x - 1e-9).ceil().max(0.0) as u64
}

/// `⌈√(r_c/ε)⌉`.
pub fn block_len(r_c: usize, eps: f64) -> usize {
    ceil_tol((r_c as f64 / eps).sqrt()) as usize
}

impl SchemeParams {
    pub fn new(scheme: Scheme, n: usize, eps: f64, mode: ExchangeMode, config: &SchemeConfig) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("protocol length must be positive".into()));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter(format!("ε = {eps} outside (0, 1)")));
        }
        let p = match scheme {
            Scheme::A1 => Self::a1(n, eps, config)?,
            Scheme::A3 | Scheme::A4 => Self::shared(scheme, n, eps, mode, config)?,
        };
        if p.r < 2 {
            return Err(Error::InvalidParameter(format!("ε = {eps} too large: block length {} < 2", p.r)));
        }
        Ok(p)
    }

    fn a1(n: usize, eps: f64, config: &SchemeConfig) -> Result<Self> {
        let log_n = (n as f64).log2();
        let bits = ceil_log2(n as u64).max(1);
        let alphabet = Alphabet::new(bits)?;
        let o = ceil_tol(5.0 * log_n).max(1) as usize;
        let p = (-(o as f64)).exp2();
        let slack = config.slack.unwrap_or(32.0);
        let mut r_c = 3usize;
        for _ in 0..64 {
            let r = block_len(r_c, eps);
            let r_total = ceil_tol(n as f64 / r as f64 + slack * n as f64 * eps);
            let padded = r_total as usize * r;
            let cap = padded * bits as usize;
            let len_bits = (ceil_log2(padded as u64 + 1) as usize).max(1);
            let l = 2 * o as u64 * cap as u64;
            let m = smallbias::required_degree(l, Bias::pow2(o as f64 + 1.0));
            let params = NnHashParams::new(p, o, 2 * m as usize, cap)?;
            let hash = HashLayout::A1 { params, len_bits };
            let need = hash.message_bits().div_ceil(bits as usize);
            if need <= r_c {
                let iteration_rounds = (r + 2 * r_c) as u64;
                return Ok(Self {
                    scheme: Scheme::A1,
                    n,
                    eps,
                    alphabet,
                    r,
                    r_c,
                    r_total,
                    padded_len: padded,
                    hash,
                    exchange: None,
                    iteration_rounds,
                    total_rounds: r_total * iteration_rounds,
                    slack,
                    config: *config,
                });
            }
            r_c = need;
        }
        Err(Error::InvalidParameter("verification size did not converge".into()))
    }

    fn shared(scheme: Scheme, n: usize, eps: f64, mode: ExchangeMode, config: &SchemeConfig) -> Result<Self> {
        let slack = config.slack.unwrap_or(65.0);
        let o = config.hash_bits;
        let (r_c, params2) = match scheme {
            Scheme::A3 => (4 * o, None),
            _ => {
                let o1 = ceil_tol((1.0 / eps).log2()).max(1) as usize;
                let cap2 = o1;
                let m2 = smallbias::required_degree((2 * o * cap2) as u64, Bias::from_delta(config.p2 / 2.0)?);
                let params2 = NnHashParams::new(config.p2, o, 2 * m2 as usize, cap2)?;
                (params2.seed_len() + 4 * o, Some((o1, params2)))
            }
        };
        let r = block_len(r_c, eps);
        let nf = n as f64;
        let r_total = match scheme {
            Scheme::A3 => ceil_tol(nf / r as f64 + slack * nf * eps),
            _ => ceil_tol(nf / r as f64) + ceil_tol(slack * nf * eps),
        };
        let padded = r_total as usize * r;
        let cap = padded.max(64);
        let (hash, log2_inv_delta) = match params2 {
            None => (
                HashLayout::A3 {
                    spec: InnerProductHashSpec::new(cap, o)?,
                },
                ceil_tol(nf / r as f64 * o as f64) as f64,
            ),
            Some((o1, params2)) => (
                HashLayout::A4 {
                    spec1: InnerProductHashSpec::new(cap, o1)?,
                    params2,
                },
                ceil_tol(nf / r as f64) as f64,
            ),
        };
        let target = r_total * hash.shared_seed_len();
        let plan = ExchangePlan::new(mode, target, Bias::pow2(log2_inv_delta), n, eps);
        let iteration_rounds = (r + 2 * r_c) as u64;
        Ok(Self {
            scheme,
            n,
            eps,
            alphabet: Alphabet::BINARY,
            r,
            r_c,
            r_total,
            padded_len: padded,
            hash,
            exchange: Some(plan),
            iteration_rounds,
            total_rounds: plan.rounds + r_total * iteration_rounds,
            slack,
            config: *config,
        })
    }

    /// `(N − n)/n`.
    pub fn overhead(&self) -> f64 {
        (self.total_rounds as f64 - self.n as f64) / self.n as f64
    }

    pub fn exchange_rounds(&self) -> u64 {
        self.exchange.map_or(0, |p| p.rounds)
    }

    /// `⌊εN⌋`.
    pub fn budget(&self) -> u64 {
        (self.eps * self.total_rounds as f64 + 1e-9).floor() as u64
    }
}

/// Meeting points for the current status.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct MeetingPoints {
    pub k_tilde: u64,
    pub mp1: usize,
    pub mp2: usize,
}

impl MeetingPoints {
    /// `k̃ = 2^⌈log₂ k⌉`, `MP1 = k̃r⌊|T|/(k̃r)⌋`, `MP2 = max(MP1 − k̃r, 0)`.
    ///
    /// Rounding up keeps every vote counted at the check `k = k̃` on the
    /// same pair of meeting points.
    pub fn new(k: u64, len: usize, r: usize) -> Self {
        assert!(k >= 1);
        let k_tilde = k.next_power_of_two();
        let unit = k_tilde as usize * r;
        let mp1 = unit * (len / unit);
        Self {
            k_tilde,
            mp1,
            mp2: mp1.saturating_sub(unit),
        }
    }
}

/// Status counters of one party.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Status {
    pub k: u64,
    pub e: u64,
    pub v1: u64,
    pub v2: u64,
}

/// The four compared hashes: `k`, `T`, `T[1,MP1]`, `T[1,MP2]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Hashes {
    pub k: HashValue,
    pub t: HashValue,
    pub mp1: HashValue,
    pub mp2: HashValue,
}

impl Status {
    pub fn reset(&mut self) {
        *self = Status::default();
    }

    /// Vote update after comparing own hashes with the received ones.
    pub fn apply_votes(&mut self, own: &Hashes, recv: &Hashes) -> Vote {
        if own.k != recv.k {
            self.e += 1;
            Vote::None
        } else if own.mp1 == recv.mp1 || own.mp1 == recv.mp2 {
            self.v1 += 1;
            Vote::V1
        } else if own.mp2 == recv.mp1 || own.mp2 == recv.mp2 {
            self.v2 += 1;
            Vote::V2
        } else {
            Vote::None
        }
    }

    pub fn should_compute(&self, transcripts_match: bool) -> bool {
        self.k == 1 && transcripts_match && self.e == 0
    }

    /// Transition rule, evaluated in order; applies the status change and
    /// reports any rollback target.
    pub fn transition(&mut self, k_tilde: u64, threshold: f64) -> Transition {
        let at_scale = self.k == k_tilde;
        let t = if 2 * self.e >= self.k {
            Transition::ErrorReset
        } else if at_scale && self.v1 as f64 >= threshold * k_tilde as f64 {
            Transition::RollbackMp1
        } else if at_scale && self.v2 as f64 >= threshold * k_tilde as f64 {
            Transition::RollbackMp2
        } else if at_scale {
            Transition::VoteReset
        } else {
            Transition::None
        };
        match t {
            Transition::ErrorReset | Transition::RollbackMp1 | Transition::RollbackMp2 => self.reset(),
            Transition::VoteReset => {
                self.v1 = 0;
                self.v2 = 0;
            }
            Transition::None => {}
        }
        t
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Transition {
    None,
    ErrorReset,
    RollbackMp1,
    RollbackMp2,
    VoteReset,
}

impl Transition {
    pub fn resets_status(self) -> bool {
        matches!(self, Transition::ErrorReset | Transition::RollbackMp1 | Transition::RollbackMp2)
    }
}

/// Packs message bits into `r_c` symbols of `alphabet`, zero padded.
pub fn frame(bits: &BitString, alphabet: Alphabet, r_c: usize) -> Vec<Symbol> {
    let b = alphabet.bits_per_symbol() as usize;
    assert!(bits.len() <= r_c * b, "message of {} bits exceeds frame", bits.len());
    (0..r_c)
        .map(|j| {
            let start = (j * b).min(bits.len());
            let take = b.min(bits.len() - start);
            bits.read_bits(start, take)
        })
        .collect()
}

/// Inverse of [`frame`].
pub fn unframe(symbols: &[Symbol], alphabet: Alphabet) -> BitString {
    let b = alphabet.bits_per_symbol() as usize;
    let mut out = BitString::with_capacity(symbols.len() * b);
    for &s in symbols {
        out.push_bits(s, b);
    }
    out
}

/// Reads `len` bits at `*pos` as a hash value and advances.
pub(crate) fn take_hash(bits: &BitString, pos: &mut usize, len: usize) -> HashValue {
    let lo = bits.read_bits(*pos, len.min(64)) as u128;
    let hi = if len > 64 { bits.read_bits(*pos + 64, len - 64) as u128 } else { 0 };
    *pos += len;
    HashValue::new(lo | (hi << 64), len)
}
