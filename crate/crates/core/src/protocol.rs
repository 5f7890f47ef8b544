//! Noiseless input protocols and transcripts.
//!
//! A protocol is alternating: Alice speaks in even (0-based) rounds, Bob in
//! odd ones. The next symbol is a pure function of the speaker, its input and
//! a 64-bit digest of the prefix so far, which makes rollback by truncation
//! cheap: a transcript keeps the digest of every prefix.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::{Error, Result};

pub type Symbol = u64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Party {
    Alice,
    Bob,
}

impl Party {
    pub fn other(self) -> Party {
        match self {
            Party::Alice => Party::Bob,
            Party::Bob => Party::Alice,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn letter(self) -> char {
        match self {
            Party::Alice => 'A',
            Party::Bob => 'B',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Alphabet {
    bits_per_symbol: u32,
}

impl Alphabet {
    pub const BINARY: Alphabet = Alphabet { bits_per_symbol: 1 };

    pub fn new(bits_per_symbol: u32) -> Result<Self> {
        if !(1..=64).contains(&bits_per_symbol) {
            return Err(Error::InvalidParameter(format!(
                "symbol width {bits_per_symbol} outside 1..=64"
            )));
        }
        Ok(Self { bits_per_symbol })
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.bits_per_symbol
    }

    pub fn mask(&self) -> Symbol {
        if self.bits_per_symbol == 64 {
            u64::MAX
        } else {
            (1 << self.bits_per_symbol) - 1
        }
    }
}

/// Built-in protocol families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProtocolFamily {
    /// Every symbol is a keyed pseudo-random function of the speaker's input
    /// and the whole prefix.
    FullEntropy,
    /// Each party's input defines a function on symbols; the speaker applies
    /// its function to the last symbol.
    PointerJumping,
    /// Alice streams her input; Bob repeats the last symbol he heard.
    Echo,
}

impl ProtocolFamily {
    pub const ALL: [ProtocolFamily; 3] = [
        ProtocolFamily::FullEntropy,
        ProtocolFamily::PointerJumping,
        ProtocolFamily::Echo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolFamily::FullEntropy => "full-entropy",
            ProtocolFamily::PointerJumping => "pointer-jumping",
            ProtocolFamily::Echo => "echo",
        }
    }
}

impl fmt::Display for ProtocolFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProtocolFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown protocol family {s:?}")))
    }
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Digest of the empty prefix.
pub const EMPTY_DIGEST: u64 = 0x6a09_e667_f3bc_c908;

/// An alternating protocol, possibly padded with confirmation rounds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InputProtocol {
    family: ProtocolFamily,
    alphabet: Alphabet,
    length_n: usize,
    padded_len: usize,
    key: u64,
}

impl InputProtocol {
    pub fn new(family: ProtocolFamily, alphabet: Alphabet, length_n: usize, key: u64) -> Self {
        Self {
            family,
            alphabet,
            length_n,
            padded_len: length_n,
            key,
        }
    }

    pub fn family(&self) -> ProtocolFamily {
        self.family
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    /// Rounds of the original protocol.
    pub fn length_n(&self) -> usize {
        self.length_n
    }

    /// Rounds including confirmation padding.
    pub fn len(&self) -> usize {
        self.padded_len
    }

    pub fn is_empty(&self) -> bool {
        self.padded_len == 0
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    pub fn sender(&self, round: usize) -> Party {
        if round.is_multiple_of(2) {
            Party::Alice
        } else {
            Party::Bob
        }
    }

    /// Symbol `party` sends in `round` after a prefix with digest `digest`
    /// and last symbol `last`. Confirmation rounds always carry 0.
    pub fn next_symbol(&self, party: Party, input: u64, round: usize, digest: u64, last: Symbol) -> Symbol {
        if round >= self.length_n {
            return 0;
        }
        let mask = self.alphabet.mask();
        let salt = self.key ^ (party as u64).wrapping_mul(0xd6e8_feb8_6659_fd93);
        match self.family {
            ProtocolFamily::FullEntropy => mix64(digest ^ mix64(input ^ salt)) & mask,
            ProtocolFamily::PointerJumping => mix64(mix64(input ^ salt) ^ last) & mask,
            ProtocolFamily::Echo => match party {
                Party::Alice => mix64(mix64(input ^ salt) ^ round as u64) & mask,
                Party::Bob => last,
            },
        }
    }

    /// Digest of `prefix ∥ symbol` given the digest of `prefix`.
    pub fn absorb(&self, digest: u64, round: usize, symbol: Symbol) -> u64 {
        mix64(digest ^ mix64(symbol ^ ((round as u64) << 1) ^ self.key))
    }

    /// Transcript of the noiseless execution over all padded rounds.
    pub fn execute(&self, inputs: [u64; 2]) -> Transcript {
        let mut t = Transcript::new(self.alphabet);
        for round in 0..self.padded_len {
            let p = self.sender(round);
            let s = self.next_symbol(p, inputs[p.index()], round, t.digest(), t.last());
            t.push(self, s);
        }
        t
    }
}

/// Copy of `pi` extended to `target_len` rounds in which both parties send 0
/// on their usual turns.
pub fn pad_with_confirmations(pi: &InputProtocol, target_len: usize) -> Result<InputProtocol> {
    if target_len < pi.length_n {
        return Err(Error::PaddingTooShort {
            target: target_len,
            len: pi.length_n,
        });
    }
    let mut out = pi.clone();
    out.padded_len = target_len;
    Ok(out)
}

/// One party's view of the executed prefix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transcript {
    alphabet: Alphabet,
    symbols: Vec<Symbol>,
    /// `digests[i]` is the digest of the first `i` symbols.
    digests: Vec<u64>,
    bits: BitString,
}

impl Transcript {
    pub fn new(alphabet: Alphabet) -> Self {
        Self {
            alphabet,
            symbols: Vec::new(),
            digests: vec![EMPTY_DIGEST],
            bits: BitString::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    /// Symbols packed `bits_per_symbol` apiece, first symbol first.
    pub fn bits(&self) -> &BitString {
        &self.bits
    }

    pub fn bit_len(&self) -> usize {
        self.bits.len()
    }

    pub fn digest(&self) -> u64 {
        *self.digests.last().expect("digest of empty prefix")
    }

    pub fn last(&self) -> Symbol {
        self.symbols.last().copied().unwrap_or(0)
    }

    pub fn push(&mut self, pi: &InputProtocol, symbol: Symbol) {
        let symbol = symbol & self.alphabet.mask();
        let d = pi.absorb(self.digest(), self.len(), symbol);
        self.symbols.push(symbol);
        self.digests.push(d);
        self.bits.push_bits(symbol, self.alphabet.bits_per_symbol() as usize);
    }

    /// Truncates to the first `new_len` symbols.
    pub fn rollback(&mut self, new_len: usize) -> Result<()> {
        if new_len > self.len() {
            return Err(Error::RollbackPastEnd {
                requested: new_len,
                len: self.len(),
            });
        }
        self.symbols.truncate(new_len);
        self.digests.truncate(new_len + 1);
        self.bits.truncate(new_len * self.alphabet.bits_per_symbol() as usize);
        Ok(())
    }

    /// What this party does in its next round: send the protocol's symbol on
    /// its turn, otherwise listen.
    pub fn next_action(&self, pi: &InputProtocol, me: Party, input: u64) -> Option<Symbol> {
        let round = self.len();
        (pi.sender(round) == me).then(|| pi.next_symbol(me, input, round, self.digest(), self.last()))
    }

    /// Extends by `steps` rounds, drawing the other party's symbols from
    /// `received`.
    pub fn extend<I>(&mut self, pi: &InputProtocol, me: Party, input: u64, steps: usize, received: I)
    where
        I: IntoIterator<Item = Symbol>,
    {
        let mut received = received.into_iter();
        for _ in 0..steps {
            let s = match self.next_action(pi, me, input) {
                Some(s) => s,
                None => received.next().unwrap_or(0),
            };
            self.push(pi, s);
        }
    }

    /// Length of the longest common prefix.
    pub fn common_prefix(&self, other: &Transcript) -> usize {
        self.symbols
            .iter()
            .zip(&other.symbols)
            .take_while(|(a, b)| a == b)
            .count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn proto(family: ProtocolFamily, n: usize) -> InputProtocol {
        InputProtocol::new(family, Alphabet::BINARY, n, 99)
    }

    #[test]
    fn alphabet_bounds() {
        assert!(Alphabet::new(0).is_err());
        assert!(Alphabet::new(65).is_err());
        assert_eq!(Alphabet::new(13).unwrap().mask(), 0x1fff);
    }

    #[test]
    fn padding_sends_zero() {
        let pi = proto(ProtocolFamily::FullEntropy, 100);
        let padded = pad_with_confirmations(&pi, 120).unwrap();
        let t = padded.execute([3, 4]);
        assert_eq!(t.len(), 120);
        assert!(t.symbols()[100..].iter().all(|&s| s == 0));
        assert_eq!(&t.symbols()[..100], pi.execute([3, 4]).symbols());
        assert_eq!(pad_with_confirmations(&pi, 100).unwrap(), pi);
        assert!(matches!(
            pad_with_confirmations(&pi, 99),
            Err(Error::PaddingTooShort { .. })
        ));
    }

    #[test]
    fn echo_is_readable() {
        let pi = proto(ProtocolFamily::Echo, 40);
        let t = pi.execute([7, 0]);
        for i in (1..40).step_by(2) {
            assert_eq!(t.symbols()[i], t.symbols()[i - 1]);
        }
    }

    #[test]
    fn pointer_jumping_follows_last_symbol() {
        let pi = InputProtocol::new(ProtocolFamily::PointerJumping, Alphabet::new(4).unwrap(), 30, 1);
        let t = pi.execute([11, 12]);
        for i in 1..30 {
            let p = pi.sender(i);
            let input = [11, 12][p.index()];
            assert_eq!(t.symbols()[i], pi.next_symbol(p, input, i, 0, t.symbols()[i - 1]));
        }
    }

    #[test]
    fn rollback_bounds() {
        let pi = proto(ProtocolFamily::FullEntropy, 10);
        let mut t = pi.execute([1, 2]);
        let full = t.clone();
        t.rollback(10).unwrap();
        assert_eq!(t, full);
        assert!(t.rollback(11).is_err());
        t.rollback(0).unwrap();
        assert!(t.is_empty());
        assert_eq!(t.digest(), EMPTY_DIGEST);
    }

    #[test]
    fn lockstep_extension_matches_direct_execution() {
        // both parties extend against each other's sent symbols over a depth-64 tree
        let pi = InputProtocol::new(ProtocolFamily::FullEntropy, Alphabet::new(3).unwrap(), 64, 5);
        let inputs = [0xabc, 0xdef];
        let mut ta = Transcript::new(pi.alphabet());
        let mut tb = Transcript::new(pi.alphabet());
        for _ in 0..64 {
            let a = ta.next_action(&pi, Party::Alice, inputs[0]);
            let b = tb.next_action(&pi, Party::Bob, inputs[1]);
            let sym = a.or(b).unwrap();
            ta.push(&pi, sym);
            tb.push(&pi, sym);
        }
        assert_eq!(ta, tb);
        assert_eq!(ta, pi.execute(inputs));
    }

    proptest! {
        #[test]
        fn replay_after_rollback(seed in any::<u64>(), cut in 0usize..200, family in 0usize..3) {
            let pi = pad_with_confirmations(&InputProtocol::new(ProtocolFamily::ALL[family], Alphabet::new(2).unwrap(), 150, seed), 200).unwrap();
            let inputs = [seed ^ 1, seed ^ 2];
            let full = pi.execute(inputs);
            let mut t = full.clone();
            t.rollback(cut).unwrap();
            let theirs: Vec<Symbol> = (cut..200).filter(|&i| pi.sender(i) == Party::Bob).map(|i| full.symbols()[i]).collect();
            t.extend(&pi, Party::Alice, inputs[0], 200 - cut, theirs);
            prop_assert_eq!(&t, &full);
            prop_assert_eq!(t.bits().len(), 400);
        }

        #[test]
        fn next_symbol_is_deterministic(seed in any::<u64>(), round in 0usize..100, digest in any::<u64>(), last in 0u64..8) {
            let pi = InputProtocol::new(ProtocolFamily::FullEntropy, Alphabet::new(3).unwrap(), 100, seed);
            prop_assert_eq!(pi.next_symbol(Party::Bob, 4, round, digest, last), pi.next_symbol(Party::Bob, 4, round, digest, last));
        }
    }
}
