//! Packed bit strings, least-significant bit first within each word.

use std::fmt;

/// Growable packed bit string.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn with_capacity(bits: usize) -> Self {
        Self {
            words: Vec::with_capacity(bits.div_ceil(64)),
            len: 0,
        }
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut s = Self::new();
        for b in bits {
            s.push(b);
        }
        s
    }

    /// The low `len` bits of `value`, bit 0 first.
    pub fn from_u64(value: u64, len: usize) -> Self {
        let mut s = Self::new();
        s.push_bits(value, len);
        s
    }

    /// Parses a string of `0`/`1` characters, first character = bit 0.
    pub fn parse(text: &str) -> Option<Self> {
        let mut s = Self::new();
        for c in text.chars() {
            match c {
                '0' => s.push(false),
                '1' => s.push(true),
                '_' | ' ' => {}
                _ => return None,
            }
        }
        Some(s)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i % 64);
        if bit {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn push(&mut self, bit: bool) {
        if self.len.is_multiple_of(64) {
            self.words.push(0);
        }
        if bit {
            self.words[self.len / 64] |= 1 << (self.len % 64);
        }
        self.len += 1;
    }

    /// Appends the low `count` bits of `value` (count ≤ 64).
    pub fn push_bits(&mut self, value: u64, count: usize) {
        assert!(count <= 64);
        if count == 0 {
            return;
        }
        let value = if count == 64 {
            value
        } else {
            value & ((1u64 << count) - 1)
        };
        let off = self.len % 64;
        if off == 0 {
            self.words.push(value);
        } else {
            let last = self.words.len() - 1;
            self.words[last] |= value << off;
            if off + count > 64 {
                self.words.push(value >> (64 - off));
            }
        }
        self.len += count;
    }

    /// Reads `count` bits starting at `start` as an integer (count ≤ 64).
    pub fn read_bits(&self, start: usize, count: usize) -> u64 {
        assert!(count <= 64 && start + count <= self.len);
        if count == 0 {
            return 0;
        }
        let w = start / 64;
        let off = start % 64;
        let mut v = self.words[w] >> off;
        if off != 0 && off + count > 64 {
            v |= self.words[w + 1] << (64 - off);
        }
        if count == 64 {
            v
        } else {
            v & ((1u64 << count) - 1)
        }
    }

    pub fn extend_from(&mut self, other: &BitString) {
        let full = other.len / 64;
        for w in &other.words[..full] {
            self.push_bits(*w, 64);
        }
        let rest = other.len % 64;
        if rest > 0 {
            self.push_bits(other.words[full], rest);
        }
    }

    pub fn truncate(&mut self, len: usize) {
        if len >= self.len {
            return;
        }
        self.len = len;
        self.words.truncate(len.div_ceil(64));
        if !len.is_multiple_of(64) {
            let last = self.words.len() - 1;
            self.words[last] &= (1u64 << (len % 64)) - 1;
        }
    }

    /// Copy of bits `[start, start + count)`.
    pub fn slice(&self, start: usize, count: usize) -> BitString {
        assert!(start + count <= self.len);
        let mut out = BitString::with_capacity(count);
        let mut pos = start;
        let end = start + count;
        while pos < end {
            let take = (end - pos).min(64);
            out.push_bits(self.read_bits(pos, take), take);
            pos += take;
        }
        out
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    /// Parity of `self AND other[offset .. offset + self.len())`.
    pub fn masked_parity(&self, other: &BitString, offset: usize) -> bool {
        assert!(offset + self.len <= other.len);
        let mut acc = 0u64;
        let mut pos = 0;
        while pos < self.len {
            let take = (self.len - pos).min(64);
            acc ^= self.read_bits(pos, take) & other.read_bits(offset + pos, take);
            pos += 64;
        }
        acc.count_ones() % 2 == 1
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString(")?;
        for b in self.iter().take(256) {
            f.write_str(if b { "1" } else { "0" })?;
        }
        if self.len > 256 {
            write!(f, "…[{}]", self.len)?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// ⌈log₂ x⌉ for x ≥ 1; 0 for x ≤ 1.
pub fn ceil_log2(x: u64) -> u32 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros()
    }
}
