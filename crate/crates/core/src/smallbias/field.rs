//! Binary extension fields GF(2^m) over sparse irreducible moduli.
//!
//! Elements are little-endian `u64` limbs holding polynomial coefficients,
//! bit `i` of the element being the coefficient of `x^i`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use crate::Error;

pub type Elem = Vec<u64>;

/// Largest supported extension degree.
pub const MAX_DEGREE: u32 = 1 << 14;

/// `x^degree + Σ x^tap`, every tap strictly below `degree / 2 + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Modulus {
    degree: u32,
    taps: Vec<u32>,
}

impl Modulus {
    /// Builds a modulus from its degree and lower exponents (the constant
    /// term `0` must be among the taps for the polynomial to be irreducible,
    /// but that is checked by [`Modulus::is_irreducible`], not here).
    pub fn new(degree: u32, mut taps: Vec<u32>) -> Result<Self, Error> {
        if degree == 0 || degree > MAX_DEGREE {
            return Err(Error::InvalidParameter(format!(
                "field degree {degree} outside 1..={MAX_DEGREE}"
            )));
        }
        taps.sort_unstable_by(|a, b| b.cmp(a));
        taps.dedup();
        if taps.iter().any(|&t| t >= degree) {
            return Err(Error::InvalidParameter(format!(
                "modulus taps {taps:?} must lie below degree {degree}"
            )));
        }
        Ok(Self { degree, taps })
    }

    /// The cached lowest-weight irreducible modulus of this degree: the first
    /// irreducible trinomial `x^m + x^k + 1` with `k ≤ m/2`, else the first
    /// pentanomial `x^m + x^a + x^b + x^c + 1` with `m/2 ≥ a > b > c ≥ 1`.
    pub fn for_degree(degree: u32) -> Result<Self, Error> {
        static CACHE: OnceLock<Mutex<HashMap<u32, Modulus>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(m) = cache.lock().unwrap().get(&degree) {
            return Ok(m.clone());
        }
        let found = Self::search(degree)?;
        debug_assert!(found.is_irreducible());
        cache.lock().unwrap().insert(degree, found.clone());
        Ok(found)
    }

    fn search(degree: u32) -> Result<Self, Error> {
        if degree == 1 {
            return Self::new(1, vec![0]);
        }
        for k in 1..=degree / 2 {
            let m = Self::new(degree, vec![k, 0])?;
            if m.is_irreducible() {
                return Ok(m);
            }
        }
        let half = (degree / 2).max(3);
        for a in 3..=half.min(degree - 1) {
            for b in 2..a {
                for c in 1..b {
                    let m = Self::new(degree, vec![a, b, c, 0])?;
                    if m.is_irreducible() {
                        return Ok(m);
                    }
                }
            }
        }
        Err(Error::InvalidParameter(format!(
            "no sparse irreducible modulus found for degree {degree}"
        )))
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn taps(&self) -> &[u32] {
        &self.taps
    }

    /// Full polynomial as limbs, including the leading `x^degree` term.
    pub fn to_poly(&self) -> Vec<u64> {
        let mut p = vec![0u64; (self.degree as usize + 1).div_ceil(64)];
        set_bit(&mut p, self.degree as usize);
        for &t in &self.taps {
            set_bit(&mut p, t as usize);
        }
        p
    }

    /// Rabin's test: `x^(2^m) ≡ x (mod f)` and `gcd(x^(2^(m/q)) − x, f) = 1`
    /// for every prime `q | m`.
    pub fn is_irreducible(&self) -> bool {
        if !self.taps.contains(&0) {
            return false;
        }
        let m = self.degree;
        if m == 1 {
            return true;
        }
        let field = Field::new(self.clone());
        let x = field.x_elem();
        let primes = prime_factors(m);
        let mut cur = x.clone();
        let mut checkpoints = HashMap::new();
        for i in 1..=m {
            cur = field.square(&cur);
            if primes.iter().any(|q| m / q == i) {
                checkpoints.insert(i, cur.clone());
            }
        }
        if cur != x {
            return false;
        }
        let f = self.to_poly();
        for q in primes {
            let mut g = checkpoints[&(m / q)].clone();
            xor_into(&mut g, &x);
            let d = poly_gcd(g, f.clone());
            if poly_degree(&d) != Some(0) {
                return false;
            }
        }
        true
    }
}

fn prime_factors(mut m: u32) -> Vec<u32> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= m {
        if m.is_multiple_of(p) {
            out.push(p);
            while m.is_multiple_of(p) {
                m /= p;
            }
        }
        p += 1;
    }
    if m > 1 {
        out.push(m);
    }
    out
}

/// GF(2^m) arithmetic context.
#[derive(Debug)]
pub struct Field {
    modulus: Modulus,
    limbs: usize,
    scratch: RefCell<(Vec<u64>, Vec<u64>)>,
}

impl Clone for Field {
    fn clone(&self) -> Self {
        Self::new(self.modulus.clone())
    }
}

impl Field {
    pub fn new(modulus: Modulus) -> Self {
        let limbs = (modulus.degree as usize).div_ceil(64);
        Self {
            modulus,
            limbs,
            scratch: RefCell::new((vec![0; 2 * limbs + 1], vec![0; limbs + 2])),
        }
    }

    pub fn for_degree(degree: u32) -> Result<Self, Error> {
        Ok(Self::new(Modulus::for_degree(degree)?))
    }

    pub fn degree(&self) -> u32 {
        self.modulus.degree
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub fn limbs(&self) -> usize {
        self.limbs
    }

    pub fn zero(&self) -> Elem {
        vec![0; self.limbs]
    }

    pub fn one(&self) -> Elem {
        let mut e = self.zero();
        e[0] = 1;
        e
    }

    fn x_elem(&self) -> Elem {
        let mut e = self.zero();
        if self.modulus.degree == 1 {
            // x ≡ 1 mod (x + 1)
            e[0] = 1;
        } else {
            e[0] = 2;
        }
        e
    }

    /// Element from the low bits of `v`; panics if `v` has bits at or above the degree.
    pub fn from_u64(&self, v: u64) -> Elem {
        assert!(
            self.modulus.degree >= 64 || v >> self.modulus.degree == 0,
            "value {v:#x} does not fit in GF(2^{})",
            self.modulus.degree
        );
        let mut e = self.zero();
        e[0] = v;
        e
    }

    /// Element from `degree` bits of `words` starting at bit `start`.
    pub fn from_bit_range(&self, bits: &crate::bits::BitString, start: usize) -> Elem {
        let m = self.modulus.degree as usize;
        let mut e = self.zero();
        let mut pos = 0;
        while pos < m {
            let take = (m - pos).min(64);
            e[pos / 64] = bits.read_bits(start + pos, take);
            pos += 64;
        }
        e
    }

    pub fn is_zero(&self, a: &[u64]) -> bool {
        a.iter().all(|&w| w == 0)
    }

    pub fn add(&self, a: &[u64], b: &[u64]) -> Elem {
        a.iter().zip(b).map(|(x, y)| x ^ y).collect()
    }

    pub fn mul(&self, a: &[u64], b: &[u64]) -> Elem {
        let mut out = self.zero();
        self.mul_into(a, b, &mut out);
        out
    }

    /// `out = a · b`. `out` may alias neither input.
    pub fn mul_into(&self, a: &[u64], b: &[u64], out: &mut [u64]) {
        debug_assert_eq!(a.len(), self.limbs);
        debug_assert_eq!(b.len(), self.limbs);
        match self.limbs {
            1 => {
                let mut prod = [0u64; 2];
                poly_mul(a, b, &mut prod);
                out[0] = self.reduce_wide(u128::from(prod[0]) | u128::from(prod[1]) << 64, 0) as u64;
                return;
            }
            2 => {
                let mut prod = [0u64; 4];
                poly_mul(a, b, &mut prod);
                let lo = u128::from(prod[0]) | u128::from(prod[1]) << 64;
                let hi = u128::from(prod[2]) | u128::from(prod[3]) << 64;
                let r = self.reduce_wide(lo, hi);
                out[0] = r as u64;
                out[1] = (r >> 64) as u64;
                return;
            }
            _ => {}
        }
        let mut scratch = self.scratch.borrow_mut();
        let (prod, high) = &mut *scratch;
        prod.iter_mut().for_each(|w| *w = 0);
        poly_mul(a, b, prod);
        self.reduce(prod, high);
        out.copy_from_slice(&prod[..self.limbs]);
    }

    pub fn square(&self, a: &[u64]) -> Elem {
        self.mul(a, a)
    }

    pub fn pow(&self, a: &[u64], mut e: u64) -> Elem {
        let mut result = self.one();
        let mut base = a.to_vec();
        let mut tmp = self.zero();
        while e > 0 {
            if e & 1 == 1 {
                self.mul_into(&result, &base, &mut tmp);
                std::mem::swap(&mut result, &mut tmp);
            }
            e >>= 1;
            if e > 0 {
                self.mul_into(&base, &base, &mut tmp);
                std::mem::swap(&mut base, &mut tmp);
            }
        }
        result
    }

    /// Parity of the bitwise AND of two elements.
    pub fn inner(&self, a: &[u64], b: &[u64]) -> bool {
        a.iter()
            .zip(b)
            .fold(0u32, |acc, (x, y)| acc ^ (x & y).count_ones())
            & 1
            == 1
    }

    /// Reduces `prod` (degree < 2m) modulo the field polynomial in place.
    /// Reduces the 256-bit product `hi·2^128 + lo` for degree at most 128.
    fn reduce_wide(&self, mut lo: u128, mut hi: u128) -> u128 {
        let m = self.modulus.degree;
        let mask = if m == 128 { u128::MAX } else { (1u128 << m) - 1 };
        loop {
            let h = match m {
                128 => hi,
                0..=127 => (lo >> m) | if hi == 0 { 0 } else { hi << (128 - m) },
                _ => unreachable!(),
            };
            if h == 0 {
                return lo;
            }
            lo &= mask;
            hi = 0;
            for &t in &self.modulus.taps {
                lo ^= h << t;
                if t > 0 {
                    hi ^= h >> (128 - t);
                }
            }
        }
    }

    fn reduce(&self, prod: &mut [u64], high: &mut [u64]) {
        let m = self.modulus.degree as usize;
        loop {
            // high = prod >> m
            let word = m / 64;
            let off = m % 64;
            let mut any = false;
            for (i, h) in high.iter_mut().enumerate() {
                let lo = prod.get(word + i).copied().unwrap_or(0);
                let hi = prod.get(word + i + 1).copied().unwrap_or(0);
                *h = if off == 0 {
                    lo
                } else {
                    (lo >> off) | (hi << (64 - off))
                };
                any |= *h != 0;
            }
            if !any {
                return;
            }
            // clear bits ≥ m
            if off == 0 {
                prod[word..].iter_mut().for_each(|w| *w = 0);
            } else {
                prod[word] &= (1u64 << off) - 1;
                prod[word + 1..].iter_mut().for_each(|w| *w = 0);
            }
            for &t in &self.modulus.taps {
                xor_shifted(prod, high, t as usize);
            }
        }
    }
}

fn xor_shifted(dst: &mut [u64], src: &[u64], shift: usize) {
    let ws = shift / 64;
    let bs = shift % 64;
    for (i, &s) in src.iter().enumerate() {
        if s == 0 {
            continue;
        }
        if let Some(d) = dst.get_mut(i + ws) {
            *d ^= s << bs;
        }
        if bs != 0 {
            if let Some(d) = dst.get_mut(i + ws + 1) {
                *d ^= s >> (64 - bs);
            }
        }
    }
}

fn set_bit(p: &mut [u64], i: usize) {
    p[i / 64] |= 1 << (i % 64);
}

fn xor_into(dst: &mut Vec<u64>, src: &[u64]) {
    if dst.len() < src.len() {
        dst.resize(src.len(), 0);
    }
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

fn poly_degree(p: &[u64]) -> Option<usize> {
    p.iter()
        .enumerate()
        .rev()
        .find(|(_, &w)| w != 0)
        .map(|(i, w)| i * 64 + 63 - w.leading_zeros() as usize)
}

/// `a mod b` by shift-and-subtract.
fn poly_rem(mut a: Vec<u64>, b: &[u64]) -> Vec<u64> {
    let db = poly_degree(b).expect("division by zero polynomial");
    while let Some(da) = poly_degree(&a) {
        if da < db {
            break;
        }
        xor_shifted(&mut a, b, da - db);
    }
    a
}

fn poly_gcd(mut a: Vec<u64>, mut b: Vec<u64>) -> Vec<u64> {
    while poly_degree(&b).is_some() {
        let r = poly_rem(a, &b);
        a = b;
        b = r;
    }
    a
}

/// Carryless 64×64 → 128 multiply, portable version.
pub fn clmul64_soft(a: u64, b: u64) -> (u64, u64) {
    let mut lo = 0u64;
    let mut hi = 0u64;
    for i in 0..64 {
        if (b >> i) & 1 == 1 {
            lo ^= a << i;
            if i > 0 {
                hi ^= a >> (64 - i);
            }
        }
    }
    (lo, hi)
}

fn poly_mul_with<F: Fn(u64, u64) -> (u64, u64)>(a: &[u64], b: &[u64], out: &mut [u64], f: F) {
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            let (lo, hi) = f(x, y);
            out[i + j] ^= lo;
            out[i + j + 1] ^= hi;
        }
    }
}

#[cfg(target_arch = "x86_64")]
mod hw {
    use std::arch::x86_64::*;

    #[inline]
    #[target_feature(enable = "pclmulqdq,sse2")]
    unsafe fn clmul(a: u64, b: u64) -> (u64, u64) {
        let r = _mm_clmulepi64_si128(
            _mm_set_epi64x(0, a as i64),
            _mm_set_epi64x(0, b as i64),
            0,
        );
        (
            _mm_cvtsi128_si64(r) as u64,
            _mm_cvtsi128_si64(_mm_unpackhi_epi64(r, r)) as u64,
        )
    }

    #[target_feature(enable = "pclmulqdq,sse2")]
    pub unsafe fn poly_mul(a: &[u64], b: &[u64], out: &mut [u64]) {
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                let (lo, hi) = clmul(x, y);
                out[i + j] ^= lo;
                out[i + j + 1] ^= hi;
            }
        }
    }

    pub fn available() -> bool {
        static HW: std::sync::OnceLock<bool> = std::sync::OnceLock::new();
        *HW.get_or_init(|| {
            std::is_x86_feature_detected!("pclmulqdq") && std::is_x86_feature_detected!("sse2")
        })
    }
}

/// Schoolbook carryless product accumulated (XORed) into `out`, which must
/// hold at least `a.len() + b.len()` limbs.
pub fn poly_mul(a: &[u64], b: &[u64], out: &mut [u64]) {
    #[cfg(target_arch = "x86_64")]
    {
        if hw::available() {
            // SAFETY: the required CPU features were detected at runtime.
            unsafe { hw::poly_mul(a, b, out) };
            return;
        }
    }
    poly_mul_with(a, b, out, clmul64_soft);
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Schoolbook polynomial product and reduction on bit vectors.
    fn naive_mul(a: u64, b: u64, modulus: u64, m: u32) -> u64 {
        let mut prod = 0u128;
        for i in 0..64 {
            if (b >> i) & 1 == 1 {
                prod ^= (a as u128) << i;
            }
        }
        for d in (m..128).rev() {
            if (prod >> d) & 1 == 1 {
                prod ^= (modulus as u128) << (d - m);
            }
        }
        prod as u64
    }

    #[test]
    fn gf16_reference_product() {
        let f = Field::new(Modulus::new(4, vec![1, 0]).unwrap());
        assert_eq!(f.mul(&[0b0010], &[0b1000]), vec![0b0011]);
        assert_eq!(naive_mul(0b0010, 0b1000, 0b10011, 4), 0b0011);
    }

    #[test]
    fn identity_and_annihilator() {
        let f = Field::for_degree(13).unwrap();
        for x in [0u64, 1, 77, 8191] {
            assert_eq!(f.mul(&[x], &f.one()), vec![x]);
            assert_eq!(f.mul(&[x], &f.zero()), vec![0]);
        }
    }

    #[test]
    fn small_moduli_are_irreducible() {
        for m in 1..=64 {
            let md = Modulus::for_degree(m).unwrap();
            assert!(md.is_irreducible(), "degree {m}");
        }
        // x^4 + x^2 + 1 = (x^2 + x + 1)^2
        assert!(!Modulus::new(4, vec![2, 0]).unwrap().is_irreducible());
        // AES polynomial
        assert!(Modulus::new(8, vec![4, 3, 1, 0]).unwrap().is_irreducible());
    }

    #[test]
    fn large_degrees_have_moduli() {
        for m in [94u32, 128, 478, 1024] {
            let md = Modulus::for_degree(m).unwrap();
            assert!(md.is_irreducible());
        }
    }

    proptest! {
        #[test]
        fn wide_fields_satisfy_frobenius(seed in any::<[u64; 6]>(), pick in 0usize..6) {
            let m = [63u32, 64, 65, 94, 127, 128][pick];
            let f = Field::for_degree(m).unwrap();
            let elem = |w: &[u64]| {
                let bits = crate::bits::BitString::from_bools((0..m as usize).map(|i| (w[i / 64] >> (i % 64)) & 1 == 1));
                f.from_bit_range(&bits, 0)
            };
            let (a, b, c) = (elem(&seed[0..2]), elem(&seed[2..4]), elem(&seed[4..6]));
            let mut x = a.clone();
            for _ in 0..m {
                x = f.square(&x);
            }
            prop_assert_eq!(&x, &a);
            prop_assert_eq!(f.mul(&f.mul(&a, &b), &c), f.mul(&a, &f.mul(&b, &c)));
            prop_assert_eq!(f.mul(&a, &f.add(&b, &c)), f.add(&f.mul(&a, &b), &f.mul(&a, &c)));
        }
    }

    #[test]
    fn field_axioms_exhaustive_small() {
        for m in 1..=6u32 {
            let f = Field::for_degree(m).unwrap();
            let size = 1u64 << m;
            for a in 0..size {
                for b in 0..size {
                    let ab = f.mul(&[a], &[b]);
                    assert_eq!(ab, f.mul(&[b], &[a]));
                    for c in 0..size {
                        let lhs = f.mul(&ab, &[c]);
                        let rhs = f.mul(&[a], &f.mul(&[b], &[c]));
                        assert_eq!(lhs, rhs, "assoc m={m}");
                        let dist = f.mul(&[a], &[b ^ c]);
                        assert_eq!(dist[0], ab[0] ^ f.mul(&[a], &[c])[0], "distrib m={m}");
                    }
                }
                if a != 0 {
                    // every nonzero element is invertible: a^(2^m - 1) = 1
                    assert_eq!(f.pow(&[a], size - 1), f.one(), "inverse m={m} a={a}");
                }
            }
        }
    }

    #[test]
    fn hardware_and_soft_clmul_agree() {
        let mut x = 0x9e37_79b9_7f4a_7c15u64;
        for _ in 0..1000 {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let y = x.rotate_left(17) ^ 0xdead_beef;
            let mut hw_out = [0u64; 2];
            poly_mul(&[x], &[y], &mut hw_out);
            let (lo, hi) = clmul64_soft(x, y);
            assert_eq!(hw_out, [lo, hi]);
        }
    }

    proptest! {
        #[test]
        fn matches_naive_reduction(m in 2u32..=32, a in any::<u64>(), b in any::<u64>()) {
            let md = Modulus::for_degree(m).unwrap();
            let f = Field::new(md.clone());
            let mask = (1u64 << m) - 1;
            let (a, b) = (a & mask, b & mask);
            prop_assert_eq!(f.mul(&[a], &[b])[0], naive_mul(a, b, md.to_poly()[0], m));
        }

        #[test]
        fn multi_limb_distributive(a in proptest::collection::vec(any::<u64>(), 3), b in proptest::collection::vec(any::<u64>(), 3), c in proptest::collection::vec(any::<u64>(), 3)) {
            let f = Field::for_degree(150).unwrap();
            let clean = |v: Vec<u64>| { let mut v = v; v[2] &= (1 << 22) - 1; v };
            let (a, b, c) = (clean(a), clean(b), clean(c));
            let lhs = f.mul(&a, &f.add(&b, &c));
            let rhs = f.add(&f.mul(&a, &b), &f.mul(&a, &c));
            prop_assert_eq!(lhs, rhs);
            prop_assert_eq!(f.mul(&f.mul(&a, &b), &c), f.mul(&a, &f.mul(&b, &c)));
        }
    }
}
