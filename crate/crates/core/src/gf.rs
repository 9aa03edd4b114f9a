//! Arithmetic in binary extension fields GF(2^k), 1 <= k <= 32.
//!
//! Elements are plain `k`-bit integers (bit `i` is the coefficient of `x^i`).
//! A [`Field`] carries the modulus and whatever lookup tables are worth
//! building for its size; elements themselves are untagged, so callers that
//! accept elements from outside use [`Field::element`] to range-check them.

use std::fmt;
use std::ops::{Add, AddAssign, Sub};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Primitive polynomials for k = 1..=32 (index k-1), including the x^k term.
const MODULI: [u64; 32] = [
    0x3,
    0x7,
    0xB,
    0x13,
    0x25,
    0x43,
    0x83,
    0x11D,
    0x211,
    0x409,
    0x805,
    0x1053,
    0x201B,
    0x4443,
    0x8003,
    0x1100B,
    0x20009,
    0x40081,
    0x80027,
    0x100009,
    0x200005,
    0x400003,
    0x800021,
    0x1000087,
    0x2000009,
    0x4000047,
    0x8000027,
    0x10000009,
    0x20000005,
    0x40800007,
    0x80000009,
    0x100400007,
];

/// Largest k for which a full multiplication table is built.
const FULL_TABLE_MAX_K: u32 = 8;
/// Largest k for which log/antilog tables are built.
const LOG_TABLE_MAX_K: u32 = 16;

/// An element of some GF(2^k); bit `i` is the coefficient of `x^i`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FieldElement(u32);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    /// Wraps raw bits without a range check. Prefer [`Field::element`] for
    /// untrusted input.
    #[inline]
    pub const fn from_bits(bits: u32) -> Self {
        FieldElement(bits)
    }

    #[inline]
    pub const fn bits(self) -> u32 {
        self.0
    }

    #[inline]
    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#x}", self.0)
    }
}

// Addition in characteristic 2 is XOR.
#[allow(clippy::suspicious_arithmetic_impl, clippy::suspicious_op_assign_impl)]
impl Add for FieldElement {
    type Output = FieldElement;
    #[inline]
    fn add(self, rhs: FieldElement) -> FieldElement {
        FieldElement(self.0 ^ rhs.0)
    }
}

#[allow(clippy::suspicious_arithmetic_impl, clippy::suspicious_op_assign_impl)]
impl AddAssign for FieldElement {
    #[inline]
    fn add_assign(&mut self, rhs: FieldElement) {
        self.0 ^= rhs.0;
    }
}

#[allow(clippy::suspicious_arithmetic_impl, clippy::suspicious_op_assign_impl)]
impl Sub for FieldElement {
    type Output = FieldElement;
    #[inline]
    fn sub(self, rhs: FieldElement) -> FieldElement {
        FieldElement(self.0 ^ rhs.0)
    }
}

/// JSON form of a field: `{"k": 8, "modulus_hex": "0x11d"}`. The modulus is
/// optional and defaults to the built-in table entry.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub k: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulus_hex: Option<String>,
}

enum Arith {
    /// `mul[a << k | b]` and `inv[a]`.
    Full {
        mul: Vec<u8>,
        inv: Vec<u8>,
    },
    /// `exp` has length 2(q-1) so that `exp[log a + log b]` needs no reduction.
    Log {
        log: Vec<u32>,
        exp: Vec<u32>,
    },
    Clmul,
}

struct Inner {
    k: u32,
    modulus: u64,
    generator: u32,
    /// Prime factors of 2^k - 1, used for order computations.
    order_factors: Vec<u64>,
    arith: Arith,
}

/// GF(2^k) with a fixed irreducible modulus. Cheap to clone.
#[derive(Clone)]
pub struct Field(Arc<Inner>);

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.0.k == other.0.k && self.0.modulus == other.0.modulus
    }
}
impl Eq for Field {}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF(2^{}; {:#x})", self.0.k, self.0.modulus)
    }
}

impl Field {
    /// GF(2^k) with the built-in primitive modulus.
    pub fn new(k: u32) -> Result<Field> {
        if !(1..=32).contains(&k) {
            return Err(invalid(format!("field degree k={k} outside 1..=32")));
        }
        Ok(Self::build(k, MODULI[(k - 1) as usize]))
    }

    /// GF(2^k) with a caller-supplied modulus (bit k must be set). The
    /// modulus is re-checked for irreducibility.
    pub fn with_modulus(k: u32, modulus: u64) -> Result<Field> {
        if !(1..=32).contains(&k) {
            return Err(invalid(format!("field degree k={k} outside 1..=32")));
        }
        if modulus >> k != 1 {
            return Err(invalid(format!("modulus {modulus:#x} does not have degree {k}")));
        }
        let irreducible = if k <= 16 { is_irreducible_by_search(modulus, k) } else { is_irreducible_rabin(modulus, k) };
        if !irreducible {
            return Err(invalid(format!("modulus {modulus:#x} is reducible")));
        }
        Ok(Self::build(k, modulus))
    }

    pub fn from_spec(spec: &FieldSpec) -> Result<Field> {
        match &spec.modulus_hex {
            None => Field::new(spec.k),
            Some(hex) => {
                let digits = hex.trim_start_matches("0x").trim_start_matches("0X");
                let modulus =
                    u64::from_str_radix(digits, 16).map_err(|e| invalid(format!("bad modulus_hex {hex:?}: {e}")))?;
                Field::with_modulus(spec.k, modulus)
            }
        }
    }

    pub fn spec(&self) -> FieldSpec {
        FieldSpec { k: self.0.k, modulus_hex: Some(format!("{:#x}", self.0.modulus)) }
    }

    fn build(k: u32, modulus: u64) -> Field {
        let order_factors = prime_factors((1u64 << k) - 1);
        let mut inner = Inner { k, modulus, generator: 1, order_factors, arith: Arith::Clmul };
        inner.generator = find_generator(&inner);
        if k <= LOG_TABLE_MAX_K {
            inner.arith = build_tables(&inner);
        }
        Field(Arc::new(inner))
    }

    #[inline]
    pub fn k(&self) -> u32 {
        self.0.k
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.0.modulus
    }

    /// Number of elements, 2^k.
    #[inline]
    pub fn order(&self) -> u64 {
        1u64 << self.0.k
    }

    #[inline]
    fn mask(&self) -> u32 {
        ((1u64 << self.0.k) - 1) as u32
    }

    /// Fixed generator of the multiplicative group.
    pub fn generator(&self) -> FieldElement {
        FieldElement(self.0.generator)
    }

    /// Range-checked element constructor.
    pub fn element(&self, bits: u32) -> Result<FieldElement> {
        if u64::from(bits) >= self.order() {
            return Err(invalid(format!("{bits:#x} is not an element of GF(2^{})", self.0.k)));
        }
        Ok(FieldElement(bits))
    }

    pub fn contains(&self, e: FieldElement) -> bool {
        u64::from(e.0) < self.order()
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldElement {
        FieldElement(rng.random::<u32>() & self.mask())
    }

    pub fn random_nonzero<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldElement {
        loop {
            let e = self.random(rng);
            if !e.is_zero() {
                return e;
            }
        }
    }

    /// A uniformly random element different from `e`.
    pub fn random_other<R: Rng + ?Sized>(&self, e: FieldElement, rng: &mut R) -> FieldElement {
        let delta = self.random_nonzero(rng);
        e + delta
    }

    #[inline]
    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        match &self.0.arith {
            Arith::Full { mul, .. } => FieldElement(u32::from(mul[((a.0 as usize) << self.0.k) | b.0 as usize])),
            Arith::Log { log, exp } => {
                if a.0 == 0 || b.0 == 0 {
                    FieldElement(0)
                } else {
                    FieldElement(exp[(log[a.0 as usize] + log[b.0 as usize]) as usize])
                }
            }
            Arith::Clmul => FieldElement(self.reduce(clmul(a.0, b.0))),
        }
    }

    #[inline]
    pub fn square(&self, a: FieldElement) -> FieldElement {
        self.mul(a, a)
    }

    /// Multiplicative inverse; zero maps to zero.
    pub fn inv(&self, a: FieldElement) -> FieldElement {
        if a.0 == 0 {
            return a;
        }
        match &self.0.arith {
            Arith::Full { inv, .. } => FieldElement(u32::from(inv[a.0 as usize])),
            Arith::Log { log, exp } => {
                let q1 = (self.order() - 1) as u32;
                let l = log[a.0 as usize];
                FieldElement(exp[((q1 - l) % q1) as usize])
            }
            Arith::Clmul => self.pow(a, self.order() - 2),
        }
    }

    /// `a / b`; panics in debug builds when `b` is zero.
    pub fn div(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        debug_assert!(!b.is_zero(), "division by zero in {self:?}");
        self.mul(a, self.inv(b))
    }

    pub fn pow(&self, a: FieldElement, mut e: u64) -> FieldElement {
        let mut base = a;
        let mut acc = FieldElement::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative order of a nonzero element.
    pub fn multiplicative_order(&self, a: FieldElement) -> Option<u64> {
        multiplicative_order(&self.0, a.0)
    }

    /// The `i`-th element of the canonical enumeration 0, 1, g, g^2, ...
    pub fn enumerate(&self, i: u64) -> FieldElement {
        debug_assert!(i < self.order());
        if i == 0 {
            FieldElement::ZERO
        } else {
            self.pow(self.generator(), i - 1)
        }
    }

    /// The first `n` elements of the canonical enumeration.
    pub fn enumeration(&self, n: usize) -> Vec<FieldElement> {
        let mut out = Vec::with_capacity(n);
        if n == 0 {
            return out;
        }
        out.push(FieldElement::ZERO);
        let g = self.generator();
        let mut cur = FieldElement::ONE;
        for _ in 1..n {
            out.push(cur);
            cur = self.mul(cur, g);
        }
        out
    }

    /// Number of bytes in the serialized form of an element.
    pub fn byte_len(&self) -> usize {
        self.0.k.div_ceil(8) as usize
    }

    pub fn to_bytes(&self, e: FieldElement) -> Vec<u8> {
        e.0.to_le_bytes()[..self.byte_len()].to_vec()
    }

    pub fn from_bytes(&self, bytes: &[u8]) -> Result<FieldElement> {
        if bytes.len() != self.byte_len() {
            return Err(invalid(format!(
                "expected {} bytes for a GF(2^{}) element, got {}",
                self.byte_len(),
                self.0.k,
                bytes.len()
            )));
        }
        let mut buf = [0u8; 4];
        buf[..bytes.len()].copy_from_slice(bytes);
        self.element(u32::from_le_bytes(buf))
    }

    /// Reduces a carry-less product of degree < 2k.
    #[inline]
    fn reduce(&self, mut p: u64) -> u32 {
        reduce_with(self.0.k, self.0.modulus, &mut p);
        p as u32
    }

    /// Sum of products `sum a_i * b_i`.
    pub fn dot(&self, a: &[FieldElement], b: &[FieldElement]) -> FieldElement {
        a.iter().zip(b).fold(FieldElement::ZERO, |acc, (&x, &y)| acc + self.mul(x, y))
    }
}

#[inline]
fn reduce_with(k: u32, modulus: u64, p: &mut u64) {
    let low = modulus ^ (1u64 << k);
    // Fold the part above x^k back down: x^k = low(x).
    loop {
        let hi = *p >> k;
        if hi == 0 {
            break;
        }
        *p = (*p & ((1u64 << k) - 1)) ^ clmul64(hi, low);
    }
}

/// Carry-less product of two values below 2^32.
#[inline]
fn clmul(a: u32, b: u32) -> u64 {
    clmul64(u64::from(a), u64::from(b))
}

/// Carry-less product; the result must fit in 64 bits.
#[inline]
fn clmul64(a: u64, b: u64) -> u64 {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("pclmulqdq") {
            // SAFETY: the feature was detected at runtime.
            return unsafe { clmul_pclmul(a, b) };
        }
    }
    clmul_soft(a, b)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "pclmulqdq,sse2")]
unsafe fn clmul_pclmul(a: u64, b: u64) -> u64 {
    use std::arch::x86_64::{_mm_clmulepi64_si128, _mm_cvtsi128_si64, _mm_set_epi64x};
    let va = _mm_set_epi64x(0, a as i64);
    let vb = _mm_set_epi64x(0, b as i64);
    _mm_cvtsi128_si64(_mm_clmulepi64_si128(va, vb, 0)) as u64
}

fn clmul_soft(a: u64, mut b: u64) -> u64 {
    let mut acc = 0u64;
    let mut shift = 0;
    while b != 0 {
        if b & 1 == 1 {
            acc ^= a << shift;
        }
        b >>= 1;
        shift += 1;
    }
    acc
}

fn mul_plain(inner: &Inner, a: u32, b: u32) -> u32 {
    let mut p = clmul(a, b);
    reduce_with(inner.k, inner.modulus, &mut p);
    p as u32
}

fn pow_plain(inner: &Inner, a: u32, mut e: u64) -> u32 {
    let mut base = a;
    let mut acc = 1u32;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_plain(inner, acc, base);
        }
        base = mul_plain(inner, base, base);
        e >>= 1;
    }
    acc
}

fn multiplicative_order(inner: &Inner, a: u32) -> Option<u64> {
    if a == 0 {
        return None;
    }
    let mut order = (1u64 << inner.k) - 1;
    for &p in &inner.order_factors {
        while order.is_multiple_of(p) && pow_plain(inner, a, order / p) == 1 {
            order /= p;
        }
    }
    Some(order)
}

fn find_generator(inner: &Inner) -> u32 {
    let group = (1u64 << inner.k) - 1;
    (1..=group as u32)
        .find(|&a| multiplicative_order(inner, a) == Some(group))
        .expect("multiplicative group of a finite field is cyclic")
}

fn build_tables(inner: &Inner) -> Arith {
    let q = 1usize << inner.k;
    let g = inner.generator;
    let mut exp = vec![0u32; 2 * (q - 1)];
    let mut log = vec![0u32; q];
    let mut cur = 1u32;
    for (i, slot) in exp.iter_mut().enumerate().take(q - 1) {
        *slot = cur;
        log[cur as usize] = i as u32;
        cur = mul_plain(inner, cur, g);
    }
    for i in q - 1..2 * (q - 1) {
        exp[i] = exp[i - (q - 1)];
    }
    if inner.k > FULL_TABLE_MAX_K {
        return Arith::Log { log, exp };
    }
    let mut mul = vec![0u8; q * q];
    let mut inv = vec![0u8; q];
    for a in 1..q {
        for b in 1..q {
            mul[(a << inner.k) | b] = exp[(log[a] + log[b]) as usize] as u8;
        }
        inv[a] = exp[((q as u32 - 1 - log[a]) % (q as u32 - 1)) as usize] as u8;
    }
    Arith::Full { mul, inv }
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n.is_multiple_of(p) {
            out.push(p);
            while n.is_multiple_of(p) {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Remainder of `a` modulo `m` as polynomials over GF(2).
fn gf2_rem(mut a: u64, m: u64) -> u64 {
    let dm = 63 - m.leading_zeros();
    while a != 0 && 63 - a.leading_zeros() >= dm {
        a ^= m << (63 - a.leading_zeros() - dm);
    }
    a
}

fn gf2_gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = gf2_rem(a, b);
        a = b;
        b = r;
    }
    a
}

/// Trial division by every polynomial of degree 1..=k/2.
fn is_irreducible_by_search(modulus: u64, k: u32) -> bool {
    if k == 1 {
        return true;
    }
    (2u64..1u64 << (k / 2 + 1)).all(|d| gf2_rem(modulus, d) != 0)
}

/// Rabin's test: x^(2^k) = x mod f, and gcd(x^(2^(k/p)) - x, f) = 1 for
/// every prime p dividing k.
fn is_irreducible_rabin(modulus: u64, k: u32) -> bool {
    let inner = Inner { k, modulus, generator: 1, order_factors: Vec::new(), arith: Arith::Clmul };
    let x = if k == 1 { gf2_rem(2, modulus) } else { 2u64 };
    let frob = |times: u32| {
        let mut v = x as u32;
        for _ in 0..times {
            v = mul_plain(&inner, v, v);
        }
        u64::from(v)
    };
    if frob(k) != x {
        return false;
    }
    prime_factors(u64::from(k)).into_iter().all(|p| gf2_gcd(modulus, frob(k / p as u32) ^ x) == 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Schoolbook multiplication followed by bit-by-bit reduction.
    fn mul_oracle(a: u32, b: u32, k: u32, modulus: u64) -> u32 {
        let mut p = 0u64;
        for i in 0..32 {
            if (b >> i) & 1 == 1 {
                p ^= u64::from(a) << i;
            }
        }
        for bit in (k..64).rev() {
            if (p >> bit) & 1 == 1 {
                p ^= modulus << (bit - k);
            }
        }
        p as u32
    }

    #[test]
    fn small_products() {
        let gf2 = Field::new(1).unwrap();
        assert_eq!(gf2.mul(FieldElement::ONE, FieldElement::ONE), FieldElement::ONE);
        let gf4 = Field::new(2).unwrap();
        assert_eq!(gf4.modulus(), 0b111);
        assert_eq!(gf4.mul(FieldElement(2), FieldElement(2)), FieldElement(3));
        for k in [1, 5, 12, 20, 32] {
            let f = Field::new(k).unwrap();
            assert_eq!(f.mul(FieldElement(1), FieldElement::ZERO), FieldElement::ZERO);
        }
    }

    #[test]
    fn every_representation_matches_schoolbook() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for k in 1..=32 {
            let f = Field::new(k).unwrap();
            for _ in 0..500 {
                let a = f.random(&mut rng);
                let b = f.random(&mut rng);
                assert_eq!(f.mul(a, b).bits(), mul_oracle(a.0, b.0, k, f.modulus()), "k={k}");
            }
        }
    }

    #[test]
    fn soft_and_hardware_clmul_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let a: u32 = rng.random();
            let b: u32 = rng.random();
            assert_eq!(clmul_soft(u64::from(a), u64::from(b)), clmul(a, b));
        }
    }

    #[test]
    fn table_moduli_are_irreducible_and_x_generates() {
        for k in 1..=32u32 {
            let m = MODULI[(k - 1) as usize];
            assert!(is_irreducible_rabin(m, k), "k={k}");
            if k <= 16 {
                assert!(is_irreducible_by_search(m, k), "k={k}");
            }
            let f = Field::new(k).unwrap();
            let expected = if k == 1 { 1 } else { 2 };
            assert_eq!(f.generator().bits(), expected, "k={k}");
        }
    }

    #[test]
    fn reducible_modulus_rejected() {
        // x^4 + 1 = (x + 1)^4
        assert!(Field::with_modulus(4, 0x11).is_err());
        // x^20 + x^10 + 1 is divisible by x^2 + x + 1
        assert!(Field::with_modulus(20, (1 << 20) | (1 << 10) | 1).is_err());
        // x^4 + x^3 + x^2 + x + 1 is irreducible but not primitive
        let f = Field::with_modulus(4, 0x1F).unwrap();
        assert_eq!(f.multiplicative_order(f.generator()), Some(15));
        assert_ne!(f.generator().bits(), 2);
    }

    #[test]
    fn inverses_exhaustive_up_to_k8() {
        for k in 1..=8 {
            let f = Field::new(k).unwrap();
            for a in 1..f.order() as u32 {
                assert_eq!(f.mul(FieldElement(a), f.inv(FieldElement(a))), FieldElement::ONE);
            }
        }
        for k in [13, 17, 29] {
            let f = Field::new(k).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(u64::from(k));
            for _ in 0..200 {
                let a = f.random_nonzero(&mut rng);
                assert_eq!(f.mul(a, f.inv(a)), FieldElement::ONE);
            }
        }
    }

    #[test]
    fn distributivity_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in [3, 8, 11, 16, 23, 32] {
            let f = Field::new(k).unwrap();
            for _ in 0..10_000 {
                let (a, b, c) = (f.random(&mut rng), f.random(&mut rng), f.random(&mut rng));
                assert_eq!(f.mul(a + b, c), f.mul(a, c) + f.mul(b, c));
            }
        }
    }

    #[test]
    fn enumeration_is_a_permutation() {
        let f = Field::new(5).unwrap();
        let mut all: Vec<u32> = f.enumeration(32).iter().map(|e| e.bits()).collect();
        assert_eq!(&all[..3], &[0, 1, 2]);
        all.sort_unstable();
        assert_eq!(all, (0..32).collect::<Vec<_>>());
        assert_eq!(f.enumerate(7), f.enumeration(8)[7]);
    }

    #[test]
    fn byte_roundtrip() {
        let f = Field::new(12).unwrap();
        let e = f.element(0xABC).unwrap();
        assert_eq!(f.to_bytes(e), vec![0xBC, 0x0A]);
        assert_eq!(f.from_bytes(&[0xBC, 0x0A]).unwrap(), e);
        assert!(f.from_bytes(&[0xFF, 0xFF]).is_err());
        assert!(f.element(1 << 12).is_err());
    }

    #[test]
    fn spec_roundtrip() {
        let f = Field::new(8).unwrap();
        let spec = f.spec();
        assert_eq!(spec.modulus_hex.as_deref(), Some("0x11d"));
        assert_eq!(Field::from_spec(&spec).unwrap(), f);
        let json = serde_json::to_string(&spec).unwrap();
        let back: FieldSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
        assert!(serde_json::from_str::<FieldSpec>(r#"{"k":3,"extra":1}"#).is_err());
    }
}
