//! Concatenation of a large-alphabet code with a small binary linear code.
//!
//! Each outer symbol is written as a big-endian bit string, cut into chunks
//! of k_in bits (the last chunk zero-padded), and every chunk is encoded by
//! the inner code. Bit j of an inner codeword is bit j (LSB first) of its
//! integer representation.

use std::cell::Cell;

use rayon::prelude::*;

use crate::code_api::{Alphabet, Corrected, ErasableOracle, LocalCode, Oracle, Rational, TestOutcome, TrialRng};
use crate::error::{infeasible, invalid, Result};
use crate::gf::{Field, FieldElement};

/// Largest inner dimension accepted (exhaustive scans are 2^k_in).
pub const MAX_INNER_DIM: usize = 20;

/// Binary linear [n_in, k_in] code with exhaustively verified distance.
#[derive(Clone, Debug)]
pub struct InnerBinaryCode {
    n: usize,
    k: usize,
    /// Generator rows as n-bit integers.
    rows: Vec<u32>,
    /// Codeword of every message (message bit i selects row i).
    table: Vec<u32>,
    min_dist: usize,
}

impl InnerBinaryCode {
    /// Code with the given generator rows; rejects rank-deficient input.
    pub fn from_generator(n: usize, rows: Vec<u32>) -> Result<InnerBinaryCode> {
        let k = rows.len();
        if n == 0 || n > 32 {
            return Err(invalid(format!("inner length {n} must lie in 1..=32")));
        }
        if k == 0 || k > MAX_INNER_DIM || k > n {
            return Err(invalid(format!("inner dimension {k} must lie in 1..={}", MAX_INNER_DIM.min(n))));
        }
        let mask = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
        if rows.iter().any(|&r| r & !mask != 0) {
            return Err(invalid("generator row wider than the block length"));
        }
        let mut table = vec![0u32; 1 << k];
        for m in 1..table.len() {
            let low = m.trailing_zeros() as usize;
            table[m] = table[m & (m - 1)] ^ rows[low];
        }
        let min_dist = table[1..].iter().map(|c| c.count_ones() as usize).min().unwrap_or(0);
        if min_dist == 0 {
            return Err(invalid("generator rows are linearly dependent"));
        }
        Ok(InnerBinaryCode { n, k, rows, table, min_dist })
    }

    /// Lexicographic greedy search: scan n-bit vectors in increasing order
    /// and keep a vector when its whole coset of the current span has weight
    /// at least `target`.
    pub fn greedy(n: usize, k: usize, target: usize) -> Result<InnerBinaryCode> {
        if n == 0 || n > 24 {
            return Err(invalid(format!("greedy search supports 1 <= n <= 24, got {n}")));
        }
        if k == 0 || k > MAX_INNER_DIM || k > n {
            return Err(invalid(format!("inner dimension {k} out of range for n={n}")));
        }
        let mut rows: Vec<u32> = Vec::with_capacity(k);
        let mut span: Vec<u32> = vec![0];
        for v in 1u32..(1 << n) {
            if rows.len() == k {
                break;
            }
            if span.iter().all(|&c| (c ^ v).count_ones() as usize >= target) {
                let shifted: Vec<u32> = span.iter().map(|&c| c ^ v).collect();
                span.extend(shifted);
                rows.push(v);
            }
        }
        if rows.len() < k {
            return Err(infeasible(format!(
                "greedy search found only {} of {k} rows for an [{n}, {k}, {target}] code",
                rows.len()
            )));
        }
        let code = InnerBinaryCode::from_generator(n, rows)?;
        if code.min_dist < target {
            return Err(infeasible("greedy code misses the target distance"));
        }
        Ok(code)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn rows(&self) -> &[u32] {
        &self.rows
    }
    /// Exact minimum distance from the exhaustive weight scan.
    pub fn min_dist(&self) -> usize {
        self.min_dist
    }

    pub fn encode(&self, message: u32) -> u32 {
        self.table[message as usize & ((1 << self.k) - 1)]
    }

    pub fn is_codeword(&self, word: u32) -> bool {
        self.table.contains(&word)
    }

    /// Nearest codeword by exhaustive search; ties go to the smaller
    /// message. Returns (message, distance).
    pub fn decode(&self, word: u32) -> (u32, usize) {
        let mut best = (0u32, usize::MAX);
        for (m, &c) in self.table.iter().enumerate() {
            let dist = (c ^ word).count_ones() as usize;
            if dist < best.1 {
                best = (m as u32, dist);
            }
        }
        best
    }

    /// Message of an exact codeword.
    pub fn unencode(&self, word: u32) -> Option<u32> {
        self.table.iter().position(|&c| c == word).map(|m| m as u32)
    }
}

/// An outer code over a large alphabet with each symbol encoded by a binary
/// inner code.
#[derive(Clone, Debug)]
pub struct ConcatenatedCode<O: LocalCode> {
    outer: O,
    inner: InnerBinaryCode,
    gf2: Field,
    symbol_bits: usize,
    chunks: usize,
}

impl<O: LocalCode> ConcatenatedCode<O> {
    pub fn new(outer: O, inner: InnerBinaryCode) -> Result<ConcatenatedCode<O>> {
        let symbol_bits = outer.alphabet().bits();
        if symbol_bits == 0 || symbol_bits > 64 {
            return Err(invalid(format!("outer symbols of {symbol_bits} bits are not supported")));
        }
        let chunks = symbol_bits.div_ceil(inner.k());
        Ok(ConcatenatedCode { outer, inner, gf2: Field::new(1)?, symbol_bits, chunks })
    }

    pub fn outer(&self) -> &O {
        &self.outer
    }
    pub fn inner(&self) -> &InnerBinaryCode {
        &self.inner
    }
    /// Inner blocks per outer symbol.
    pub fn chunks(&self) -> usize {
        self.chunks
    }
    /// Bits per outer symbol in the binary word.
    pub fn span(&self) -> usize {
        self.chunks * self.inner.n()
    }
    /// Fraction of inner message bits carrying symbol bits.
    pub fn fill(&self) -> Rational {
        Rational::new(self.symbol_bits as u128, (self.chunks * self.inner.k()) as u128)
    }

    /// Chunk messages of one outer symbol.
    fn split(&self, sym: &O::Symbol) -> Vec<u32> {
        let v = self.outer.alphabet().to_u64(sym);
        let (b, k) = (self.symbol_bits, self.inner.k());
        // Bit p of the big-endian string is bit (b - 1 - p) of v.
        let bit = |p: usize| if p < b { (v >> (b - 1 - p)) & 1 } else { 0 };
        (0..self.chunks).map(|c| (0..k).fold(0u32, |acc, i| acc | ((bit(c * k + i) as u32) << (k - 1 - i)))).collect()
    }

    /// Inverse of `split`; `None` when a padding bit is set.
    fn join(&self, chunks: &[u32]) -> Option<O::Symbol> {
        let (b, k) = (self.symbol_bits, self.inner.k());
        let mut v = 0u64;
        for (c, &m) in chunks.iter().enumerate() {
            for i in 0..k {
                let bit = u64::from((m >> (k - 1 - i)) & 1);
                let p = c * k + i;
                if p < b {
                    v |= bit << (b - 1 - p);
                } else if bit != 0 {
                    return None;
                }
            }
        }
        Some(self.outer.alphabet().from_u64(v))
    }

    fn symbol_bits_out(&self, sym: &O::Symbol) -> Vec<FieldElement> {
        let mut out = Vec::with_capacity(self.span());
        for m in self.split(sym) {
            let cw = self.inner.encode(m);
            out.extend((0..self.inner.n()).map(|j| FieldElement::from_bits((cw >> j) & 1)));
        }
        out
    }

    pub fn encode_outer_word(&self, outer_word: &[O::Symbol]) -> Vec<FieldElement> {
        outer_word.iter().flat_map(|s| self.symbol_bits_out(s)).collect()
    }

    fn read_chunk(&self, bits: impl Iterator<Item = FieldElement>) -> u32 {
        bits.enumerate().fold(0u32, |acc, (j, b)| acc | (b.bits() << j))
    }

    /// Outer word recovered by exact inner unencoding; `None` when a block
    /// is not an inner codeword.
    pub fn decode_exact(&self, word: &[FieldElement]) -> Option<Vec<O::Symbol>> {
        if word.len() != self.block_length() {
            return None;
        }
        word.chunks(self.span())
            .map(|sym_bits| {
                let msgs: Option<Vec<u32>> = sym_bits
                    .chunks(self.inner.n())
                    .map(|blk| self.inner.unencode(self.read_chunk(blk.iter().copied())))
                    .collect();
                self.join(&msgs?)
            })
            .collect()
    }
}

/// Outer symbols read through nearest-codeword inner decoding.
struct DecodingOracle<'a, O: LocalCode> {
    code: &'a ConcatenatedCode<O>,
    bits: &'a dyn Oracle<FieldElement>,
    reads: Cell<u64>,
}

impl<O: LocalCode> Oracle<O::Symbol> for DecodingOracle<'_, O> {
    fn len(&self) -> usize {
        self.code.outer.block_length()
    }

    fn query(&self, i: usize) -> O::Symbol {
        let c = self.code;
        let n_in = c.inner.n();
        let start = i * c.span();
        let msgs: Vec<u32> = (0..c.chunks)
            .map(|ch| {
                let base = start + ch * n_in;
                let word = c.read_chunk((0..n_in).map(|j| self.bits.query(base + j)));
                c.inner.decode(word).0
            })
            .collect();
        self.reads.set(self.reads.get() + c.span() as u64);
        // A decoded padding bit cannot be represented; drop it.
        let k = c.inner.k();
        let spare = c.chunks * k - c.symbol_bits;
        let mut msgs = msgs;
        if let Some(last) = msgs.last_mut() {
            *last &= !((1u32 << spare) - 1);
        }
        c.join(&msgs).expect("padding bits cleared")
    }
}

/// Outer symbols for the tester: a block that is not an inner codeword, or
/// an erased bit, reads as erased.
struct CheckingOracle<'a, O: LocalCode> {
    code: &'a ConcatenatedCode<O>,
    bits: &'a dyn ErasableOracle<FieldElement>,
}

impl<O: LocalCode> ErasableOracle<O::Symbol> for CheckingOracle<'_, O> {
    fn len(&self) -> usize {
        self.code.outer.block_length()
    }

    fn query(&self, i: usize) -> Option<O::Symbol> {
        let c = self.code;
        let n_in = c.inner.n();
        let start = i * c.span();
        let mut msgs = Vec::with_capacity(c.chunks);
        // Read the whole span before deciding, as a non-adaptive tester would.
        let bits: Vec<Option<FieldElement>> = (start..start + c.span()).map(|p| self.bits.query(p)).collect();
        for blk in bits.chunks(n_in) {
            let word: Option<Vec<FieldElement>> = blk.iter().copied().collect();
            msgs.push(c.inner.unencode(c.read_chunk(word?.into_iter()))?);
        }
        c.join(&msgs)
    }
}

impl<O: LocalCode> LocalCode for ConcatenatedCode<O> {
    type Symbol = FieldElement;

    fn code_id(&self) -> String {
        format!("concat[{},{},{}]<{}>", self.inner.n(), self.inner.k(), self.inner.min_dist(), self.outer.code_id())
    }

    fn block_length(&self) -> usize {
        self.outer.block_length() * self.span()
    }

    fn alphabet(&self) -> Alphabet {
        Alphabet::new(&self.gf2, 1)
    }

    fn message_field(&self) -> Field {
        self.outer.message_field()
    }

    fn message_len(&self) -> usize {
        self.outer.message_len()
    }

    /// delta_out * d_in / n_in.
    fn distance_bound(&self) -> Rational {
        self.outer.distance_bound() * Rational::new(self.inner.min_dist() as u128, self.inner.n() as u128)
    }

    fn encode(&self, message: &[FieldElement]) -> Result<Vec<FieldElement>> {
        Ok(self.encode_outer_word(&self.outer.encode(message)?))
    }

    fn is_codeword(&self, word: &[FieldElement]) -> bool {
        self.decode_exact(word).is_some_and(|w| self.outer.is_codeword(&w))
    }

    /// tau_out / 4.
    fn correction_radius(&self) -> Option<Rational> {
        self.outer.correction_radius().map(|t| t / Rational::from_integer(4))
    }

    fn correct_budget(&self) -> Option<u64> {
        self.outer.correct_budget().map(|q| q * self.span() as u64)
    }

    fn local_correct(
        &self,
        oracle: &dyn Oracle<FieldElement>,
        i: usize,
        rng: &mut TrialRng,
    ) -> Result<Corrected<FieldElement>> {
        if i >= self.block_length() {
            return Err(invalid(format!("bit {i} out of range")));
        }
        let emu = DecodingOracle { code: self, bits: oracle, reads: Cell::new(0) };
        let sym_index = i / self.span();
        let c = self.outer.local_correct(&emu, sym_index, rng)?;
        let bits = self.symbol_bits_out(&c.symbol);
        Ok(Corrected { symbol: bits[i % self.span()], emulated_queries: c.emulated_queries * self.span() as u64 })
    }

    fn test_budget(&self) -> Option<u64> {
        self.outer.test_budget().map(|q| q * self.span() as u64)
    }

    fn local_test(&self, oracle: &dyn ErasableOracle<FieldElement>, rng: &mut TrialRng) -> Result<TestOutcome> {
        let emu = CheckingOracle { code: self, bits: oracle };
        let out = self.outer.local_test(&emu, rng)?;
        Ok(TestOutcome { accept: out.accept, emulated_queries: out.emulated_queries * self.span() as u64 })
    }
}

/// Packs bits little-endian within bytes.
pub fn pack_bits(bits: &[FieldElement]) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (i, b) in bits.iter().enumerate() {
        out[i / 8] |= (b.bits() as u8 & 1) << (i % 8);
    }
    out
}

pub fn unpack_bits(bytes: &[u8], len: usize) -> Result<Vec<FieldElement>> {
    if bytes.len() != len.div_ceil(8) {
        return Err(invalid("packed bit string has the wrong length"));
    }
    Ok((0..len).map(|i| FieldElement::from_bits(u32::from((bytes[i / 8] >> (i % 8)) & 1))).collect())
}

/// Exhaustive check that nearest-codeword decoding corrects every pattern
/// of fewer than d/2 errors; returns the number of failures.
pub fn inner_decoding_failures(code: &InnerBinaryCode) -> usize {
    let t = (code.min_dist() - 1) / 2;
    let n = code.n();
    let patterns: Vec<u32> = (0u32..(1 << n)).filter(|e| e.count_ones() as usize <= t).collect();
    (0u32..(1 << code.k()))
        .into_par_iter()
        .map(|m| {
            let cw = code.encode(m);
            patterns.iter().filter(|&&e| code.decode(cw ^ e).0 != m).count()
        })
        .sum()
}
