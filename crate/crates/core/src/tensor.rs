//! Tensor powers of a Reed-Solomon code with a random-plane local tester.
//!
//! Arrays are flat, axis-0 major: entry (x_0, ..., x_{m-1}) lives at
//! sum x_j l^(m-1-j).

use std::io::{Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::code_api::{Alphabet, ErasableOracle, LocalCode, Rational, TestOutcome, TrialRng};
use crate::error::{invalid, Result};
use crate::gf::{Field, FieldElement};
use crate::reed_solomon::RsCode;

#[derive(Clone, Debug)]
pub struct TensorCode {
    base: RsCode,
    m: usize,
    rho_base: Rational,
}

/// One choice of the plane tester: two free axes, fixed values elsewhere.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plane {
    pub axes: (usize, usize),
    /// Coordinates of all m axes; entries on the free axes are ignored.
    pub anchor: Vec<usize>,
}

impl TensorCode {
    /// Tensor power `m >= 2` of `base`, with the default single-trial
    /// soundness constant 1/(4m).
    pub fn new(base: RsCode, m: usize) -> Result<TensorCode> {
        let rho = Rational::new(1, 4 * m as u128);
        TensorCode::with_rho(base, m, rho)
    }

    pub fn with_rho(base: RsCode, m: usize, rho_base: Rational) -> Result<TensorCode> {
        if m < 2 {
            return Err(invalid("tensor power must be at least 2"));
        }
        if rho_base <= Rational::from_integer(0) || rho_base > Rational::from_integer(1) {
            return Err(invalid("rho_base must lie in (0, 1]"));
        }
        let l = base.n();
        if (l as u128).checked_pow(m as u32).is_none_or(|n| n > 1 << 30) {
            return Err(invalid(format!("block length {l}^{m} is too large")));
        }
        Ok(TensorCode { base, m, rho_base })
    }

    pub fn base(&self) -> &RsCode {
        &self.base
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn side(&self) -> usize {
        self.base.n()
    }
    pub fn rho_base(&self) -> Rational {
        self.rho_base
    }

    /// ceil(4 / rho_base) plane tests per local test.
    pub fn repetitions(&self) -> usize {
        let r = Rational::from_integer(4) / self.rho_base;
        r.ceil().to_integer() as usize
    }

    /// Encodes a message of side k along the axes in `order`.
    pub fn encode_with_order(&self, message: &[FieldElement], order: &[usize]) -> Result<Vec<FieldElement>> {
        let (k, l, m) = (self.base.k(), self.side(), self.m);
        if message.len() != k.pow(m as u32) {
            return Err(invalid(format!("message has {} entries, expected {}", message.len(), k.pow(m as u32))));
        }
        let mut sorted = order.to_vec();
        sorted.sort_unstable();
        if sorted != (0..m).collect::<Vec<_>>() {
            return Err(invalid("axis order must be a permutation"));
        }
        let mut dims = vec![k; m];
        let mut data = message.to_vec();
        for &axis in order {
            let stride: usize = dims[axis + 1..].iter().product();
            let outer: usize = dims[..axis].iter().product();
            let mut new_dims = dims.clone();
            new_dims[axis] = l;
            let mut next = vec![FieldElement::ZERO; outer * l * stride];
            let mut line = vec![FieldElement::ZERO; k];
            for o in 0..outer {
                for s in 0..stride {
                    for (j, x) in line.iter_mut().enumerate() {
                        *x = data[(o * k + j) * stride + s];
                    }
                    let enc = self.base.encode(&line)?;
                    for (j, &x) in enc.iter().enumerate() {
                        next[(o * l + j) * stride + s] = x;
                    }
                }
            }
            dims = new_dims;
            data = next;
        }
        Ok(data)
    }

    /// Indices of the axis-parallel line along `axis` through `anchor`.
    fn line_indices(&self, axis: usize, anchor: &[usize]) -> impl Iterator<Item = usize> + '_ {
        let l = self.side();
        let stride = l.pow((self.m - 1 - axis) as u32);
        let base_idx: usize = anchor
            .iter()
            .enumerate()
            .map(|(j, &x)| if j == axis { 0 } else { x * l.pow((self.m - 1 - j) as u32) })
            .sum();
        (0..l).map(move |x| base_idx + x * stride)
    }

    /// Membership: every axis-parallel line is a base codeword.
    pub fn check_lines(&self, word: &[FieldElement]) -> bool {
        let l = self.side();
        if word.len() != l.pow(self.m as u32) {
            return false;
        }
        let mut line = vec![FieldElement::ZERO; l];
        for axis in 0..self.m {
            for idx in 0..l.pow(self.m as u32 - 1) {
                // Spread idx over the other axes.
                let mut anchor = vec![0; self.m];
                let mut rest = idx;
                for j in (0..self.m).rev().filter(|&j| j != axis) {
                    anchor[j] = rest % l;
                    rest /= l;
                }
                for (x, i) in line.iter_mut().zip(self.line_indices(axis, &anchor)) {
                    *x = word[i];
                }
                if !self.base.is_codeword(&line) {
                    return false;
                }
            }
        }
        true
    }

    /// Number of distinct plane choices: C(m,2) l^(m-2).
    pub fn plane_count(&self) -> usize {
        self.m * (self.m - 1) / 2 * self.side().pow(self.m as u32 - 2)
    }

    /// The `idx`-th plane choice: axis pairs in lex order, then anchors in
    /// axis-0-major order over the fixed axes.
    pub fn plane(&self, idx: usize) -> Plane {
        let l = self.side();
        let per_pair = l.pow(self.m as u32 - 2);
        let mut pair = idx / per_pair;
        let mut rest = idx % per_pair;
        let mut axes = (0, 1);
        'found: for a in 0..self.m {
            for b in a + 1..self.m {
                if pair == 0 {
                    axes = (a, b);
                    break 'found;
                }
                pair -= 1;
            }
        }
        let mut anchor = vec![0; self.m];
        for j in (0..self.m).rev().filter(|&j| j != axes.0 && j != axes.1) {
            anchor[j] = rest % l;
            rest /= l;
        }
        Plane { axes, anchor }
    }

    pub fn random_plane(&self, rng: &mut TrialRng) -> Plane {
        self.plane(rng.random_range(0..self.plane_count()))
    }

    /// Reads the l^2 entries of `plane` (row index along the first free
    /// axis) and checks every row and column against the base code. Any
    /// erased entry rejects.
    pub fn plane_accepts(&self, oracle: &dyn ErasableOracle<FieldElement>, plane: &Plane) -> bool {
        let l = self.side();
        let (a, b) = plane.axes;
        let sa = l.pow((self.m - 1 - a) as u32);
        let sb = l.pow((self.m - 1 - b) as u32);
        let origin: usize = plane
            .anchor
            .iter()
            .enumerate()
            .map(|(j, &x)| if j == a || j == b { 0 } else { x * l.pow((self.m - 1 - j) as u32) })
            .sum();
        let mut grid = vec![FieldElement::ZERO; l * l];
        let mut erased = false;
        for i in 0..l {
            for j in 0..l {
                match oracle.query(origin + i * sa + j * sb) {
                    Some(v) => grid[i * l + j] = v,
                    None => erased = true,
                }
            }
        }
        if erased {
            return false;
        }
        let mut line = vec![FieldElement::ZERO; l];
        for i in 0..l {
            if !self.base.is_codeword(&grid[i * l..(i + 1) * l]) {
                return false;
            }
            for (j, x) in line.iter_mut().enumerate() {
                *x = grid[j * l + i];
            }
            if !self.base.is_codeword(&line) {
                return false;
            }
        }
        true
    }

    /// One uniformly random plane test.
    pub fn plane_test(&self, oracle: &dyn ErasableOracle<FieldElement>, rng: &mut TrialRng) -> Result<bool> {
        if self.m < 3 {
            return Err(invalid("the plane test needs m >= 3"));
        }
        let plane = self.random_plane(rng);
        Ok(self.plane_accepts(oracle, &plane))
    }
}

impl LocalCode for TensorCode {
    type Symbol = FieldElement;

    fn code_id(&self) -> String {
        format!("tensor(l={},k={},m={},q={})", self.side(), self.base.k(), self.m, self.base.field().order())
    }

    fn block_length(&self) -> usize {
        self.side().pow(self.m as u32)
    }

    fn alphabet(&self) -> Alphabet {
        Alphabet::new(self.base.field(), 1)
    }

    fn message_field(&self) -> Field {
        self.base.field().clone()
    }

    fn message_len(&self) -> usize {
        self.base.k().pow(self.m as u32)
    }

    /// delta_base^m.
    fn distance_bound(&self) -> Rational {
        let base = Rational::new(self.base.min_distance() as u128, self.side() as u128);
        (0..self.m).fold(Rational::from_integer(1), |acc, _| acc * base)
    }

    fn encode(&self, message: &[FieldElement]) -> Result<Vec<FieldElement>> {
        self.encode_with_order(message, &(0..self.m).collect::<Vec<_>>())
    }

    fn is_codeword(&self, word: &[FieldElement]) -> bool {
        self.check_lines(word)
    }

    fn test_budget(&self) -> Option<u64> {
        (self.m >= 3).then(|| (self.repetitions() * self.side() * self.side()) as u64)
    }

    /// ceil(4/rho_base) independent plane tests; rejects at the first
    /// failing plane.
    fn local_test(&self, oracle: &dyn ErasableOracle<FieldElement>, rng: &mut TrialRng) -> Result<TestOutcome> {
        let mut queries = 0u64;
        for _ in 0..self.repetitions() {
            queries += (self.side() * self.side()) as u64;
            if !self.plane_test(oracle, rng)? {
                return Ok(TestOutcome { accept: false, emulated_queries: queries });
            }
        }
        Ok(TestOutcome { accept: true, emulated_queries: queries })
    }
}

#[derive(Serialize, Deserialize)]
struct ArrayHeader {
    dims: Vec<usize>,
    field_k: u32,
}

/// Writes an array as a JSON shape header line followed by element bytes.
pub fn write_array<W: Write>(code: &TensorCode, data: &[FieldElement], mut w: W) -> Result<()> {
    let header = ArrayHeader { dims: vec![code.side(); code.m()], field_k: code.base().field().k() };
    let io = |e: std::io::Error| invalid(format!("write failed: {e}"));
    serde_json::to_writer(&mut w, &header).map_err(|e| invalid(e.to_string()))?;
    w.write_all(b"\n").map_err(io)?;
    for &x in data {
        w.write_all(&code.base().field().to_bytes(x)).map_err(io)?;
    }
    Ok(())
}

pub fn read_array<R: Read>(code: &TensorCode, mut r: R) -> Result<Vec<FieldElement>> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf).map_err(|e| invalid(format!("read failed: {e}")))?;
    let nl = buf.iter().position(|&b| b == b'\n').ok_or_else(|| invalid("missing array header"))?;
    let header: ArrayHeader = serde_json::from_slice(&buf[..nl]).map_err(|e| invalid(e.to_string()))?;
    if header.dims != vec![code.side(); code.m()] || header.field_k != code.base().field().k() {
        return Err(invalid("array header does not match the code"));
    }
    let f = code.base().field();
    let width = f.byte_len();
    let body = &buf[nl + 1..];
    if body.len() != width * code.block_length() {
        return Err(invalid("array body has the wrong length"));
    }
    body.chunks(width).map(|c| f.from_bytes(c)).collect()
}
