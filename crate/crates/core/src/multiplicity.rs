//! Multiplicity codes: a degree-d polynomial in m variables is encoded by all
//! of its Hasse derivatives of order < s at every point of F^m.
//!
//! Layout conventions:
//! - points are ordered lexicographically over the canonical field
//!   enumeration, first coordinate most significant;
//! - a symbol lists the derivatives Q^(i)(a), |i| < s, in graded order
//!   (total order ascending, then exponent vectors in descending lex order);
//! - messages are coefficient vectors over the monomials of total degree
//!   <= d in the same graded order.

use std::collections::BTreeMap;

use rand::Rng;

use crate::code_api::{Alphabet, Corrected, LocalCode, Oracle, Rational, SystematicCode, TrialRng};
use crate::error::{infeasible, invalid, CodeError, Result};
use crate::gf::{Field, FieldElement};
use crate::linalg::{self, Matrix};
use crate::poly::{binom_odd, Poly};

/// Cap on the number of line subsets examined when resolving the target
/// symbol.
const MAX_CANDIDATE_SUBSETS: usize = 2000;

/// Sparse m-variate polynomial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiPoly {
    m: usize,
    terms: BTreeMap<Vec<u32>, FieldElement>,
}

impl MultiPoly {
    pub fn zero(m: usize) -> MultiPoly {
        MultiPoly { m, terms: BTreeMap::new() }
    }

    pub fn from_terms(m: usize, terms: impl IntoIterator<Item = (Vec<u32>, FieldElement)>) -> Result<MultiPoly> {
        let mut p = MultiPoly::zero(m);
        for (e, c) in terms {
            if e.len() != m {
                return Err(invalid(format!("exponent vector {e:?} has wrong length for m={m}")));
            }
            let slot = p.terms.entry(e).or_insert(FieldElement::ZERO);
            *slot += c;
        }
        p.terms.retain(|_, c| !c.is_zero());
        Ok(p)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &FieldElement)> {
        self.terms.iter()
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    pub fn eval(&self, f: &Field, point: &[FieldElement]) -> FieldElement {
        self.terms.iter().fold(FieldElement::ZERO, |acc, (e, &c)| {
            let mono = e.iter().zip(point).fold(FieldElement::ONE, |p, (&ei, &x)| f.mul(p, f.pow(x, u64::from(ei))));
            acc + f.mul(c, mono)
        })
    }

    /// Hasse derivative: C(e, i) mod 2 (componentwise) times the
    /// coefficient of x^e lands at x^(e - i).
    pub fn hasse(&self, i: &[u32]) -> MultiPoly {
        let terms = self.terms.iter().filter_map(|(e, &c)| {
            let ok = e.iter().zip(i).all(|(&ek, &ik)| binom_odd(ek as usize, ik as usize));
            ok.then(|| (e.iter().zip(i).map(|(&ek, &ik)| ek - ik).collect::<Vec<u32>>(), c))
        });
        MultiPoly::from_terms(self.m, terms).expect("lengths preserved")
    }
}

/// Exponent vectors of length `m` with total degree < `s`, in graded order.
pub fn graded_exponents(m: usize, below: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for total in 0..below {
        let mut level = Vec::new();
        compositions(m, total, &mut Vec::new(), &mut level);
        out.extend(level);
    }
    out
}

/// All vectors of length `m` summing to `total`, descending lex order.
fn compositions(m: usize, total: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if prefix.len() + 1 == m {
        prefix.push(total);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    if m == 0 {
        return;
    }
    for first in (0..=total).rev() {
        prefix.push(first);
        compositions(m, total - first, prefix, out);
        prefix.pop();
    }
}

fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * u128::from(n - i) / u128::from(i + 1))
}

/// Data for the systematic encoder.
#[derive(Clone, Debug)]
struct Systematic {
    /// (point index, slot within the symbol) of each message element.
    slots: Vec<(usize, usize)>,
    /// Maps information-slot values to monomial coefficients.
    inverse: Matrix,
}

/// Order-s multiplicity code of degree d in m variables over F_q.
#[derive(Clone, Debug)]
pub struct MultiplicityCode {
    field: Field,
    q: usize,
    m: usize,
    s: usize,
    d: usize,
    /// Derivative orders in a symbol.
    exps: Vec<Vec<u32>>,
    /// Monomials of the message space.
    monomials: Vec<Vec<u32>>,
    /// Field enumeration and its inverse (element bits -> index).
    points: Vec<FieldElement>,
    index_of: Vec<u32>,
    n_dirs: usize,
    line_radius: usize,
    correctable: bool,
    systematic: Option<Systematic>,
}

impl MultiplicityCode {
    pub fn new(field: &Field, m: usize, s: usize, d: usize) -> Result<MultiplicityCode> {
        if m == 0 {
            return Err(invalid("multiplicity codes need m >= 1"));
        }
        if s == 0 {
            return Err(invalid("multiplicity order s must be at least 1"));
        }
        if field.k() > 16 {
            return Err(infeasible(format!("field GF(2^{}) too large for a multiplicity code", field.k())));
        }
        let q = field.order() as usize;
        if d >= s * q {
            return Err(infeasible(format!("degree d={d} must be below s*q={}", s * q)));
        }
        let n = (q as u128)
            .checked_pow(m as u32)
            .filter(|&n| n <= 1 << 28)
            .ok_or_else(|| infeasible(format!("block length {q}^{m} is too large")))?;
        let _ = n;
        let points = field.enumeration(q);
        let mut index_of = vec![0u32; q];
        for (i, p) in points.iter().enumerate() {
            index_of[p.bits() as usize] = i as u32;
        }
        let exps = graded_exponents(m, s as u32);
        let monomials = graded_exponents(m, d as u32 + 1);
        let symbol_len = exps.len();
        let n_dirs = 3 * symbol_len;
        let projective = ((q as u128).pow(m as u32) - 1) / (q as u128 - 1).max(1);
        // Field condition q >= max{10m, (d + 6s)/s, 12(s + 1)}.
        let field_ok = q >= 10 * m && q * s >= d + 6 * s && q >= 12 * (s + 1);
        // Line decoding radius floor(delta q / 5) = floor((sq - d) / (5s)),
        // capped so that s (q - 1 - e) > d + s e keeps decoding unique on the
        // q - 1 points of a line other than the target.
        let mut line_radius = (s * q - d) / (5 * s);
        while line_radius > 0 && s * (q - 1 - line_radius) <= d + s * line_radius {
            line_radius -= 1;
        }
        let correctable = field_ok && q >= 3 && (n_dirs as u128) <= projective;
        Ok(MultiplicityCode {
            field: field.clone(),
            q,
            m,
            s,
            d,
            exps,
            monomials,
            points,
            index_of,
            n_dirs,
            line_radius,
            correctable,
            systematic: None,
        })
    }

    /// Same code with a precomputed systematic encoder.
    pub fn with_systematic(mut self) -> Result<MultiplicityCode> {
        self.systematic = Some(self.find_information_set()?);
        Ok(self)
    }

    pub fn field(&self) -> &Field {
        &self.field
    }
    pub fn q(&self) -> usize {
        self.q
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn s(&self) -> usize {
        self.s
    }
    pub fn d(&self) -> usize {
        self.d
    }
    pub fn symbol_len(&self) -> usize {
        self.exps.len()
    }
    pub fn exponents(&self) -> &[Vec<u32>] {
        &self.exps
    }
    pub fn monomials(&self) -> &[Vec<u32>] {
        &self.monomials
    }
    pub fn dimension(&self) -> usize {
        self.monomials.len()
    }
    /// Lines examined per correction.
    pub fn n_dirs(&self) -> usize {
        self.n_dirs
    }
    pub fn line_radius(&self) -> usize {
        self.line_radius
    }
    /// Whether the field condition for local correction holds.
    pub fn field_condition(&self) -> bool {
        self.correctable
    }

    /// C(d+m, m) / (C(s+m-1, m) q^m).
    pub fn rate_formula(&self) -> Rational {
        let (m, s, d, q) = (self.m as u64, self.s as u64, self.d as u64, self.q as u128);
        Rational::new(binomial(d + m, m), binomial(s + m - 1, m) * q.pow(m as u32))
    }

    /// delta = 1 - d/(sq).
    pub fn delta(&self) -> Rational {
        let sq = (self.s * self.q) as u128;
        Rational::new(sq - self.d as u128, sq)
    }

    pub fn block_len(&self) -> usize {
        self.q.pow(self.m as u32)
    }

    /// Coordinates of point `index`.
    pub fn point(&self, mut index: usize) -> Vec<FieldElement> {
        let mut out = vec![FieldElement::ZERO; self.m];
        for slot in out.iter_mut().rev() {
            *slot = self.points[index % self.q];
            index /= self.q;
        }
        out
    }

    pub fn point_index(&self, point: &[FieldElement]) -> usize {
        point.iter().fold(0, |acc, p| acc * self.q + self.index_of[p.bits() as usize] as usize)
    }

    /// Polynomial with the given monomial coefficients.
    pub fn message_poly(&self, message: &[FieldElement]) -> Result<MultiPoly> {
        if message.len() != self.dimension() {
            return Err(invalid(format!("message length {} != dimension {}", message.len(), self.dimension())));
        }
        MultiPoly::from_terms(self.m, self.monomials.iter().cloned().zip(message.iter().copied()))
    }

    pub fn encode_poly(&self, poly: &MultiPoly) -> Result<Vec<Vec<FieldElement>>> {
        if poly.m() != self.m {
            return Err(invalid("polynomial has the wrong number of variables"));
        }
        if poly.degree().is_some_and(|deg| deg as usize > self.d) {
            return Err(invalid(format!("polynomial degree exceeds d={}", self.d)));
        }
        let side = self.d + 1;
        let mut grid = vec![FieldElement::ZERO; side.pow(self.m as u32)];
        for (e, &c) in poly.terms() {
            let idx = e.iter().fold(0usize, |acc, &x| acc * side + x as usize);
            grid[idx] = c;
        }
        Ok(self.encode_grid(&grid))
    }

    /// Encoding by nested Taylor shifts, one variable at a time: shifting
    /// variable j by a_j and keeping the first (s - |i|) coefficients leaves
    /// the partial derivatives needed at every point with that prefix.
    fn encode_grid(&self, grid: &[FieldElement]) -> Vec<Vec<FieldElement>> {
        let n = self.block_len();
        let mut out = vec![vec![FieldElement::ZERO; self.exps.len()]; n];
        let slot_of: BTreeMap<Vec<u32>, usize> = self.exps.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        let start = vec![(Vec::new(), grid.to_vec())];
        let mut scratch = Vec::new();
        self.encode_level(0, 0, &start, &slot_of, &mut out, &mut scratch);
        out
    }

    fn encode_level(
        &self,
        var: usize,
        prefix_index: usize,
        state: &[(Vec<u32>, Vec<FieldElement>)],
        slot_of: &BTreeMap<Vec<u32>, usize>,
        out: &mut [Vec<FieldElement>],
        scratch: &mut Vec<FieldElement>,
    ) {
        if var == self.m {
            for (i, t) in state {
                out[prefix_index][slot_of[i]] = t[0];
            }
            return;
        }
        let side = self.d + 1;
        let stride = side.pow((self.m - var - 1) as u32);
        let f = &self.field;
        let mut column = vec![FieldElement::ZERO; side];
        for (pv, &a) in self.points.iter().enumerate() {
            let mut next: Vec<(Vec<u32>, Vec<FieldElement>)> = Vec::new();
            for (i, t) in state {
                let used: u32 = i.iter().sum();
                let r = self.s - used as usize;
                let mut children: Vec<Vec<FieldElement>> = vec![vec![FieldElement::ZERO; stride]; r];
                for c in 0..stride {
                    let mut top = 0;
                    for e in 0..side {
                        column[e] = t[e * stride + c];
                        if !column[e].is_zero() {
                            top = e + 1;
                        }
                    }
                    if top == 0 {
                        continue;
                    }
                    taylor_prefix(f, &column[..top], a, r, scratch);
                    for (child, &v) in children.iter_mut().zip(scratch.iter()) {
                        child[c] = v;
                    }
                }
                for (ij, child) in children.into_iter().enumerate() {
                    let mut idx = i.clone();
                    idx.push(ij as u32);
                    next.push((idx, child));
                }
            }
            self.encode_level(var + 1, prefix_index * self.q + pv, &next, slot_of, out, scratch);
        }
    }

    /// b^i for every derivative order i in the symbol.
    fn direction_powers(&self, b: &[FieldElement]) -> Vec<FieldElement> {
        self.exps
            .iter()
            .map(|e| {
                e.iter()
                    .zip(b)
                    .fold(FieldElement::ONE, |acc, (&ek, &bk)| self.field.mul(acc, self.field.pow(bk, u64::from(ek))))
            })
            .collect()
    }

    /// Order-s tuple of q(t) = Q(a + t b) at one t, from the symbol at a + t b.
    fn line_tuple(&self, symbol: &[FieldElement], powers: &[FieldElement]) -> Vec<FieldElement> {
        let mut y = vec![FieldElement::ZERO; self.s];
        for (idx, e) in self.exps.iter().enumerate() {
            let j: u32 = e.iter().sum();
            y[j as usize] += self.field.mul(symbol[idx], powers[idx]);
        }
        y
    }

    fn line_point(&self, a: &[FieldElement], b: &[FieldElement], t: FieldElement) -> usize {
        let pt: Vec<FieldElement> = a.iter().zip(b).map(|(&ak, &bk)| ak + self.field.mul(t, bk)).collect();
        self.point_index(&pt)
    }

    /// The restriction of the oracle to the line {a + t b}, as an order-s
    /// univariate word indexed by the canonical enumeration of t. Makes
    /// exactly q queries.
    pub fn restrict_to_line(
        &self,
        oracle: &dyn Oracle<Vec<FieldElement>>,
        a: &[FieldElement],
        b: &[FieldElement],
    ) -> Result<Vec<Vec<FieldElement>>> {
        if a.len() != self.m || b.len() != self.m {
            return Err(invalid("point or direction has the wrong dimension"));
        }
        if b.iter().all(|x| x.is_zero()) {
            return Err(invalid("line direction must be nonzero"));
        }
        let powers = self.direction_powers(b);
        Ok(self.points.iter().map(|&t| self.line_tuple(&oracle.query(self.line_point(a, b, t)), &powers)).collect())
    }

    /// Decodes a full-line order-s word (indexed by the field enumeration).
    pub fn decode_line(&self, received: &[Vec<FieldElement>]) -> Result<Poly> {
        if received.len() != self.q {
            return Err(invalid(format!("line word has length {}, expected {}", received.len(), self.q)));
        }
        let radius = (self.s * self.q - self.d) / (5 * self.s);
        decode_order_s(&self.field, self.s, self.d, &self.points, received, radius)
    }

    fn random_direction(&self, rng: &mut TrialRng) -> Vec<FieldElement> {
        loop {
            let mut b: Vec<FieldElement> = (0..self.m).map(|_| self.field.random(rng)).collect();
            if let Some(lead) = b.iter().position(|x| !x.is_zero()) {
                let inv = self.field.inv(b[lead]);
                for x in b.iter_mut() {
                    *x = self.field.mul(*x, inv);
                }
                return b;
            }
        }
    }

    /// Line-based local correction of the symbol at `index`.
    pub fn correct(
        &self,
        oracle: &dyn Oracle<Vec<FieldElement>>,
        index: usize,
        rng: &mut TrialRng,
    ) -> Result<Vec<FieldElement>> {
        if !self.correctable {
            return Err(infeasible(format!(
                "field condition q >= max(10m, (d+6s)/s, 12(s+1)) fails for {}",
                self.code_id()
            )));
        }
        if index >= self.block_len() {
            return Err(invalid(format!("coordinate {index} out of range")));
        }
        let a = self.point(index);
        let ts = &self.points[1..];
        let mut dirs: Vec<Vec<FieldElement>> = Vec::with_capacity(self.n_dirs);
        while dirs.len() < self.n_dirs {
            let b = self.random_direction(rng);
            if !dirs.contains(&b) {
                dirs.push(b);
            }
        }
        // (direction powers, Taylor coefficients at the target) per decoded line.
        let mut lines: Vec<(Vec<FieldElement>, Vec<FieldElement>)> = Vec::new();
        for b in &dirs {
            let powers = self.direction_powers(b);
            let word: Vec<Vec<FieldElement>> =
                ts.iter().map(|&t| self.line_tuple(&oracle.query(self.line_point(&a, b, t)), &powers)).collect();
            if let Ok(p) = decode_order_s(&self.field, self.s, self.d, ts, &word, self.line_radius) {
                let coeffs: Vec<FieldElement> = (0..self.s).map(|j| p.coeff(j)).collect();
                lines.push((powers, coeffs));
            }
        }
        self.resolve(&lines).ok_or_else(|| {
            CodeError::CorrectFailure(format!("only {} of {} lines decoded consistently", lines.len(), self.n_dirs))
        })
    }

    /// The derivative tuple consistent with the most decoded lines; ties go
    /// to the smallest tuple.
    fn resolve(&self, lines: &[(Vec<FieldElement>, Vec<FieldElement>)]) -> Option<Vec<FieldElement>> {
        let f = &self.field;
        let by_order: Vec<Vec<usize>> = (0..self.s)
            .map(|j| (0..self.exps.len()).filter(|&i| self.exps[i].iter().sum::<u32>() as usize == j).collect())
            .collect();
        let need = by_order.iter().map(Vec::len).max().unwrap_or(1);
        if lines.len() < need {
            return None;
        }
        let consistent = |tuple: &[FieldElement], line: &(Vec<FieldElement>, Vec<FieldElement>)| {
            by_order.iter().enumerate().all(|(j, idxs)| {
                idxs.iter().fold(FieldElement::ZERO, |acc, &i| acc + f.mul(tuple[i], line.0[i])) == line.1[j]
            })
        };
        let mut best: Option<(usize, Vec<FieldElement>)> = None;
        for subset in Combinations::new(lines.len(), need).take(MAX_CANDIDATE_SUBSETS) {
            let mut tuple = vec![FieldElement::ZERO; self.exps.len()];
            let mut ok = true;
            for (j, idxs) in by_order.iter().enumerate() {
                let mut a = Matrix::zeros(subset.len(), idxs.len());
                let mut rhs = Vec::with_capacity(subset.len());
                for (r, &l) in subset.iter().enumerate() {
                    for (c, &i) in idxs.iter().enumerate() {
                        a.set(r, c, lines[l].0[i]);
                    }
                    rhs.push(lines[l].1[j]);
                }
                if a.rank(f) < idxs.len() {
                    ok = false;
                    break;
                }
                match linalg::solve(f, &a, &rhs) {
                    Some(x) => {
                        for (c, &i) in idxs.iter().enumerate() {
                            tuple[i] = x[c];
                        }
                    }
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                continue;
            }
            let score = lines.iter().filter(|l| consistent(&tuple, l)).count();
            let better = match &best {
                None => true,
                Some((bs, bt)) => score > *bs || (score == *bs && tuple < *bt),
            };
            if better {
                best = Some((score, tuple));
            }
        }
        best.map(|(_, t)| t)
    }

    /// Column of the generator matrix for (point, derivative slot): the
    /// Hasse derivative of every monomial at that point.
    fn generator_column(&self, point: &[FieldElement], slot: usize) -> Vec<FieldElement> {
        let i = &self.exps[slot];
        self.monomials
            .iter()
            .map(|e| {
                let mut v = FieldElement::ONE;
                for k in 0..self.m {
                    if !binom_odd(e[k] as usize, i[k] as usize) {
                        return FieldElement::ZERO;
                    }
                    v = self.field.mul(v, self.field.pow(point[k], u64::from(e[k] - i[k])));
                }
                v
            })
            .collect()
    }

    /// Greedy information set over (point, slot) pairs in point-major order,
    /// keeping the reduced basis and the change-of-basis matrix together.
    fn find_information_set(&self) -> Result<Systematic> {
        let f = &self.field;
        let k = self.dimension();
        // Each accepted row is [column | unit vector], kept in reduced form.
        let mut rows: Vec<Vec<FieldElement>> = Vec::with_capacity(k);
        let mut pivots: Vec<usize> = Vec::with_capacity(k);
        let mut slots = Vec::with_capacity(k);
        'outer: for p in 0..self.block_len() {
            let point = self.point(p);
            for slot in 0..self.exps.len() {
                if rows.len() == k {
                    break 'outer;
                }
                let mut v = self.generator_column(&point, slot);
                v.resize(2 * k, FieldElement::ZERO);
                v[k + rows.len()] = FieldElement::ONE;
                for (row, &pc) in rows.iter().zip(&pivots) {
                    let c = v[pc];
                    if !c.is_zero() {
                        for (x, &y) in v.iter_mut().zip(row) {
                            *x += f.mul(c, y);
                        }
                    }
                }
                let Some(pc) = (0..k).find(|&c| !v[c].is_zero()) else { continue };
                let inv = f.inv(v[pc]);
                for x in v.iter_mut() {
                    *x = f.mul(*x, inv);
                }
                for row in rows.iter_mut() {
                    let c = row[pc];
                    if !c.is_zero() {
                        for (x, &y) in row.iter_mut().zip(&v) {
                            *x += f.mul(c, y);
                        }
                    }
                }
                rows.push(v);
                pivots.push(pc);
                slots.push((p, slot));
            }
        }
        if rows.len() < k {
            return Err(infeasible("generator matrix does not have full rank"));
        }
        // Row r reads e_{pivot r} = sum_l right[r][l] * column_l, so the
        // coefficient vector c with <column_l, c> = m_l is c_{pivot r} =
        // sum_l right[r][l] m_l.
        let mut inverse = Matrix::zeros(k, k);
        for (r, &pc) in pivots.iter().enumerate() {
            for l in 0..k {
                inverse.set(pc, l, rows[r][k + l]);
            }
        }
        Ok(Systematic { slots, inverse })
    }

    /// Exact membership: recover coefficients from an information set and
    /// re-encode. Costs a dimension-cubed elimination when no systematic
    /// encoder was precomputed.
    fn membership(&self, word: &[Vec<FieldElement>]) -> bool {
        if word.len() != self.block_len() || word.iter().any(|s| s.len() != self.exps.len()) {
            return false;
        }
        let owned;
        let sys = match &self.systematic {
            Some(s) => s,
            None => match self.find_information_set() {
                Ok(s) => {
                    owned = s;
                    &owned
                }
                Err(_) => return false,
            },
        };
        let values: Vec<FieldElement> = sys.slots.iter().map(|&(p, sl)| word[p][sl]).collect();
        let coeffs = sys.inverse.mul_vec(&self.field, &values);
        match self.encode(&coeffs) {
            Ok(cw) => cw == word,
            Err(_) => false,
        }
    }
}

/// First `r` Taylor coefficients of the polynomial `c` at `a`, into `out`.
fn taylor_prefix(f: &Field, c: &[FieldElement], a: FieldElement, r: usize, out: &mut Vec<FieldElement>) {
    out.clear();
    if a.is_zero() {
        out.extend((0..r).map(|j| c.get(j).copied().unwrap_or(FieldElement::ZERO)));
        return;
    }
    let mut work: Vec<FieldElement> = c.to_vec();
    for _ in 0..r {
        if work.is_empty() {
            out.push(FieldElement::ZERO);
            continue;
        }
        let mut carry = FieldElement::ZERO;
        for x in work.iter_mut().rev() {
            let v = *x + f.mul(carry, a);
            *x = carry;
            carry = v;
        }
        out.push(carry);
        work.pop();
    }
}

/// Generalized Berlekamp-Welch for order-s univariate words: finds the
/// polynomial of degree <= d whose order-s evaluations at `ts` disagree with
/// `received` in at most `radius` positions.
///
/// Unknowns are a monic error locator E of degree s*radius and N = E*P of
/// degree <= d + s*radius; each (t, j < s) gives the Leibniz equation
/// N^(j)(t) = sum_{i <= j} E^(i)(t) y_{j-i}(t).
pub fn decode_order_s(
    f: &Field,
    s: usize,
    d: usize,
    ts: &[FieldElement],
    received: &[Vec<FieldElement>],
    radius: usize,
) -> Result<Poly> {
    if ts.len() != received.len() || received.iter().any(|y| y.len() != s) {
        return Err(invalid("line word has inconsistent shape"));
    }
    let l_len = s * radius;
    let n_deg = d + l_len;
    let unknowns = l_len + n_deg + 1;
    let rows = s * ts.len();
    let mut a = Matrix::zeros(rows, unknowns);
    let mut rhs = vec![FieldElement::ZERO; rows];
    let mut pw = vec![FieldElement::ZERO; n_deg + 1];
    for (pi, (&t, y)) in ts.iter().zip(received).enumerate() {
        pw[0] = FieldElement::ONE;
        for e in 1..=n_deg {
            pw[e] = f.mul(pw[e - 1], t);
        }
        // Hasse derivative of order i of t^l at t: C(l, i) t^(l - i).
        let h = |l: usize, i: usize| if i <= l && binom_odd(l, i) { pw[l - i] } else { FieldElement::ZERO };
        for j in 0..s {
            let r = pi * s + j;
            for l in 0..=n_deg {
                a.set(r, l_len + l, h(l, j));
            }
            for l in 0..l_len {
                let v = (0..=j).fold(FieldElement::ZERO, |acc, i| acc + f.mul(h(l, i), y[j - i]));
                a.set(r, l, v);
            }
            rhs[r] = (0..=j).fold(FieldElement::ZERO, |acc, i| acc + f.mul(h(l_len, i), y[j - i]));
        }
    }
    let sol = linalg::solve(f, &a, &rhs).ok_or(CodeError::DecodeFailure)?;
    let mut e_coeffs = sol[..l_len].to_vec();
    e_coeffs.push(FieldElement::ONE);
    let locator = Poly::from_coeffs(e_coeffs);
    let numerator = Poly::from_coeffs(sol[l_len..].to_vec());
    let (p, rem) = numerator.div_rem(f, &locator)?;
    if !rem.is_zero() || p.degree().is_some_and(|deg| deg > d) {
        return Err(CodeError::DecodeFailure);
    }
    let disagreements = ts.iter().zip(received).filter(|(&t, y)| p.hasse_evals(f, t, s) != **y).count();
    if disagreements > radius {
        return Err(CodeError::DecodeFailure);
    }
    Ok(p)
}

/// k-subsets of 0..n in lexicographic order.
struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Combinations {
        Combinations { n, current: (k <= n).then(|| (0..k).collect()) }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;
    fn next(&mut self) -> Option<Vec<usize>> {
        let cur = self.current.take()?;
        let k = cur.len();
        let mut nxt = cur.clone();
        let mut i = k;
        while i > 0 {
            i -= 1;
            if nxt[i] < self.n - k + i {
                nxt[i] += 1;
                for j in i + 1..k {
                    nxt[j] = nxt[j - 1] + 1;
                }
                self.current = Some(nxt);
                return Some(cur);
            }
        }
        Some(cur)
    }
}

impl LocalCode for MultiplicityCode {
    type Symbol = Vec<FieldElement>;

    fn code_id(&self) -> String {
        format!("mult(q={},m={},s={},d={})", self.q, self.m, self.s, self.d)
    }

    fn block_length(&self) -> usize {
        self.block_len()
    }

    fn alphabet(&self) -> Alphabet {
        Alphabet::new(&self.field, self.exps.len())
    }

    fn message_field(&self) -> Field {
        self.field.clone()
    }

    fn message_len(&self) -> usize {
        self.dimension()
    }

    fn distance_bound(&self) -> Rational {
        self.delta()
    }

    fn encode(&self, message: &[FieldElement]) -> Result<Vec<Vec<FieldElement>>> {
        if message.len() != self.dimension() {
            return Err(invalid(format!("message length {} != dimension {}", message.len(), self.dimension())));
        }
        let side = self.d + 1;
        let mut grid = vec![FieldElement::ZERO; side.pow(self.m as u32)];
        for (e, &c) in self.monomials.iter().zip(message) {
            let idx = e.iter().fold(0usize, |acc, &x| acc * side + x as usize);
            grid[idx] = c;
        }
        Ok(self.encode_grid(&grid))
    }

    fn random_message(&self, rng: &mut TrialRng) -> Vec<FieldElement> {
        (0..self.dimension()).map(|_| self.field.random(rng)).collect()
    }

    fn is_codeword(&self, word: &[Vec<FieldElement>]) -> bool {
        self.membership(word)
    }

    /// delta / 10.
    fn correction_radius(&self) -> Option<Rational> {
        self.correctable.then(|| self.delta() / Rational::from_integer(10))
    }

    fn correct_budget(&self) -> Option<u64> {
        self.correctable.then(|| (self.n_dirs * self.q) as u64)
    }

    fn local_correct(
        &self,
        oracle: &dyn Oracle<Vec<FieldElement>>,
        i: usize,
        rng: &mut TrialRng,
    ) -> Result<Corrected<Vec<FieldElement>>> {
        let symbol = self.correct(oracle, i, rng)?;
        Ok(Corrected { symbol, emulated_queries: (self.n_dirs * (self.q - 1)) as u64 })
    }
}

impl SystematicCode for MultiplicityCode {
    fn systematic_encode(&self, message: &[FieldElement]) -> Result<Vec<Vec<FieldElement>>> {
        let sys = self.systematic.as_ref().ok_or_else(|| invalid("code was built without a systematic encoder"))?;
        if message.len() != self.dimension() {
            return Err(invalid("message length does not match the dimension"));
        }
        let coeffs = sys.inverse.mul_vec(&self.field, message);
        self.encode(&coeffs)
    }

    fn info_slot(&self, i: usize) -> (usize, usize) {
        self.systematic.as_ref().expect("systematic encoder").slots[i]
    }
}

/// Serializes a symbol as concatenated element bytes.
pub fn serialize_symbol(field: &Field, symbol: &[FieldElement]) -> Vec<u8> {
    symbol.iter().flat_map(|&e| field.to_bytes(e)).collect()
}

/// Random polynomial of total degree <= d with uniformly random coefficients.
pub fn random_poly(code: &MultiplicityCode, rng: &mut impl Rng) -> MultiPoly {
    let terms = code.monomials().iter().map(|e| (e.clone(), code.field().random(rng)));
    MultiPoly::from_terms(code.m(), terms).expect("monomials have length m")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code_api::QueryCountingOracle;
    use crate::reed_solomon::RsCode;
    use rand::SeedableRng;

    fn fe(b: u32) -> FieldElement {
        FieldElement::from_bits(b)
    }

    /// Direct definition: Q^(i)(a) = sum_e C(e, i) q_e a^(e - i).
    fn symbol_oracle(code: &MultiplicityCode, p: &MultiPoly, point: &[FieldElement]) -> Vec<FieldElement> {
        code.exponents().iter().map(|i| p.hasse(i).eval(code.field(), point)).collect()
    }

    #[test]
    fn exponent_order() {
        assert_eq!(graded_exponents(2, 2), vec![vec![0, 0], vec![1, 0], vec![0, 1]]);
        assert_eq!(graded_exponents(3, 3).len(), 10);
        assert_eq!(graded_exponents(1, 4), vec![vec![0], vec![1], vec![2], vec![3]]);
    }

    #[test]
    fn encoder_matches_definition() {
        let mut rng = TrialRng::seed_from_u64(1);
        for (k, m, s, d) in [(3, 2, 2, 9), (2, 3, 2, 5), (4, 2, 3, 20), (3, 1, 3, 12)] {
            let f = Field::new(k).unwrap();
            let code = MultiplicityCode::new(&f, m, s, d).unwrap();
            let p = random_poly(&code, &mut rng);
            let cw = code.encode_poly(&p).unwrap();
            for idx in 0..code.block_len() {
                assert_eq!(cw[idx], symbol_oracle(&code, &p, &code.point(idx)), "{k} {m} {s} {d}");
            }
        }
    }

    #[test]
    fn small_examples() {
        let f = Field::new(6).unwrap();
        let code = MultiplicityCode::new(&f, 2, 2, 96).unwrap();
        let xy = MultiPoly::from_terms(2, [(vec![1, 1], FieldElement::ONE)]).unwrap();
        let cw = code.encode_poly(&xy).unwrap();
        assert_eq!(cw[0], vec![FieldElement::ZERO; 3]);
        let c = fe(7);
        let constant = MultiPoly::from_terms(2, [(vec![0, 0], c)]).unwrap();
        assert!(code.encode_poly(&constant).unwrap().iter().all(|sym| *sym == vec![c, fe(0), fe(0)]));
        let high = MultiPoly::from_terms(2, [(vec![90, 7], c)]).unwrap();
        assert!(code.encode_poly(&high).is_err());
    }

    #[test]
    fn reduces_to_reed_solomon() {
        let mut rng = TrialRng::seed_from_u64(2);
        for k in 2..=4u32 {
            let f = Field::new(k).unwrap();
            let q = f.order() as usize;
            for dim in 1..=4usize.min(q) {
                let code = MultiplicityCode::new(&f, 1, 1, dim - 1).unwrap();
                let rs = RsCode::new(&f, q, dim).unwrap();
                for _ in 0..20 {
                    let msg: Vec<_> = (0..dim).map(|_| f.random(&mut rng)).collect();
                    let a: Vec<FieldElement> = code.encode(&msg).unwrap().into_iter().map(|s| s[0]).collect();
                    assert_eq!(a, rs.encode(&msg).unwrap());
                }
            }
        }
    }

    #[test]
    fn line_restriction() {
        let f = Field::new(6).unwrap();
        let code = MultiplicityCode::new(&f, 2, 2, 96).unwrap();
        let xy = MultiPoly::from_terms(2, [(vec![1, 1], FieldElement::ONE)]).unwrap();
        let cw = code.encode_poly(&xy).unwrap();
        let oracle = QueryCountingOracle::new(&cw);
        let word = code.restrict_to_line(&oracle, &[fe(0), fe(0)], &[fe(1), fe(1)]).unwrap();
        assert_eq!(oracle.count(), 64);
        // q(t) = t^2: value t^2, first derivative 2t = 0.
        assert_eq!(word[0], vec![fe(0), fe(0)]);
        for (t, y) in code.points.iter().zip(&word) {
            assert_eq!(y, &vec![f.mul(*t, *t), fe(0)]);
        }
        let mut rng = TrialRng::seed_from_u64(3);
        let p = random_poly(&code, &mut rng);
        let cw = code.encode_poly(&p).unwrap();
        let oracle = QueryCountingOracle::new(&cw);
        let a = [f.random(&mut rng), f.random(&mut rng)];
        let b = [fe(1), f.random(&mut rng)];
        let word = code.restrict_to_line(&oracle, &a, &b).unwrap();
        let line = code.decode_line(&word).unwrap();
        assert!(line.degree().unwrap() <= 96);
        for (t, y) in code.points.iter().zip(&word) {
            assert_eq!(&line.hasse_evals(&f, *t, 2), y);
        }
    }

    #[test]
    fn line_decoding_with_errors() {
        let f = Field::new(6).unwrap();
        let code = MultiplicityCode::new(&f, 2, 2, 96).unwrap();
        let mut rng = TrialRng::seed_from_u64(4);
        for _ in 0..10 {
            let coeffs: Vec<_> = (0..97).map(|_| f.random(&mut rng)).collect();
            let p = Poly::from_coeffs(coeffs);
            let mut word: Vec<_> = code.points.iter().map(|&t| p.hasse_evals(&f, t, 2)).collect();
            let mut pos: Vec<usize> = (0..64).collect();
            for i in 0..3 {
                let j = rng.random_range(i..64);
                pos.swap(i, j);
                word[pos[i]][rng.random_range(0..2)] = f.random_nonzero(&mut rng) + word[pos[i]][0];
            }
            assert_eq!(code.decode_line(&word).unwrap(), p);
        }
        let garbage: Vec<_> = (0..64).map(|_| vec![f.random(&mut rng), f.random(&mut rng)]).collect();
        assert_eq!(code.decode_line(&garbage), Err(CodeError::DecodeFailure));
    }

    #[test]
    fn rate_and_distance() {
        let f = Field::new(6).unwrap();
        let code = MultiplicityCode::new(&f, 2, 2, 96).unwrap();
        assert_eq!(code.rate(), Rational::new(4753, 3 * 4096));
        assert_eq!(code.rate(), code.rate_formula());
        assert_eq!(code.delta(), Rational::new(1, 4));
        assert!(code.field_condition());
        assert_eq!(code.n_dirs(), 9);
        assert_eq!(code.line_radius(), 3);
        let f16 = Field::new(4).unwrap();
        let small = MultiplicityCode::new(&f16, 2, 2, 20).unwrap();
        let mut rng = TrialRng::seed_from_u64(5);
        let min_weight = 256 - 256 * 20 / 32;
        for _ in 0..300 {
            let msg = small.random_message(&mut rng);
            if msg.iter().all(|x| x.is_zero()) {
                continue;
            }
            let w = small.encode(&msg).unwrap().iter().filter(|s| s.iter().any(|x| !x.is_zero())).count();
            assert!(w >= min_weight);
        }
    }

    #[test]
    fn corrects_clean_and_noisy_words() {
        let f = Field::new(5).unwrap();
        let code = MultiplicityCode::new(&f, 2, 1, 8).unwrap();
        assert!(code.field_condition());
        let mut rng = TrialRng::seed_from_u64(6);
        let msg = code.random_message(&mut rng);
        let cw = code.encode(&msg).unwrap();
        for i in [0, 17, 1023] {
            let oracle = QueryCountingOracle::new(&cw);
            assert_eq!(code.correct(&oracle, i, &mut rng).unwrap(), cw[i]);
            assert!(oracle.count() <= code.correct_budget().unwrap());
        }
        let mut noisy = cw.clone();
        for i in (0..1024).step_by(17) {
            noisy[i] = vec![f.random_other(noisy[i][0], &mut rng)];
        }
        let ok = (0..50)
            .filter(|&t| {
                let i = (t * 37) % 1024;
                let oracle = QueryCountingOracle::new(&noisy);
                code.correct(&oracle, i, &mut rng).ok() == Some(cw[i].clone())
            })
            .count();
        assert!(ok >= 45, "{ok}");
    }

    #[test]
    fn systematic_encoding() {
        let f = Field::new(4).unwrap();
        let code = MultiplicityCode::new(&f, 2, 2, 6).unwrap().with_systematic().unwrap();
        let mut rng = TrialRng::seed_from_u64(7);
        let zero = vec![FieldElement::ZERO; code.dimension()];
        assert!(code.systematic_encode(&zero).unwrap().iter().all(|s| s.iter().all(|x| x.is_zero())));
        for _ in 0..20 {
            let msg = code.random_message(&mut rng);
            let cw = code.systematic_encode(&msg).unwrap();
            assert!(code.is_codeword(&cw));
            for (i, &m) in msg.iter().enumerate() {
                let (p, sl) = code.info_slot(i);
                assert_eq!(cw[p][sl], m);
            }
        }
        // Reed-Solomon case: the first k points form the information set.
        let rs_like = MultiplicityCode::new(&f, 1, 1, 4).unwrap().with_systematic().unwrap();
        let slots: Vec<_> = (0..5).map(|i| rs_like.info_slot(i)).collect();
        assert_eq!(slots, (0..5).map(|p| (p, 0)).collect::<Vec<_>>());
    }

    #[test]
    fn combinations_enumerate_subsets() {
        let all: Vec<_> = Combinations::new(4, 2).collect();
        assert_eq!(all, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(Combinations::new(2, 3).count(), 0);
        assert_eq!(Combinations::new(3, 0).count(), 1);
    }
}
