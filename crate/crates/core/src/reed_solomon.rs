//! Reed-Solomon codes: evaluations of degree-<k polynomials at n distinct
//! points, with Berlekamp-Welch unique decoding and erasure decoding.

use crate::code_api::{Alphabet, LocalCode, Rational};
use crate::error::{invalid, CodeError, Result};
use crate::gf::{Field, FieldElement};
use crate::linalg::{self, Matrix};
use crate::poly::{eval_coeffs, Poly};

/// Above this many entries the precomputed extension matrix is skipped and
/// membership falls back to interpolation.
const EXTENSION_MATRIX_LIMIT: usize = 1 << 20;

/// RS_{k,n} over a binary field. Messages are coefficient vectors of the
/// message polynomial, lowest degree first.
#[derive(Clone, Debug)]
pub struct RsCode {
    field: Field,
    n: usize,
    k: usize,
    points: Vec<FieldElement>,
    /// Row j gives position k+j of a codeword as a combination of the first k
    /// positions.
    extension: Option<Matrix>,
    /// Maps the first k positions of a codeword to its message.
    first_k_inverse: Option<Matrix>,
}

impl RsCode {
    /// Evaluation points are the first `n` elements of the canonical field
    /// enumeration 0, 1, g, g^2, ...
    pub fn new(field: &Field, n: usize, k: usize) -> Result<RsCode> {
        if n as u64 > field.order() {
            return Err(invalid(format!("n={n} exceeds the field size {}", field.order())));
        }
        RsCode::with_points(field, field.enumeration(n), k)
    }

    pub fn with_points(field: &Field, points: Vec<FieldElement>, k: usize) -> Result<RsCode> {
        let n = points.len();
        if k == 0 || k > n {
            return Err(invalid(format!("need 1 <= k <= n, got k={k}, n={n}")));
        }
        let mut sorted: Vec<u32> = points.iter().map(|p| p.bits()).collect();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("evaluation points are not distinct"));
        }
        if points.iter().any(|&p| !field.contains(p)) {
            return Err(invalid("evaluation point outside the field"));
        }
        let mut code = RsCode { field: field.clone(), n, k, points, extension: None, first_k_inverse: None };
        if (n - k) * k <= EXTENSION_MATRIX_LIMIT {
            code.precompute();
        }
        Ok(code)
    }

    fn precompute(&mut self) {
        let f = &self.field;
        let k = self.k;
        // Lagrange basis of the first k points, evaluated at the others.
        let base = &self.points[..k];
        let weights: Vec<FieldElement> = (0..k)
            .map(|i| {
                let den = (0..k).filter(|&j| j != i).fold(FieldElement::ONE, |acc, j| f.mul(acc, base[i] + base[j]));
                f.inv(den)
            })
            .collect();
        let mut ext = Matrix::zeros(self.n - k, k);
        for (row, &x) in self.points[k..].iter().enumerate() {
            let diffs: Vec<FieldElement> = base.iter().map(|&b| x + b).collect();
            for i in 0..k {
                let num = (0..k).filter(|&j| j != i).fold(FieldElement::ONE, |acc, j| f.mul(acc, diffs[j]));
                ext.set(row, i, f.mul(num, weights[i]));
            }
        }
        self.extension = Some(ext);
        let mut vander = Matrix::zeros(k, k);
        for (r, &x) in base.iter().enumerate() {
            let mut p = FieldElement::ONE;
            for c in 0..k {
                vander.set(r, c, p);
                p = f.mul(p, x);
            }
        }
        self.first_k_inverse = vander.inverse(f);
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn points(&self) -> &[FieldElement] {
        &self.points
    }

    /// n - k + 1.
    pub fn min_distance(&self) -> usize {
        self.n - self.k + 1
    }

    /// floor((n - k) / 2).
    pub fn unique_radius(&self) -> usize {
        (self.n - self.k) / 2
    }

    pub fn encode(&self, message: &[FieldElement]) -> Result<Vec<FieldElement>> {
        if message.len() != self.k {
            return Err(invalid(format!("message length {} does not match k={}", message.len(), self.k)));
        }
        Ok(self.points.iter().map(|&x| eval_coeffs(&self.field, message, x)).collect())
    }

    /// Message of the degree-<k polynomial through the first k positions.
    fn message_from_prefix(&self, word: &[FieldElement]) -> Vec<FieldElement> {
        match &self.first_k_inverse {
            Some(inv) => inv.mul_vec(&self.field, &word[..self.k]),
            None => {
                let pts: Vec<_> = self.points[..self.k].iter().copied().zip(word.iter().copied()).collect();
                let mut c = Poly::interpolate(&self.field, &pts).expect("evaluation points are distinct").into_coeffs();
                c.resize(self.k, FieldElement::ZERO);
                c
            }
        }
    }

    /// True iff the degree-<k interpolant of the first k positions reproduces
    /// every position.
    pub fn is_codeword(&self, word: &[FieldElement]) -> bool {
        if word.len() != self.n {
            return false;
        }
        match &self.extension {
            Some(ext) => (0..self.n - self.k).all(|r| self.field.dot(ext.row(r), &word[..self.k]) == word[self.k + r]),
            None => {
                let msg = self.message_from_prefix(word);
                self.points[self.k..].iter().zip(&word[self.k..]).all(|(&x, &y)| eval_coeffs(&self.field, &msg, x) == y)
            }
        }
    }

    /// Message of a word known to be a codeword.
    pub fn unencode(&self, word: &[FieldElement]) -> Result<Vec<FieldElement>> {
        if !self.is_codeword(word) {
            return Err(CodeError::DecodeFailure);
        }
        Ok(self.message_from_prefix(word))
    }

    /// Unique decoding up to floor((n - k) / 2) errors.
    pub fn decode_unique(&self, received: &[FieldElement]) -> Result<Vec<FieldElement>> {
        self.decode_within(received, self.unique_radius())
    }

    /// Berlekamp-Welch with error bound `radius` (at most the unique radius).
    /// Succeeds only if the returned message's codeword is within `radius`
    /// of `received`.
    pub fn decode_within(&self, received: &[FieldElement], radius: usize) -> Result<Vec<FieldElement>> {
        if received.len() != self.n {
            return Err(invalid(format!("received length {} != n={}", received.len(), self.n)));
        }
        if radius > self.unique_radius() {
            return Err(invalid(format!(
                "radius {radius} exceeds the unique decoding radius {}",
                self.unique_radius()
            )));
        }
        if self.is_codeword(received) {
            return Ok(self.message_from_prefix(received));
        }
        if radius == 0 {
            return Err(CodeError::DecodeFailure);
        }
        let f = &self.field;
        let e = radius;
        let n_len = e + self.k;
        // Unknowns: E_0..E_{e-1} (E monic of degree e), then N_0..N_{e+k-1}.
        let mut a = Matrix::zeros(self.n, e + n_len);
        let mut rhs = vec![FieldElement::ZERO; self.n];
        for (i, (&x, &y)) in self.points.iter().zip(received).enumerate() {
            let mut p = FieldElement::ONE;
            for j in 0..n_len.max(e + 1) {
                if j < e {
                    a.set(i, j, f.mul(y, p));
                }
                if j == e {
                    rhs[i] = f.mul(y, p);
                }
                if j < n_len {
                    a.set(i, e + j, p);
                }
                p = f.mul(p, x);
            }
        }
        // N(x_i) + y_i E'(x_i) = y_i x_i^e in characteristic 2.
        let sol = linalg::solve(f, &a, &rhs).ok_or(CodeError::DecodeFailure)?;
        let mut e_coeffs = sol[..e].to_vec();
        e_coeffs.push(FieldElement::ONE);
        let err_poly = Poly::from_coeffs(e_coeffs);
        let num = Poly::from_coeffs(sol[e..].to_vec());
        let (q, r) = num.div_rem(f, &err_poly)?;
        if !r.is_zero() || q.coeffs().len() > self.k {
            return Err(CodeError::DecodeFailure);
        }
        let mut msg = q.into_coeffs();
        msg.resize(self.k, FieldElement::ZERO);
        let cw = self.encode(&msg)?;
        let dist = cw.iter().zip(received).filter(|(a, b)| a != b).count();
        if dist > radius {
            return Err(CodeError::DecodeFailure);
        }
        Ok(msg)
    }

    /// Decoding from erasures only (`None` marks an erased position).
    pub fn decode_erasures(&self, received: &[Option<FieldElement>]) -> Result<Vec<FieldElement>> {
        if received.len() != self.n {
            return Err(invalid(format!("received length {} != n={}", received.len(), self.n)));
        }
        let known: Vec<(FieldElement, FieldElement)> =
            self.points.iter().zip(received).filter_map(|(&x, y)| y.map(|y| (x, y))).collect();
        if known.len() < self.k {
            return Err(CodeError::DecodeFailure);
        }
        let p = Poly::interpolate(&self.field, &known[..self.k])?;
        if known[self.k..].iter().any(|&(x, y)| p.eval(&self.field, x) != y) {
            return Err(CodeError::DecodeFailure);
        }
        let mut msg = p.into_coeffs();
        msg.resize(self.k, FieldElement::ZERO);
        Ok(msg)
    }
}

/// Length-prefixed serialization: u32 little-endian count, then each element
/// in `field.byte_len()` little-endian bytes.
pub fn serialize_word(field: &Field, word: &[FieldElement]) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + word.len() * field.byte_len());
    out.extend_from_slice(&(word.len() as u32).to_le_bytes());
    for &e in word {
        out.extend_from_slice(&field.to_bytes(e));
    }
    out
}

pub fn deserialize_word(field: &Field, bytes: &[u8]) -> Result<Vec<FieldElement>> {
    if bytes.len() < 4 {
        return Err(invalid("truncated word header"));
    }
    let len = u32::from_le_bytes(bytes[..4].try_into().expect("4 bytes")) as usize;
    let w = field.byte_len();
    if bytes.len() != 4 + len * w {
        return Err(invalid(format!("expected {} payload bytes, got {}", len * w, bytes.len() - 4)));
    }
    bytes[4..].chunks(w).map(|c| field.from_bytes(c)).collect()
}

impl LocalCode for RsCode {
    type Symbol = FieldElement;

    fn code_id(&self) -> String {
        format!("rs(q={},n={},k={})", self.field().order(), self.n(), self.k())
    }

    fn block_length(&self) -> usize {
        self.n()
    }

    fn alphabet(&self) -> Alphabet {
        Alphabet::new(self.field(), 1)
    }

    fn message_field(&self) -> Field {
        self.field().clone()
    }

    fn message_len(&self) -> usize {
        self.k()
    }

    fn distance_bound(&self) -> Rational {
        Rational::new(self.min_distance() as u128, self.n() as u128)
    }

    fn encode(&self, message: &[FieldElement]) -> Result<Vec<FieldElement>> {
        RsCode::encode(self, message)
    }

    fn is_codeword(&self, word: &[FieldElement]) -> bool {
        RsCode::is_codeword(self, word)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn all_messages(f: &Field, k: usize) -> Vec<Vec<FieldElement>> {
        let q = f.order() as u32;
        (0..(q as u64).pow(k as u32))
            .map(|mut idx| {
                (0..k)
                    .map(|_| {
                        let d = (idx % u64::from(q)) as u32;
                        idx /= u64::from(q);
                        FieldElement::from_bits(d)
                    })
                    .collect()
            })
            .collect()
    }

    fn weight(w: &[FieldElement]) -> usize {
        w.iter().filter(|e| !e.is_zero()).count()
    }

    fn dist(a: &[FieldElement], b: &[FieldElement]) -> usize {
        a.iter().zip(b).filter(|(x, y)| x != y).count()
    }

    #[test]
    fn encode_basics() {
        let f = Field::new(3).unwrap();
        let code = RsCode::new(&f, 7, 3).unwrap();
        assert_eq!(code.encode(&[FieldElement::ZERO; 3]).unwrap(), vec![FieldElement::ZERO; 7]);
        assert!(code.encode(&[FieldElement::ONE; 2]).is_err());
        let full = RsCode::new(&f, 8, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let msg: Vec<_> = (0..8).map(|_| f.random(&mut rng)).collect();
        let cw = full.encode(&msg).unwrap();
        let pts: Vec<_> = full.points().iter().copied().zip(cw).collect();
        let p = Poly::interpolate(&f, &pts).unwrap();
        assert_eq!(p, Poly::from_coeffs(msg));
    }

    #[test]
    fn exhaustive_minimum_weight() {
        let f8 = Field::new(3).unwrap();
        for (n, k) in [(7, 3), (7, 5)] {
            let code = RsCode::new(&f8, n, k).unwrap();
            let min = all_messages(&f8, k)
                .iter()
                .filter(|m| m.iter().any(|e| !e.is_zero()))
                .map(|m| weight(&code.encode(m).unwrap()))
                .min()
                .unwrap();
            assert_eq!(min, n - k + 1);
        }
        let f16 = Field::new(4).unwrap();
        let code = RsCode::new(&f16, 15, 11).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100_000 {
            let m: Vec<_> = (0..11).map(|_| f16.random(&mut rng)).collect();
            if weight(&m) == 0 {
                continue;
            }
            assert!(weight(&code.encode(&m).unwrap()) >= 5);
        }
    }

    #[test]
    fn single_errors_decode_exhaustively() {
        let f = Field::new(3).unwrap();
        let code = RsCode::new(&f, 7, 3).unwrap();
        let codewords: Vec<_> = all_messages(&f, 3).into_iter().map(|m| (code.encode(&m).unwrap(), m)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let (cw, msg) = &codewords[rng.random_range(0..codewords.len())];
            for pos in 0..7 {
                for v in 0..8 {
                    let mut r = cw.clone();
                    r[pos] = FieldElement::from_bits(v);
                    // Brute-force nearest codeword.
                    let nearest = codewords.iter().min_by_key(|(c, _)| dist(c, &r)).unwrap();
                    assert_eq!(&nearest.1, msg);
                    assert_eq!(&code.decode_unique(&r).unwrap(), msg);
                }
            }
        }
    }

    #[test]
    fn far_words_fail() {
        let f = Field::new(3).unwrap();
        let code = RsCode::new(&f, 7, 3).unwrap();
        let codewords: Vec<_> = all_messages(&f, 3).into_iter().map(|m| code.encode(&m).unwrap()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut found = 0;
        while found < 50 {
            let w: Vec<_> = (0..7).map(|_| f.random(&mut rng)).collect();
            if codewords.iter().map(|c| dist(c, &w)).min().unwrap() >= 3 {
                assert_eq!(code.decode_unique(&w), Err(CodeError::DecodeFailure));
                found += 1;
            }
        }
    }

    #[test]
    fn random_errors_within_radius() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..1000 {
            let kf = [4u32, 5, 8][trial % 3];
            let f = Field::new(kf).unwrap();
            let n = rng.random_range(2..=16);
            let k = rng.random_range(1..=n);
            let code = RsCode::new(&f, n, k).unwrap();
            let msg: Vec<_> = (0..k).map(|_| f.random(&mut rng)).collect();
            let cw = code.encode(&msg).unwrap();
            let mut r = cw.clone();
            let errs = rng.random_range(0..=code.unique_radius());
            let mut pos: Vec<usize> = (0..n).collect();
            for i in 0..errs {
                let j = rng.random_range(i..n);
                pos.swap(i, j);
                r[pos[i]] = f.random_other(r[pos[i]], &mut rng);
            }
            assert_eq!(code.decode_unique(&r).unwrap(), msg);
        }
    }

    #[test]
    fn brute_force_cross_check_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = Field::new(4).unwrap();
        for (n, k) in [(6, 2), (8, 3), (10, 4), (9, 2)] {
            let code = RsCode::new(&f, n, k).unwrap();
            let all: Vec<_> = all_messages(&f, k).into_iter().map(|m| (code.encode(&m).unwrap(), m)).collect();
            for _ in 0..100 {
                let w: Vec<_> = (0..n).map(|_| f.random(&mut rng)).collect();
                let best = all.iter().min_by_key(|(c, _)| dist(c, &w)).unwrap();
                match code.decode_unique(&w) {
                    Ok(m) => {
                        assert_eq!(m, best.1);
                        assert!(dist(&best.0, &w) <= code.unique_radius());
                    }
                    Err(_) => assert!(dist(&best.0, &w) > code.unique_radius()),
                }
            }
        }
    }

    #[test]
    fn erasures() {
        let f = Field::new(4).unwrap();
        let code = RsCode::new(&f, 10, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let msg: Vec<_> = (0..4).map(|_| f.random(&mut rng)).collect();
        let cw = code.encode(&msg).unwrap();
        let mut r: Vec<_> = cw.iter().map(|&e| Some(e)).collect();
        assert_eq!(code.decode_erasures(&r).unwrap(), msg);
        for slot in r.iter_mut().take(6) {
            *slot = None;
        }
        assert_eq!(code.decode_erasures(&r).unwrap(), msg);
        r[6] = None;
        assert_eq!(code.decode_erasures(&r), Err(CodeError::DecodeFailure));
    }

    #[test]
    fn membership() {
        let f = Field::new(5).unwrap();
        let code = RsCode::new(&f, 20, 7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        assert!(code.is_codeword(&[FieldElement::ZERO; 20]));
        for _ in 0..100 {
            let msg: Vec<_> = (0..7).map(|_| f.random(&mut rng)).collect();
            let mut cw = code.encode(&msg).unwrap();
            assert!(code.is_codeword(&cw));
            assert_eq!(code.unencode(&cw).unwrap(), msg);
            let p = rng.random_range(0..20);
            cw[p] = f.random_other(cw[p], &mut rng);
            assert!(!code.is_codeword(&cw));
        }
    }

    #[test]
    fn linearity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for k in [1u32, 3, 9, 17, 32] {
            let f = Field::new(k).unwrap();
            let n = 12.min(f.order() as usize);
            let code = RsCode::new(&f, n, n.div_ceil(2)).unwrap();
            for _ in 0..50 {
                let a: Vec<_> = (0..code.k()).map(|_| f.random(&mut rng)).collect();
                let b: Vec<_> = (0..code.k()).map(|_| f.random(&mut rng)).collect();
                let sum: Vec<_> = a.iter().zip(&b).map(|(&x, &y)| x + y).collect();
                let lhs: Vec<_> =
                    code.encode(&a).unwrap().iter().zip(code.encode(&b).unwrap()).map(|(&x, y)| x + y).collect();
                assert_eq!(lhs, code.encode(&sum).unwrap());
            }
        }
    }

    #[test]
    fn word_serialization() {
        let f = Field::new(9).unwrap();
        let w = vec![FieldElement::from_bits(0x1FF), FieldElement::from_bits(3)];
        let bytes = serialize_word(&f, &w);
        assert_eq!(bytes, vec![2, 0, 0, 0, 0xFF, 0x01, 0x03, 0x00]);
        assert_eq!(deserialize_word(&f, &bytes).unwrap(), w);
        assert!(deserialize_word(&f, &bytes[..5]).is_err());
    }
}
