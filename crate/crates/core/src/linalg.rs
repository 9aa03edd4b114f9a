//! Dense Gaussian elimination over GF(2^k).

use crate::gf::{Field, FieldElement};

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<FieldElement>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix { rows, cols, data: vec![FieldElement::ZERO; rows * cols] }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> FieldElement {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: FieldElement) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[FieldElement] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn mul_vec(&self, f: &Field, v: &[FieldElement]) -> Vec<FieldElement> {
        (0..self.rows).map(|r| f.dot(self.row(r), v)).collect()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for c in 0..self.cols {
                self.data.swap(a * self.cols + c, b * self.cols + c);
            }
        }
    }

    /// Reduces to reduced row echelon form in place; returns pivot columns.
    pub fn rref(&mut self, f: &Field) -> Vec<usize> {
        self.rref_limited(f, self.cols)
    }

    /// Like [`Matrix::rref`] but only pivots in the first `pivot_cols` columns.
    pub fn rref_limited(&mut self, f: &Field, pivot_cols: usize) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..pivot_cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| !self.get(i, c).is_zero()) else {
                continue;
            };
            self.swap_rows(r, p);
            let inv = f.inv(self.get(r, c));
            for j in c..self.cols {
                let v = f.mul(self.get(r, j), inv);
                self.set(r, j, v);
            }
            for i in 0..self.rows {
                if i == r {
                    continue;
                }
                let factor = self.get(i, c);
                if factor.is_zero() {
                    continue;
                }
                for j in c..self.cols {
                    let v = self.get(i, j) + f.mul(factor, self.get(r, j));
                    self.set(i, j, v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self, f: &Field) -> usize {
        self.clone().rref(f).len()
    }

    /// Inverse of a square matrix, if it is nonsingular.
    pub fn inverse(&self, f: &Field) -> Option<Matrix> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut aug = Matrix::zeros(n, 2 * n);
        for r in 0..n {
            for c in 0..n {
                aug.set(r, c, self.get(r, c));
            }
            aug.set(r, n + r, FieldElement::ONE);
        }
        if aug.rref_limited(f, n).len() < n {
            return None;
        }
        let mut out = Matrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                out.set(r, c, aug.get(r, n + c));
            }
        }
        Some(out)
    }
}

/// Some solution of `a x = b`, with free variables set to zero; `None` when
/// the system is inconsistent.
pub fn solve(f: &Field, a: &Matrix, b: &[FieldElement]) -> Option<Vec<FieldElement>> {
    assert_eq!(a.rows, b.len());
    let n = a.cols;
    let mut aug = Matrix::zeros(a.rows, n + 1);
    for r in 0..a.rows {
        aug.data[r * (n + 1)..r * (n + 1) + n].copy_from_slice(a.row(r));
        aug.set(r, n, b[r]);
    }
    let pivots = aug.rref_limited(f, n);
    for r in pivots.len()..a.rows {
        if !aug.get(r, n).is_zero() {
            return None;
        }
    }
    let mut x = vec![FieldElement::ZERO; n];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = aug.get(r, n);
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn solves_consistent_systems() {
        let f = Field::new(8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let mut a = Matrix::zeros(7, 5);
            for v in a.data.iter_mut() {
                *v = f.random(&mut rng);
            }
            let x: Vec<_> = (0..5).map(|_| f.random(&mut rng)).collect();
            let b = a.mul_vec(&f, &x);
            let y = solve(&f, &a, &b).unwrap();
            assert_eq!(a.mul_vec(&f, &y), b);
        }
    }

    #[test]
    fn detects_inconsistency_and_inverts() {
        let f = Field::new(4).unwrap();
        let one = FieldElement::ONE;
        let mut a = Matrix::zeros(2, 1);
        a.set(0, 0, one);
        a.set(1, 0, one);
        assert!(solve(&f, &a, &[one, FieldElement::ZERO]).is_none());
        let mut m = Matrix::zeros(2, 2);
        m.set(0, 0, FieldElement::from_bits(3));
        m.set(0, 1, one);
        m.set(1, 1, FieldElement::from_bits(7));
        let inv = m.inverse(&f).unwrap();
        for c in 0..2 {
            let mut e = vec![FieldElement::ZERO; 2];
            e[c] = one;
            let col = inv.mul_vec(&f, &e);
            assert_eq!(m.mul_vec(&f, &col), e);
        }
        assert!(Matrix::zeros(2, 2).inverse(&f).is_none());
    }
}
