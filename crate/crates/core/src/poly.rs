//! Univariate polynomials over GF(2^k), stored lowest degree first.

use crate::error::{invalid, Result};
use crate::gf::{Field, FieldElement};

/// A polynomial with trailing zero coefficients trimmed; the zero polynomial
/// has no coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Poly {
    coeffs: Vec<FieldElement>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly { coeffs: Vec::new() }
    }

    pub fn constant(c: FieldElement) -> Poly {
        Poly::from_coeffs(vec![c])
    }

    /// The monomial `x`.
    pub fn x() -> Poly {
        Poly::from_coeffs(vec![FieldElement::ZERO, FieldElement::ONE])
    }

    pub fn from_coeffs(mut coeffs: Vec<FieldElement>) -> Poly {
        while coeffs.last() == Some(&FieldElement::ZERO) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn coeffs(&self) -> &[FieldElement] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<FieldElement> {
        self.coeffs
    }

    /// Coefficient of `x^i` (zero beyond the degree).
    pub fn coeff(&self, i: usize) -> FieldElement {
        self.coeffs.get(i).copied().unwrap_or(FieldElement::ZERO)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Horner evaluation.
    pub fn eval(&self, f: &Field, x: FieldElement) -> FieldElement {
        eval_coeffs(f, &self.coeffs, x)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        Poly::from_coeffs((0..n).map(|i| self.coeff(i) + other.coeff(i)).collect())
    }

    pub fn scale(&self, f: &Field, c: FieldElement) -> Poly {
        Poly::from_coeffs(self.coeffs.iter().map(|&a| f.mul(a, c)).collect())
    }

    pub fn mul(&self, f: &Field, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![FieldElement::ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += f.mul(a, b);
            }
        }
        Poly::from_coeffs(out)
    }

    /// Quotient and remainder of division by a nonzero polynomial.
    pub fn div_rem(&self, f: &Field, divisor: &Poly) -> Result<(Poly, Poly)> {
        let dd = divisor.degree().ok_or_else(|| invalid("division by the zero polynomial"))?;
        let lead_inv = f.inv(divisor.coeffs[dd]);
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return Ok((Poly::zero(), self.clone()));
        }
        let mut quot = vec![FieldElement::ZERO; rem.len() - dd];
        for i in (dd..rem.len()).rev() {
            let c = f.mul(rem[i], lead_inv);
            if c.is_zero() {
                continue;
            }
            quot[i - dd] = c;
            for (j, &dc) in divisor.coeffs.iter().enumerate() {
                rem[i - dd + j] += f.mul(c, dc);
            }
        }
        rem.truncate(dd);
        Ok((Poly::from_coeffs(quot), Poly::from_coeffs(rem)))
    }

    /// The unique polynomial of degree < `points.len()` through the points.
    pub fn interpolate(f: &Field, points: &[(FieldElement, FieldElement)]) -> Result<Poly> {
        let n = points.len();
        for i in 0..n {
            for j in 0..i {
                if points[i].0 == points[j].0 {
                    return Err(invalid(format!("duplicate interpolation abscissa {:?}", points[i].0)));
                }
            }
        }
        // Newton divided differences, then expand the Newton form.
        let xs: Vec<FieldElement> = points.iter().map(|p| p.0).collect();
        let mut dd: Vec<FieldElement> = points.iter().map(|p| p.1).collect();
        for level in 1..n {
            for i in (level..n).rev() {
                let num = dd[i] + dd[i - 1];
                let den = xs[i] + xs[i - level];
                dd[i] = f.div(num, den);
            }
        }
        let mut coeffs = vec![FieldElement::ZERO; n];
        for i in (0..n).rev() {
            // coeffs <- coeffs * (x - xs[i]) + dd[i]
            for j in (1..n).rev() {
                coeffs[j] = coeffs[j - 1] + f.mul(coeffs[j], xs[i]);
            }
            coeffs[0] = f.mul(coeffs[0], xs[i]) + dd[i];
        }
        Ok(Poly::from_coeffs(coeffs))
    }

    /// Hasse derivative of order `j`: the coefficient of `x^i` becomes
    /// C(i+j, j) mod 2 times the coefficient of `x^(i+j)`.
    pub fn hasse(&self, j: usize) -> Poly {
        if j >= self.coeffs.len() {
            return Poly::zero();
        }
        let out = (0..self.coeffs.len() - j)
            .map(|i| if binom_odd(i + j, j) { self.coeffs[i + j] } else { FieldElement::ZERO })
            .collect();
        Poly::from_coeffs(out)
    }

    /// Coefficients of `p(x + a)`, i.e. all Hasse derivatives at `a`.
    pub fn taylor_shift(&self, f: &Field, a: FieldElement) -> Poly {
        let mut c = self.coeffs.clone();
        taylor_shift_in_place(f, &mut c, a);
        Poly::from_coeffs(c)
    }

    /// The first `s` Hasse derivatives at `a`, `(H_0 p)(a), ..., (H_{s-1} p)(a)`.
    pub fn hasse_evals(&self, f: &Field, a: FieldElement, s: usize) -> Vec<FieldElement> {
        hasse_evals_coeffs(f, &self.coeffs, a, s)
    }
}

/// C(n, k) mod 2 via Lucas' theorem.
#[inline]
pub fn binom_odd(n: usize, k: usize) -> bool {
    k <= n && (k & (n - k)) == 0
}

#[inline]
pub fn eval_coeffs(f: &Field, coeffs: &[FieldElement], x: FieldElement) -> FieldElement {
    coeffs.iter().rev().fold(FieldElement::ZERO, |acc, &c| f.mul(acc, x) + c)
}

/// Replaces the coefficients of `p(x)` with those of `p(x + a)`.
pub fn taylor_shift_in_place(f: &Field, c: &mut [FieldElement], a: FieldElement) {
    if a.is_zero() {
        return;
    }
    let n = c.len();
    // Repeated synthetic division by (x - a).
    for i in 0..n {
        for j in (i..n.saturating_sub(1)).rev() {
            let t = f.mul(c[j + 1], a);
            c[j] += t;
        }
    }
}

/// The first `s` coefficients of `p(x + a)` in O(s * deg) operations.
pub fn hasse_evals_coeffs(f: &Field, coeffs: &[FieldElement], a: FieldElement, s: usize) -> Vec<FieldElement> {
    let mut out = Vec::with_capacity(s);
    let mut work = coeffs.to_vec();
    for _ in 0..s {
        if work.is_empty() {
            out.push(FieldElement::ZERO);
            continue;
        }
        // Divide by (x - a): the remainder is the next Taylor coefficient.
        let mut carry = FieldElement::ZERO;
        for c in work.iter_mut().rev() {
            let v = *c + f.mul(carry, a);
            *c = carry;
            carry = v;
        }
        out.push(carry);
        work.pop();
    }
    out
}
