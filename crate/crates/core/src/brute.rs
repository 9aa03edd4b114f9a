//! Exhaustive ground truth for tiny codes: minimum distance, distance of a
//! word to the code, nearest codewords and exact tester rejection
//! probabilities.

use std::collections::HashSet;

use rayon::prelude::*;

use crate::code_api::{ErasableOracle, LocalCode, QueryCountingOracle, Rational, Symbol};
use crate::error::{invalid, Result};
use crate::gf::FieldElement;

/// Largest message space (in bits) that may be enumerated.
pub const MAX_MESSAGE_BITS: usize = 24;
/// Largest number of stored symbols across all codewords.
const MAX_STORED_SYMBOLS: usize = 1 << 27;

/// A code given by the explicit list of its codewords.
#[derive(Clone, Debug)]
pub struct TinyCode<S> {
    words: Vec<Vec<S>>,
    n: usize,
}

fn is_zero<S: Symbol>(s: &S) -> bool {
    s.elems().iter().all(|x| x.is_zero())
}

fn add<S: Symbol>(a: &S, b: &S) -> S {
    let sum: Vec<FieldElement> = a.elems().iter().zip(b.elems()).map(|(&x, &y)| x + y).collect();
    S::from_elems(&sum)
}

impl<S: Symbol> TinyCode<S> {
    /// Encodes every message of `code`. Message i is the base-|F| expansion
    /// of i, least significant element first.
    pub fn from_code<C: LocalCode<Symbol = S>>(code: &C) -> Result<TinyCode<S>> {
        let f = code.message_field();
        let bits = code.message_len() * f.k() as usize;
        if bits > MAX_MESSAGE_BITS {
            return Err(invalid(format!(
                "message space of {bits} bits exceeds the {MAX_MESSAGE_BITS}-bit enumeration cap"
            )));
        }
        let count = 1usize << bits;
        if count.saturating_mul(code.block_length()) > MAX_STORED_SYMBOLS {
            return Err(invalid("code too large to enumerate"));
        }
        let k = f.k();
        let mask = (1u64 << k) - 1;
        let words: Result<Vec<Vec<S>>> = (0..count)
            .into_par_iter()
            .map(|i| {
                let msg: Vec<FieldElement> = (0..code.message_len())
                    .map(|j| FieldElement::from_bits(((i as u64 >> (j as u32 * k)) & mask) as u32))
                    .collect();
                code.encode(&msg)
            })
            .collect();
        TinyCode::from_words(words?)
    }

    pub fn from_words(words: Vec<Vec<S>>) -> Result<TinyCode<S>> {
        let n = words.first().map_or(0, Vec::len);
        if words.is_empty() || words.iter().any(|w| w.len() != n) {
            return Err(invalid("codeword list is empty or ragged"));
        }
        Ok(TinyCode { words, n })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn block_length(&self) -> usize {
        self.n
    }

    pub fn words(&self) -> &[Vec<S>] {
        &self.words
    }

    pub fn weight(word: &[S]) -> usize {
        word.iter().filter(|s| !is_zero(*s)).count()
    }

    /// Whether the list is closed under addition and has no repeats.
    pub fn is_linear(&self) -> bool {
        let set: HashSet<&Vec<S>> = self.words.iter().collect();
        if set.len() != self.words.len() {
            return false;
        }
        self.words.par_iter().all(|a| {
            self.words.iter().all(|b| {
                let sum: Vec<S> = a.iter().zip(b).map(|(x, y)| add(x, y)).collect();
                set.contains(&sum)
            })
        })
    }

    /// Minimum weight of a nonzero codeword; for a linear code this is the
    /// minimum distance. `None` when the code has no nonzero codeword.
    pub fn min_weight(&self) -> Option<usize> {
        self.words.par_iter().map(|w| Self::weight(w)).filter(|&w| w > 0).min()
    }

    /// Minimum distance over all pairs of distinct codewords.
    pub fn min_distance_pairwise(&self) -> Option<usize> {
        (0..self.words.len())
            .into_par_iter()
            .filter_map(|i| self.words[i + 1..].iter().map(|b| hamming(&self.words[i], b)).min())
            .min()
    }

    /// Relative distance from `word` to the nearest codeword.
    pub fn dist(&self, word: &[S]) -> Result<Rational> {
        if word.len() != self.n {
            return Err(invalid("word length does not match the code"));
        }
        let best = self.words.par_iter().map(|c| hamming(c, word)).min().unwrap_or(self.n);
        Ok(Rational::new(best as u128, self.n as u128))
    }

    /// All codewords at minimum Hamming distance from `word`.
    pub fn nearest(&self, word: &[S]) -> Vec<&Vec<S>> {
        let best = self.words.iter().map(|c| hamming(c, word)).min().unwrap_or(0);
        self.words.iter().filter(|c| hamming(c, word) == best).collect()
    }
}

pub fn hamming<S: PartialEq>(a: &[S], b: &[S]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// Minimum distance of a linear code, by enumerating all codewords.
pub fn exact_min_distance<C: LocalCode>(code: &C) -> Result<usize> {
    let tiny = TinyCode::from_code(code)?;
    tiny.min_weight().ok_or_else(|| invalid("code has no nonzero codeword"))
}

/// Relative distance from `word` to `code`.
pub fn exact_dist<C: LocalCode>(code: &C, word: &[C::Symbol]) -> Result<Rational> {
    TinyCode::from_code(code)?.dist(word)
}

/// A tester whose randomness is a uniform choice from a finite set.
pub trait EnumerableTester: LocalCode {
    fn choice_count(&self) -> usize;
    /// Runs the single-trial test with a fixed choice; true means accept.
    fn accepts_with_choice(&self, oracle: &dyn ErasableOracle<Self::Symbol>, choice: usize) -> bool;
}

/// Largest enumerable randomness space.
pub const MAX_TESTER_CHOICES: usize = 1 << 24;

/// Exact single-trial rejection probability of `word` (with erasures),
/// by enumerating the tester's randomness.
pub fn exact_rejection_probability<C: EnumerableTester>(
    code: &C,
    word: &[C::Symbol],
    erased: &[bool],
) -> Result<Rational> {
    let total = code.choice_count();
    if total == 0 || total > MAX_TESTER_CHOICES {
        return Err(invalid(format!("tester randomness space of size {total} is not enumerable")));
    }
    if word.len() != code.block_length() || erased.len() != word.len() {
        return Err(invalid("word length does not match the code"));
    }
    let rejects = (0..total)
        .into_par_iter()
        .filter(|&c| {
            let oracle = QueryCountingOracle::with_erasures(word, erased);
            !code.accepts_with_choice(&oracle, c)
        })
        .count();
    Ok(Rational::new(rejects as u128, total as u128))
}

impl EnumerableTester for crate::tensor::TensorCode {
    fn choice_count(&self) -> usize {
        if self.m() < 3 {
            0
        } else {
            self.plane_count()
        }
    }

    fn accepts_with_choice(&self, oracle: &dyn ErasableOracle<FieldElement>, choice: usize) -> bool {
        self.plane_accepts(oracle, &self.plane(choice))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::Field;
    use crate::reed_solomon::RsCode;
    use crate::tensor::TensorCode;

    struct Repetition {
        f: Field,
        n: usize,
    }

    impl LocalCode for Repetition {
        type Symbol = FieldElement;
        fn code_id(&self) -> String {
            format!("rep({})", self.n)
        }
        fn block_length(&self) -> usize {
            self.n
        }
        fn alphabet(&self) -> crate::code_api::Alphabet {
            crate::code_api::Alphabet::new(&self.f, 1)
        }
        fn message_field(&self) -> Field {
            self.f.clone()
        }
        fn message_len(&self) -> usize {
            1
        }
        fn distance_bound(&self) -> Rational {
            Rational::from_integer(1)
        }
        fn encode(&self, m: &[FieldElement]) -> Result<Vec<FieldElement>> {
            Ok(vec![m[0]; self.n])
        }
        fn is_codeword(&self, w: &[FieldElement]) -> bool {
            w.iter().all(|&x| x == w[0])
        }
    }

    #[test]
    fn repetition_code() {
        let code = Repetition { f: Field::new(2).unwrap(), n: 6 };
        assert_eq!(exact_min_distance(&code).unwrap(), 6);
        let tiny = TinyCode::from_code(&code).unwrap();
        assert!(tiny.is_linear());
        assert_eq!(tiny.min_distance_pairwise(), Some(6));
        let mut w = vec![FieldElement::ONE; 6];
        assert_eq!(tiny.dist(&w).unwrap(), Rational::from_integer(0));
        w[2] = FieldElement::ZERO;
        assert_eq!(tiny.dist(&w).unwrap(), Rational::new(1, 6));
        assert_eq!(tiny.nearest(&w), vec![&vec![FieldElement::ONE; 6]]);
    }

    #[test]
    fn enumeration_cap() {
        let f = Field::new(8).unwrap();
        let rs = RsCode::new(&f, 8, 4).unwrap();
        assert!(TinyCode::from_code(&rs).is_err());
    }

    #[test]
    fn tensor_single_flip_probability() {
        let f = Field::new(2).unwrap();
        let code = TensorCode::new(RsCode::new(&f, 4, 2).unwrap(), 3).unwrap();
        let mut w = vec![FieldElement::ZERO; 64];
        assert_eq!(exact_rejection_probability(&code, &w, &[false; 64]).unwrap(), Rational::from_integer(0));
        w[21] = FieldElement::ONE;
        assert_eq!(exact_rejection_probability(&code, &w, &[false; 64]).unwrap(), Rational::new(1, 4));
    }
}
