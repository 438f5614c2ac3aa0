//! Noncommutative polynomials in self-adjoint generators `X1, ..., Xd`.
//!
//! A polynomial is stored in canonical form: a map from [`Word`] to a real
//! coefficient with no exact-zero entries. Words are ordered by length and
//! then lexicographically, which is also the order used by the formatter.

mod parse;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

pub use parse::{parse, ParseError};

use crate::error::{Error, Result};

/// Generator index, starting at 1.
pub type Letter = u16;

/// A finite sequence of generator indices. The empty word is the unit.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// Builds a word, rejecting the letter 0.
    pub fn new(letters: impl Into<Vec<Letter>>) -> Result<Self> {
        let letters = letters.into();
        if letters.contains(&0) {
            return Err(Error::GeneratorIndex {
                index: 0,
                dim: letters.iter().copied().max().unwrap_or(0) as usize,
            });
        }
        Ok(Word(letters))
    }

    pub(crate) fn from_vec_unchecked(letters: Vec<Letter>) -> Self {
        debug_assert!(!letters.contains(&0));
        Word(letters)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_letter(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0) as usize
    }

    pub fn reversed(&self) -> Word {
        Word(self.0.iter().rev().copied().collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut letters = Vec::with_capacity(self.len() + other.len());
        letters.extend_from_slice(&self.0);
        letters.extend_from_slice(&other.0);
        Word(letters)
    }

    /// Word with `letter` prepended.
    pub fn prepend(&self, letter: Letter) -> Word {
        let mut letters = Vec::with_capacity(self.len() + 1);
        letters.push(letter);
        letters.extend_from_slice(&self.0);
        Word(letters)
    }

    /// Word with the letter at `pos` (0-based) removed.
    pub fn remove_at(&self, pos: usize) -> Word {
        let mut letters = self.0.clone();
        letters.remove(pos);
        Word(letters)
    }

    /// Sorted letters: the multiset ("letter type") of the word.
    pub fn letter_type(&self) -> Vec<Letter> {
        let mut t = self.0.clone();
        t.sort_unstable();
        t
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("e0");
        }
        let parts: Vec<String> = self.0.iter().map(|l| format!("X{l}")).collect();
        f.write_str(&parts.join("*"))
    }
}

impl TryFrom<&[Letter]> for Word {
    type Error = Error;

    fn try_from(letters: &[Letter]) -> Result<Self> {
        Word::new(letters.to_vec())
    }
}

/// A noncommutative polynomial with real coefficients.
///
/// Equality compares terms only; the dimension is a hint that operations
/// combine by taking the maximum.
#[derive(Clone, Default)]
pub struct NcPolynomial {
    terms: BTreeMap<Word, f64>,
    dim: usize,
}

impl NcPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn constant(c: f64) -> Self {
        Self::monomial(Word::empty(), c)
    }

    /// The generator `X_i`, `i >= 1`.
    pub fn generator(i: usize) -> Result<Self> {
        if i == 0 || i > Letter::MAX as usize {
            return Err(Error::GeneratorIndex { index: i, dim: 0 });
        }
        Ok(Self::monomial(Word(vec![i as Letter]), 1.0))
    }

    pub fn monomial(word: Word, coeff: f64) -> Self {
        let mut p = Self::zero();
        p.dim = word.max_letter();
        p.add_term(word, coeff);
        p
    }

    pub fn from_terms<I: IntoIterator<Item = (Word, f64)>>(terms: I) -> Self {
        let mut p = Self::zero();
        for (w, c) in terms {
            p.dim = p.dim.max(w.max_letter());
            p.add_term(w, c);
        }
        p
    }

    /// Adds `coeff * word`, dropping the entry if it cancels to exactly zero.
    pub fn add_term(&mut self, word: Word, coeff: f64) {
        if coeff == 0.0 {
            return;
        }
        self.dim = self.dim.max(word.max_letter());
        match self.terms.entry(word) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = *e.get() + coeff;
                if s == 0.0 {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, f64)> + '_ {
        self.terms.iter().map(|(w, &c)| (w, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, word: &Word) -> f64 {
        self.terms.get(word).copied().unwrap_or(0.0)
    }

    /// Number of generators this polynomial is considered to act on.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Raises the dimension hint; never lowers it below the largest letter.
    pub fn with_dim(mut self, d: usize) -> Self {
        self.dim = self.dim.max(d);
        self
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Maximum word length; 0 for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.terms.keys().next_back().map_or(0, Word::len)
    }

    pub fn scale(&self, factor: f64) -> Self {
        let mut out = Self {
            terms: BTreeMap::new(),
            dim: self.dim,
        };
        for (w, &c) in &self.terms {
            out.add_term(w.clone(), c * factor);
        }
        out
    }

    /// Free-algebra product: bilinear extension of word concatenation.
    pub fn multiply(&self, other: &Self) -> Self {
        let mut out = Self {
            terms: BTreeMap::new(),
            dim: self.dim.max(other.dim),
        };
        for (u, &a) in &self.terms {
            for (v, &b) in &other.terms {
                out.add_term(u.concat(v), a * b);
            }
        }
        out
    }

    /// Reverses every word; generators are self-adjoint and coefficients real.
    pub fn adjoint(&self) -> Self {
        Self {
            terms: self.terms.iter().map(|(w, &c)| (w.reversed(), c)).collect(),
            dim: self.dim,
        }
    }

    /// `(P* P)^n` for `n >= 1`.
    pub fn star_power(&self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "star_power requires n >= 1".to_string(),
            ));
        }
        let base = self.adjoint().multiply(self);
        let mut acc = base.clone();
        for _ in 1..n {
            acc = acc.multiply(&base);
        }
        Ok(acc)
    }

    pub fn is_self_adjoint(&self) -> bool {
        self.terms
            .iter()
            .all(|(w, &c)| self.coeff(&w.reversed()) == c)
    }

    /// Words whose coefficient differs from that of their reversal.
    pub fn asymmetric_terms(&self) -> Vec<Word> {
        self.terms
            .iter()
            .filter(|(w, &c)| self.coeff(&w.reversed()) != c)
            .map(|(w, _)| w.clone())
            .collect()
    }
}

impl PartialEq for NcPolynomial {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
    }
}

impl fmt::Debug for NcPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NcPolynomial({self})")
    }
}

/// Canonical text form, re-parseable by [`parse`].
impl fmt::Display for NcPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (idx, (w, &c)) in self.terms.iter().enumerate() {
            let magnitude = c.abs();
            if idx == 0 {
                if c < 0.0 {
                    f.write_str("-")?;
                }
            } else if c < 0.0 {
                f.write_str(" - ")?;
            } else {
                f.write_str(" + ")?;
            }
            if w.is_empty() {
                write!(f, "{magnitude}")?;
                continue;
            }
            if magnitude != 1.0 {
                write!(f, "{magnitude}*")?;
            }
            for (j, l) in w.letters().iter().enumerate() {
                if j > 0 {
                    f.write_str("*")?;
                }
                write!(f, "X{l}")?;
            }
        }
        Ok(())
    }
}

/// Canonical string of a polynomial.
pub fn format(p: &NcPolynomial) -> String {
    p.to_string()
}

impl FromStr for NcPolynomial {
    type Err = ParseError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        parse(s)
    }
}

impl Add for &NcPolynomial {
    type Output = NcPolynomial;

    fn add(self, rhs: &NcPolynomial) -> NcPolynomial {
        let mut out = self.clone();
        out.dim = out.dim.max(rhs.dim);
        for (w, &c) in &rhs.terms {
            out.add_term(w.clone(), c);
        }
        out
    }
}

impl Sub for &NcPolynomial {
    type Output = NcPolynomial;

    fn sub(self, rhs: &NcPolynomial) -> NcPolynomial {
        let mut out = self.clone();
        out.dim = out.dim.max(rhs.dim);
        for (w, &c) in &rhs.terms {
            out.add_term(w.clone(), -c);
        }
        out
    }
}

impl Mul for &NcPolynomial {
    type Output = NcPolynomial;

    fn mul(self, rhs: &NcPolynomial) -> NcPolynomial {
        self.multiply(rhs)
    }
}

impl Neg for &NcPolynomial {
    type Output = NcPolynomial;

    fn neg(self) -> NcPolynomial {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(letters: &[Letter]) -> Word {
        Word::new(letters.to_vec()).unwrap()
    }

    fn p(s: &str) -> NcPolynomial {
        parse(s).unwrap()
    }

    #[test]
    fn word_order_is_length_then_lex() {
        let mut words = vec![w(&[2]), w(&[1, 1]), w(&[]), w(&[1]), w(&[1, 2])];
        words.sort();
        assert_eq!(
            words,
            vec![w(&[]), w(&[1]), w(&[2]), w(&[1, 1]), w(&[1, 2])]
        );
    }

    #[test]
    fn word_rejects_zero_letter() {
        assert!(Word::new(vec![1, 0]).is_err());
    }

    #[test]
    fn multiply_examples() {
        assert_eq!(p("X1").multiply(&p("X2")), p("X1*X2"));
        assert_eq!(p("X1+X2").multiply(&NcPolynomial::one()), p("X1 + X2"));
        let cancelled = &p("X1") - &p("X1");
        assert!(cancelled.multiply(&p("X2")).is_zero());
    }

    #[test]
    fn adjoint_examples() {
        assert_eq!(p("X1*X2").adjoint(), p("X2*X1"));
        let sa = p("X1*X2 + X2*X1");
        assert_eq!(sa.adjoint(), sa);
        assert!(sa.is_self_adjoint());
        assert!(NcPolynomial::zero().adjoint().is_zero());
    }

    #[test]
    fn star_power_examples() {
        let x1 = p("X1");
        assert_eq!(x1.star_power(1).unwrap(), p("X1*X1"));
        assert_eq!(x1.star_power(2).unwrap(), p("X1^4"));
        let s = p("X1+X2").star_power(1).unwrap();
        assert_eq!(s.num_terms(), 4);
        assert!(s.terms().all(|(_, c)| c == 1.0));
        assert!(x1.star_power(0).is_err());
    }

    #[test]
    fn star_power_degree() {
        let q = p("X1*X2 - 0.5*X2 + 3");
        for n in 1..4 {
            assert_eq!(q.star_power(n).unwrap().degree(), 2 * n * q.degree());
        }
    }

    #[test]
    fn format_examples() {
        assert_eq!(format(&NcPolynomial::zero()), "0");
        assert_eq!(format(&NcPolynomial::monomial(w(&[1]), 2.5)), "2.5*X1");
        assert_eq!(format(&NcPolynomial::monomial(w(&[2, 1]), 1.0)), "X2*X1");
        assert_eq!(format(&p("X1*X2 - X2*X1 - 3")), "-3 + X1*X2 - X2*X1");
    }

    #[test]
    fn degree_and_dim() {
        let q = p("X3*X1 + 2");
        assert_eq!(q.degree(), 2);
        assert_eq!(q.dim(), 3);
        assert_eq!(NcPolynomial::zero().degree(), 0);
        assert_eq!(q.clone().with_dim(5).dim(), 5);
        assert_eq!(q.with_dim(1).dim(), 3);
    }

    #[test]
    fn asymmetric_terms_named() {
        let q = p("X1*X2 + X2*X1 + X1*X2*X2");
        assert_eq!(q.asymmetric_terms(), vec![w(&[1, 2, 2])]);
    }
}
