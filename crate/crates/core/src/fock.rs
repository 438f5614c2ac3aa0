//! The q-deformed Fock space over `R^d`, restricted to finitely many levels.
//!
//! Vectors are kept in the (non-orthogonal) tensor basis `e_w`, grouped by
//! level `|w|`. The q-inner product
//! `<e_w, e_v>_q = [|w| == |v|] sum_{pi in S_m} q^{inv(pi)} prod_i [w_i == v_pi(i)]`
//! vanishes unless `w` and `v` are rearrangements of one another, so the
//! Gram matrix of each level is block-diagonal by letter multiset.
//!
//! Operators:
//! - creation `l_i e_w = e_{iw}`,
//! - annihilation `l_i* e_w = sum_{j : w_j = i} q^{j-1} e_{w without position j}`,
//! - the q-Gaussian `A_i = l_i + l_i*`.
//!
//! `tau(X) = <X e_0, e_0>_q` is the level-0 coefficient of `X e_0`.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::sync::RwLock;

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{check_open_q, Error, Result};
use crate::ncpoly::{Letter, NcPolynomial, Word};
use crate::sum::CompensatedSum;

/// A finitely supported Fock-space vector, coefficients grouped by level.
#[derive(Debug, Clone, PartialEq)]
pub struct LeveledVector {
    levels: Vec<BTreeMap<Word, f64>>,
    q: f64,
    d: usize,
}

impl LeveledVector {
    pub fn zero(q: f64, d: usize) -> Self {
        LeveledVector {
            levels: Vec::new(),
            q,
            d,
        }
    }

    /// The vacuum `e_0`.
    pub fn vacuum(q: f64, d: usize) -> Self {
        Self::basis(Word::empty(), q, d)
    }

    pub fn basis(word: Word, q: f64, d: usize) -> Self {
        let mut v = Self::zero(q, d);
        v.add_term(word, 1.0);
        v
    }

    pub fn from_terms<I: IntoIterator<Item = (Word, f64)>>(terms: I, q: f64, d: usize) -> Self {
        let mut v = Self::zero(q, d);
        for (w, c) in terms {
            v.add_term(w, c);
        }
        v
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn add_term(&mut self, word: Word, coeff: f64) {
        if coeff == 0.0 {
            return;
        }
        let k = word.len();
        if self.levels.len() <= k {
            self.levels.resize_with(k + 1, BTreeMap::new);
        }
        match self.levels[k].entry(word) {
            Entry::Vacant(e) => {
                e.insert(coeff);
            }
            Entry::Occupied(mut e) => {
                let s = *e.get() + coeff;
                if s == 0.0 {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn coeff(&self, word: &Word) -> f64 {
        self.levels
            .get(word.len())
            .and_then(|l| l.get(word))
            .copied()
            .unwrap_or(0.0)
    }

    /// Nonempty levels in increasing order.
    pub fn levels(&self) -> impl Iterator<Item = (usize, &BTreeMap<Word, f64>)> + '_ {
        self.levels
            .iter()
            .enumerate()
            .filter(|(_, l)| !l.is_empty())
    }

    pub fn level(&self, k: usize) -> Option<&BTreeMap<Word, f64>> {
        self.levels.get(k).filter(|l| !l.is_empty())
    }

    /// All terms, by level then lexicographically.
    pub fn terms(&self) -> impl Iterator<Item = (&Word, f64)> + '_ {
        self.levels
            .iter()
            .flat_map(|l| l.iter().map(|(w, &c)| (w, c)))
    }

    pub fn num_terms(&self) -> usize {
        self.levels.iter().map(BTreeMap::len).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.levels.iter().all(BTreeMap::is_empty)
    }

    /// Highest nonempty level, `None` for the zero vector.
    pub fn max_level(&self) -> Option<usize> {
        self.levels.iter().rposition(|l| !l.is_empty())
    }

    pub fn max_abs(&self) -> f64 {
        self.terms().map(|(_, c)| c.abs()).fold(0.0, f64::max)
    }

    pub fn scale(&mut self, factor: f64) {
        for level in &mut self.levels {
            for c in level.values_mut() {
                *c *= factor;
            }
            level.retain(|_, c| *c != 0.0);
        }
    }

    pub fn add_scaled(&mut self, other: &LeveledVector, factor: f64) {
        for (w, c) in other.terms() {
            self.add_term(w.clone(), c * factor);
        }
    }

    /// Drops every level above `max_level`.
    pub fn truncate_above(&mut self, max_level: usize) {
        self.levels.truncate(max_level + 1);
        self.trim();
    }

    /// Keeps only level `k`.
    pub fn level_component(&self, k: usize) -> LeveledVector {
        let mut out = Self::zero(self.q, self.d);
        if let Some(l) = self.level(k) {
            for (w, &c) in l {
                out.add_term(w.clone(), c);
            }
        }
        out
    }

    fn trim(&mut self) {
        while self.levels.last().is_some_and(BTreeMap::is_empty) {
            self.levels.pop();
        }
    }

    fn from_levels(levels: Vec<BTreeMap<Word, f64>>, q: f64, d: usize) -> Self {
        let mut v = LeveledVector { levels, q, d };
        for l in &mut v.levels {
            l.retain(|_, c| *c != 0.0);
        }
        v.trim();
        v
    }
}

/// Gram matrix of all distinct arrangements of one letter multiset.
#[derive(Debug, Clone)]
pub struct GramBlock {
    pub words: Vec<Word>,
    pub matrix: DMatrix<f64>,
}

impl GramBlock {
    pub fn dim(&self) -> usize {
        self.words.len()
    }

    /// Cholesky factor `L` with `G = L L^T`.
    pub fn cholesky(&self) -> Result<Cholesky<f64, Dyn>> {
        Cholesky::new(self.matrix.clone()).ok_or_else(|| {
            Error::GramNotPositive(
                self.words
                    .first()
                    .map(Word::letter_type)
                    .unwrap_or_default(),
            )
        })
    }
}

/// Distinct arrangements of a letter multiset in lexicographic order.
pub fn arrangements(letter_type: &[Letter]) -> Vec<Word> {
    let mut cur = letter_type.to_vec();
    cur.sort_unstable();
    let mut out = vec![Word::from_vec_unchecked(cur.clone())];
    while next_permutation(&mut cur) {
        out.push(Word::from_vec_unchecked(cur.clone()));
    }
    out
}

fn next_permutation(xs: &mut [Letter]) -> bool {
    if xs.len() < 2 {
        return false;
    }
    let Some(i) = (0..xs.len() - 1).rev().find(|&i| xs[i] < xs[i + 1]) else {
        return false;
    };
    let j = (i + 1..xs.len())
        .rev()
        .find(|&j| xs[j] > xs[i])
        .expect("successor");
    xs.swap(i, j);
    xs[i + 1..].reverse();
    true
}

/// Number of distinct arrangements of a multiset with the given letter
/// counts (a multinomial coefficient), saturating.
pub fn multinomial(counts: &[usize]) -> u128 {
    let mut total = 0usize;
    let mut acc: u128 = 1;
    for &c in counts {
        for k in 1..=c {
            total += 1;
            acc = acc.saturating_mul(total as u128) / k as u128;
        }
    }
    acc
}

/// Largest Gram block at level `k` over `d` letters (the most balanced
/// letter multiset).
pub fn max_block_dim(level: usize, d: usize) -> u128 {
    if d == 0 {
        return u128::from(level == 0);
    }
    let base = level / d;
    let extra = level % d;
    let counts: Vec<usize> = (0..d).map(|i| base + usize::from(i < extra)).collect();
    multinomial(&counts)
}

/// The q-Fock space over `d` generators, with a memo cache for q-inner
/// products of basis words.
#[derive(Debug)]
pub struct FockSpace {
    q: f64,
    d: usize,
    cache: Option<RwLock<HashMap<(Word, Word), f64>>>,
}

impl Clone for FockSpace {
    fn clone(&self) -> Self {
        let mut out = FockSpace {
            q: self.q,
            d: self.d,
            cache: None,
        };
        if self.cache.is_some() {
            out.cache = Some(RwLock::new(HashMap::new()));
        }
        out
    }
}

impl FockSpace {
    /// Requires `|q| < 1`.
    pub fn new(q: f64, d: usize) -> Result<Self> {
        check_open_q(q)?;
        Ok(FockSpace {
            q,
            d,
            cache: Some(RwLock::new(HashMap::new())),
        })
    }

    /// Same space without memoization; results are identical.
    pub fn without_cache(q: f64, d: usize) -> Result<Self> {
        let mut s = Self::new(q, d)?;
        s.cache = None;
        Ok(s)
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn vacuum(&self) -> LeveledVector {
        LeveledVector::vacuum(self.q, self.d)
    }

    pub fn basis(&self, word: Word) -> LeveledVector {
        LeveledVector::basis(word, self.q, self.d)
    }

    pub fn zero(&self) -> LeveledVector {
        LeveledVector::zero(self.q, self.d)
    }

    fn q_pow(&self, k: usize) -> f64 {
        self.q.powi(k as i32)
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.d {
            Err(Error::GeneratorIndex {
                index: i,
                dim: self.d,
            })
        } else {
            Ok(())
        }
    }

    fn check_vector(&self, v: &LeveledVector) -> Result<()> {
        if v.q != self.q || v.d > self.d {
            return Err(Error::InvalidArgument(format!(
                "vector built for (q = {}, d = {}) used in space (q = {}, d = {})",
                v.q, v.d, self.q, self.d
            )));
        }
        Ok(())
    }

    /// `<e_w, e_v>_q`.
    pub fn q_inner(&self, w: &Word, v: &Word) -> f64 {
        if w.len() != v.len() {
            return 0.0;
        }
        if w.letter_type() != v.letter_type() {
            return 0.0;
        }
        self.q_inner_same_type(w.letters(), v.letters())
    }

    fn q_inner_same_type(&self, w: &[Letter], v: &[Letter]) -> f64 {
        if w.is_empty() {
            return 1.0;
        }
        if w.len() == 1 {
            return 1.0;
        }
        // symmetric; always evaluate in one orientation so cached and
        // uncached results agree bit for bit
        let (w, v) = if w <= v { (w, v) } else { (v, w) };
        let key = (
            Word::from_vec_unchecked(w.to_vec()),
            Word::from_vec_unchecked(v.to_vec()),
        );
        if let Some(cache) = &self.cache {
            if let Some(&hit) = cache.read().expect("cache lock").get(&key) {
                return hit;
            }
        }
        let first = w[0];
        let rest = &w[1..];
        let mut acc = 0.0;
        let mut reduced = Vec::with_capacity(v.len() - 1);
        for (j, &letter) in v.iter().enumerate() {
            if letter != first {
                continue;
            }
            reduced.clear();
            reduced.extend_from_slice(&v[..j]);
            reduced.extend_from_slice(&v[j + 1..]);
            acc += self.q_pow(j) * self.q_inner_same_type(rest, &reduced);
        }
        if let Some(cache) = &self.cache {
            cache.write().expect("cache lock").insert(key, acc);
        }
        acc
    }

    /// Gram matrix over all arrangements of `letter_type`.
    pub fn gram_block(&self, letter_type: &[Letter]) -> GramBlock {
        let words = arrangements(letter_type);
        let n = words.len();
        let mut matrix = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let g = self.q_inner_same_type(words[i].letters(), words[j].letters());
                matrix[(i, j)] = g;
                matrix[(j, i)] = g;
            }
        }
        GramBlock { words, matrix }
    }

    /// `<u, v>_q`, summed block by block.
    pub fn inner(&self, u: &LeveledVector, v: &LeveledVector) -> f64 {
        let mut total = CompensatedSum::default();
        for (k, lu) in u.levels() {
            let Some(lv) = v.level(k) else { continue };
            if k == 0 {
                total.add(
                    lu.values().next().copied().unwrap_or(0.0)
                        * lv.values().next().copied().unwrap_or(0.0),
                );
                continue;
            }
            let bu = group_by_type(lu);
            let bv = group_by_type(lv);
            for (t, words_u) in &bu {
                let Some(words_v) = bv.get(t) else { continue };
                for &(wu, a) in words_u {
                    for &(wv, b) in words_v {
                        total.add(a * b * self.q_inner_same_type(wu.letters(), wv.letters()));
                    }
                }
            }
        }
        total.value()
    }

    /// `||v||_q`.
    pub fn norm(&self, v: &LeveledVector) -> f64 {
        self.inner(v, v).max(0.0).sqrt()
    }

    /// `l_i v`, optionally dropping anything created above `max_level`.
    pub fn create(
        &self,
        i: usize,
        v: &LeveledVector,
        max_level: Option<usize>,
    ) -> Result<LeveledVector> {
        self.check_index(i)?;
        self.check_vector(v)?;
        let letter = i as Letter;
        let top = v.levels.len();
        let limit = max_level.map_or(top + 1, |m| (top + 1).min(m + 1));
        let mut levels = vec![BTreeMap::new(); limit];
        for (k, l) in v.levels() {
            if k + 1 >= limit {
                break;
            }
            levels[k + 1] = l.iter().map(|(w, &c)| (w.prepend(letter), c)).collect();
        }
        Ok(LeveledVector::from_levels(levels, self.q, self.d))
    }

    /// `l_i* v`.
    pub fn annihilate(&self, i: usize, v: &LeveledVector) -> Result<LeveledVector> {
        self.check_index(i)?;
        self.check_vector(v)?;
        let letter = i as Letter;
        let mut out = self.zero();
        for (k, l) in v.levels() {
            if k == 0 {
                continue;
            }
            for (w, &c) in l {
                for (j, &x) in w.letters().iter().enumerate() {
                    if x == letter {
                        out.add_term(w.remove_at(j), c * self.q_pow(j));
                    }
                }
            }
        }
        Ok(out)
    }

    /// `A_i v = l_i v + l_i* v`.
    pub fn apply_gaussian(&self, i: usize, v: &LeveledVector) -> Result<LeveledVector> {
        let mut out = self.create(i, v, None)?;
        out.add_scaled(&self.annihilate(i, v)?, 1.0);
        Ok(out)
    }

    /// `P(A) v`.
    ///
    /// With `keep_levels = Some(K)`, only levels `<= K` of the result are
    /// produced; intermediate vectors that can no longer reach those levels
    /// are pruned on the way.
    pub fn apply_polynomial(
        &self,
        p: &NcPolynomial,
        v: &LeveledVector,
        keep_levels: Option<usize>,
    ) -> Result<LeveledVector> {
        self.check_vector(v)?;
        if p.dim() > self.d {
            return Err(Error::GeneratorIndex {
                index: p.dim(),
                dim: self.d,
            });
        }
        let trie = Trie::build(p);
        let mut input = v.clone();
        if let Some(k) = keep_levels {
            input.truncate_above(k + p.degree());
        }
        self.eval_trie(&trie, &input, 0, keep_levels)
    }

    fn eval_trie(
        &self,
        node: &Trie,
        v: &LeveledVector,
        depth: usize,
        keep: Option<usize>,
    ) -> Result<LeveledVector> {
        let mut out = self.zero();
        if node.constant != 0.0 {
            out.add_scaled(v, node.constant);
        }
        for (&letter, child) in &node.children {
            let inner = self.eval_trie(child, v, depth + 1, keep)?;
            let applied = self.apply_gaussian(letter as usize, &inner)?;
            out.add_scaled(&applied, 1.0);
        }
        if let Some(k) = keep {
            out.truncate_above(k + depth);
        }
        Ok(out)
    }

    /// `P(A) e_0`; its level-k coefficients are the Wick-basis coefficients
    /// of `P(A)` at level `k`.
    pub fn vacuum_expand(&self, p: &NcPolynomial) -> Result<LeveledVector> {
        let vac = self.vacuum();
        self.apply_polynomial(p, &vac, None)
    }

    /// `tau(P(A))`, exact up to rounding.
    pub fn moment(&self, p: &NcPolynomial) -> Result<f64> {
        let vac = self.vacuum();
        let v = self.apply_polynomial(p, &vac, Some(0))?;
        Ok(v.coeff(&Word::empty()))
    }

    /// `||P(A)||_2 = ||P(A) e_0||_q`.
    pub fn l2_norm(&self, p: &NcPolynomial) -> Result<f64> {
        let xi = self.vacuum_expand(p)?;
        Ok(self.norm(&xi))
    }

    /// `(k, ||level-k part of P(A) e_0||_q)` for every nonempty level.
    pub fn level_l2_norms(&self, p: &NcPolynomial) -> Result<Vec<(usize, f64)>> {
        let xi = self.vacuum_expand(p)?;
        Ok(xi
            .levels()
            .map(|(k, _)| (k, self.norm(&xi.level_component(k))))
            .collect())
    }

    /// The polynomial `W` with `W(A) e_0 = v`: inverse of [`Self::vacuum_expand`].
    ///
    /// Built from `W(e_{iw}) = X_i W(e_w) - W(l_i* e_w)`.
    pub fn wick_polynomial(&self, v: &LeveledVector) -> Result<NcPolynomial> {
        self.check_vector(v)?;
        let mut memo: HashMap<Word, NcPolynomial> = HashMap::new();
        let mut out = NcPolynomial::zero().with_dim(self.d);
        for (w, c) in v.terms() {
            let wp = self.wick_word(w, &mut memo)?;
            out = &out + &wp.scale(c);
        }
        Ok(out)
    }

    fn wick_word(&self, w: &Word, memo: &mut HashMap<Word, NcPolynomial>) -> Result<NcPolynomial> {
        if let Some(p) = memo.get(w) {
            return Ok(p.clone());
        }
        let result = if w.is_empty() {
            NcPolynomial::one()
        } else {
            let first = w.letters()[0];
            let rest = Word::from_vec_unchecked(w.letters()[1..].to_vec());
            let head = NcPolynomial::generator(first as usize)?;
            let mut acc = head.multiply(&self.wick_word(&rest, memo)?);
            for (j, &x) in rest.letters().iter().enumerate() {
                if x == first {
                    let lower = self.wick_word(&rest.remove_at(j), memo)?;
                    acc = &acc - &lower.scale(self.q_pow(j));
                }
            }
            acc
        };
        memo.insert(w.clone(), result.clone());
        Ok(result)
    }
}

fn group_by_type(level: &BTreeMap<Word, f64>) -> BTreeMap<Vec<Letter>, Vec<(&Word, f64)>> {
    let mut out: BTreeMap<Vec<Letter>, Vec<(&Word, f64)>> = BTreeMap::new();
    for (w, &c) in level {
        out.entry(w.letter_type()).or_default().push((w, c));
    }
    out
}

/// Prefix tree of a polynomial's words for Horner-style evaluation:
/// `P = c + sum_i X_i P_i`.
#[derive(Default)]
struct Trie {
    constant: f64,
    children: BTreeMap<Letter, Trie>,
}

impl Trie {
    fn build(p: &NcPolynomial) -> Trie {
        let mut root = Trie::default();
        for (w, c) in p.terms() {
            let mut node = &mut root;
            for &l in w.letters() {
                node = node.children.entry(l).or_default();
            }
            node.constant += c;
        }
        root
    }
}

/// `<e_w, e_v>_q` in a fresh session.
pub fn q_inner(w: &Word, v: &Word, q: f64) -> Result<f64> {
    let d = w.max_letter().max(v.max_letter());
    Ok(FockSpace::new(q, d)?.q_inner(w, v))
}

/// Gram block of `letter_type` in a fresh session.
pub fn gram_block(letter_type: &[Letter], q: f64) -> Result<GramBlock> {
    let d = letter_type.iter().copied().max().unwrap_or(0) as usize;
    Ok(FockSpace::new(q, d)?.gram_block(letter_type))
}

/// `P(A) e_0` in a fresh session sized for `P`.
pub fn vacuum_expand(p: &NcPolynomial, q: f64) -> Result<LeveledVector> {
    FockSpace::new(q, p.dim())?.vacuum_expand(p)
}

/// `tau(P)` computed on the Fock space.
pub fn moment_fock(p: &NcPolynomial, q: f64) -> Result<f64> {
    FockSpace::new(q, p.dim())?.moment(p)
}

pub fn l2_norm(p: &NcPolynomial, q: f64) -> Result<f64> {
    FockSpace::new(q, p.dim())?.l2_norm(p)
}

pub fn level_l2_norms(p: &NcPolynomial, q: f64) -> Result<Vec<(usize, f64)>> {
    FockSpace::new(q, p.dim())?.level_l2_norms(p)
}
