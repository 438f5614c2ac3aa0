//! Inversions of permutations, pair partitions and their crossing numbers.

use crate::error::{Error, Result};

/// Number of pairs `i < j` with `perm[i] > perm[j]`.
///
/// `perm` must be a permutation of `1..=m`.
pub fn inversions(perm: &[usize]) -> Result<u64> {
    let m = perm.len();
    let mut seen = vec![false; m];
    for &p in perm {
        if p == 0 || p > m || seen[p - 1] {
            return Err(Error::InvalidArgument(format!(
                "{perm:?} is not a permutation of 1..={m}"
            )));
        }
        seen[p - 1] = true;
    }
    let mut count = 0u64;
    for i in 0..m {
        for j in i + 1..m {
            if perm[i] > perm[j] {
                count += 1;
            }
        }
    }
    Ok(count)
}

/// A perfect matching of `{1, ..., n}`; blocks `(a, b)` with `a < b`,
/// sorted by first element.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PairPartition {
    pairs: Vec<(usize, usize)>,
}

impl PairPartition {
    /// Validates and canonicalizes a list of 1-based blocks.
    pub fn new(pairs: impl Into<Vec<(usize, usize)>>) -> Result<Self> {
        let mut pairs: Vec<(usize, usize)> = pairs
            .into()
            .into_iter()
            .map(|(a, b)| if a < b { (a, b) } else { (b, a) })
            .collect();
        pairs.sort_unstable();
        let n = 2 * pairs.len();
        let mut seen = vec![false; n];
        for &(a, b) in &pairs {
            for x in [a, b] {
                if x == 0 || x > n || seen[x - 1] {
                    return Err(Error::InvalidArgument(format!(
                        "{pairs:?} is not a pair partition of 1..={n}"
                    )));
                }
                seen[x - 1] = true;
            }
        }
        Ok(PairPartition { pairs })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Size of the underlying set.
    pub fn n(&self) -> usize {
        2 * self.pairs.len()
    }

    /// Image under `i -> n + 1 - i`.
    pub fn reflect(&self) -> PairPartition {
        let n = self.n();
        let mut pairs: Vec<_> = self
            .pairs
            .iter()
            .map(|&(a, b)| (n + 1 - b, n + 1 - a))
            .collect();
        pairs.sort_unstable();
        PairPartition { pairs }
    }
}

/// Number of block pairs `(a, b), (c, d)` with `a < c < b < d`.
pub fn crossings(p: &PairPartition) -> u32 {
    crossings_of(&p.pairs)
}

/// Crossing count of blocks sorted by first element; any consistent
/// indexing base works.
pub(crate) fn crossings_of(pairs: &[(usize, usize)]) -> u32 {
    let mut count = 0;
    for (i, &(_, b)) in pairs.iter().enumerate() {
        for &(c, d) in &pairs[i + 1..] {
            // c > a by sort order
            if c < b && b < d {
                count += 1;
            }
        }
    }
    count
}

/// `(n - 1)!!` for even `n`, with `(-1)!! = 1`.
pub fn double_factorial_odd(n: usize) -> u128 {
    (1..n).step_by(2).map(|k| k as u128).product()
}

/// Depth-first enumerator of perfect matchings of `0..n` whose blocks
/// satisfy a compatibility predicate.
///
/// The smallest unmatched element is paired with each admissible larger
/// partner in increasing order, recursively. Blocks below `floor` were fixed
/// at construction and are never revisited.
pub(crate) struct Matchings<F> {
    n: usize,
    compatible: F,
    used: Vec<bool>,
    pairs: Vec<(usize, usize)>,
    floor: usize,
    started: bool,
    exhausted: bool,
}

impl<F: Fn(usize, usize) -> bool> Matchings<F> {
    pub(crate) fn new(n: usize, compatible: F) -> Self {
        Matchings {
            n,
            compatible,
            used: vec![false; n],
            pairs: Vec::with_capacity(n / 2),
            floor: 0,
            started: false,
            exhausted: n % 2 == 1,
        }
    }

    /// Only the matchings in which element 0 is paired with `partner`.
    pub(crate) fn with_first_partner(n: usize, partner: usize, compatible: F) -> Self {
        let mut m = Self::new(n, compatible);
        if n < 2 || partner == 0 || partner >= n || !(m.compatible)(0, partner) {
            m.exhausted = true;
            return m;
        }
        m.used[0] = true;
        m.used[partner] = true;
        m.pairs.push((0, partner));
        m.floor = 1;
        m
    }

    fn next_partner(&self, a: usize, after: usize) -> Option<usize> {
        (after + 1..self.n).find(|&c| !self.used[c] && (self.compatible)(a, c))
    }

    /// Advances to the next complete matching; blocks are 0-based and sorted.
    pub(crate) fn next_matching(&mut self) -> Option<&[(usize, usize)]> {
        if self.exhausted {
            return None;
        }
        let mut descend = !self.started;
        self.started = true;
        loop {
            if descend {
                match self.used.iter().position(|&u| !u) {
                    None => return Some(&self.pairs),
                    Some(a) => match self.next_partner(a, a) {
                        Some(c) => {
                            self.used[a] = true;
                            self.used[c] = true;
                            self.pairs.push((a, c));
                        }
                        None => descend = false,
                    },
                }
            } else {
                if self.pairs.len() <= self.floor {
                    self.exhausted = true;
                    return None;
                }
                let (a, b) = self.pairs.pop().expect("nonempty");
                self.used[a] = false;
                self.used[b] = false;
                if let Some(c) = self.next_partner(a, b) {
                    self.used[a] = true;
                    self.used[c] = true;
                    self.pairs.push((a, c));
                    descend = true;
                }
            }
        }
    }
}

/// Stream over all pair partitions of `{1, ..., n}`.
pub struct PairPartitions {
    inner: Matchings<fn(usize, usize) -> bool>,
}

fn always(_: usize, _: usize) -> bool {
    true
}

impl Iterator for PairPartitions {
    type Item = PairPartition;

    fn next(&mut self) -> Option<PairPartition> {
        self.inner.next_matching().map(|pairs| PairPartition {
            pairs: pairs.iter().map(|&(a, b)| (a + 1, b + 1)).collect(),
        })
    }
}

fn check_even(n: usize) -> Result<()> {
    if n % 2 == 1 {
        Err(Error::InvalidArgument(format!(
            "pair partitions need an even set size, got {n}"
        )))
    } else {
        Ok(())
    }
}

/// All `(n - 1)!!` pair partitions of `{1, ..., n}`, in a fixed order.
pub fn pair_partitions(n: usize) -> Result<PairPartitions> {
    check_even(n)?;
    Ok(PairPartitions {
        inner: Matchings::new(n, always as fn(usize, usize) -> bool),
    })
}

/// The stream of [`pair_partitions`] split by the partner of element 1.
///
/// Sub-streams are disjoint, cover everything, and may be consumed
/// independently (e.g. on different threads). Concatenated in order they
/// reproduce the unsplit stream.
pub fn pair_partitions_split(n: usize) -> Result<Vec<PairPartitions>> {
    check_even(n)?;
    if n == 0 {
        return Ok(vec![pair_partitions(0)?]);
    }
    Ok((1..n)
        .map(|partner| PairPartitions {
            inner: Matchings::with_first_partner(n, partner, always as fn(usize, usize) -> bool),
        })
        .collect())
}
