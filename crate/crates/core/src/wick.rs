//! Moments of q-Gaussians by direct enumeration of pair partitions.
//!
//! For a word `i_1 ... i_n`,
//! `tau(A_{i_1} ... A_{i_n}) = sum_{pi in P_2(n)} q^{cr(pi)} prod_{(k,l) in pi} [i_k == i_l]`.
//! Only matchings whose blocks join equal letters contribute, so the
//! enumerator never proposes a block across distinct letters.
//!
//! This path shares no code with the Fock-space engine and serves as its
//! oracle.

use rayon::prelude::*;

use crate::combinatorics::{crossings_of, Matchings};
use crate::error::{check_closed_q, Result};
use crate::ncpoly::{NcPolynomial, Word};
use crate::sum::CompensatedSum;

/// Words at least this long are summed in parallel sub-streams.
const PARALLEL_MIN_LEN: usize = 12;

/// Vacuum moment of the product of generators spelled by `word`.
pub fn wick_moment(word: &Word, q: f64) -> Result<f64> {
    check_closed_q(q)?;
    Ok(word_moment(word, q))
}

fn word_moment(word: &Word, q: f64) -> f64 {
    let letters = word.letters();
    let n = letters.len();
    if n == 0 {
        return 1.0;
    }
    if n % 2 == 1 || !letter_counts_even(letters) {
        return 0.0;
    }
    let blocks = n / 2;
    let max_cr = blocks * (blocks - 1) / 2;
    let mut powers = Vec::with_capacity(max_cr + 1);
    let mut p = 1.0;
    for _ in 0..=max_cr {
        powers.push(p);
        p *= q;
    }
    let same = |a: usize, b: usize| letters[a] == letters[b];

    let fold = |mut m: Matchings<_>| -> f64 {
        let mut acc = CompensatedSum::default();
        while let Some(pairs) = m.next_matching() {
            acc.add(powers[crossings_of(pairs) as usize]);
        }
        acc.value()
    };

    if n < PARALLEL_MIN_LEN {
        return fold(Matchings::new(n, same));
    }
    // Sub-sums are combined in partner order, so the result does not
    // depend on the number of worker threads.
    let partials: Vec<f64> = (1..n)
        .into_par_iter()
        .map(|partner| fold(Matchings::with_first_partner(n, partner, same)))
        .collect();
    partials.into_iter().collect::<CompensatedSum>().value()
}

fn letter_counts_even(letters: &[u16]) -> bool {
    let mut sorted = letters.to_vec();
    sorted.sort_unstable();
    sorted.chunks(2).all(|c| c.len() == 2 && c[0] == c[1])
}

/// `tau(P)` by linearity over the terms of `P`.
pub fn moment_oracle(p: &NcPolynomial, q: f64) -> Result<f64> {
    check_closed_q(q)?;
    Ok(p.terms()
        .map(|(w, c)| c * word_moment(w, q))
        .collect::<CompensatedSum>()
        .value())
}
