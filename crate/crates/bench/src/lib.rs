//! Shared inputs for the benchmarks in `benches/`.

use qgauss_core::{parse, NcPolynomial};

/// Named polynomials of increasing cost.
pub fn polynomials() -> Vec<(&'static str, NcPolynomial)> {
    [
        ("x1", "X1"),
        ("x1+x2", "X1 + X2"),
        ("anticommutator", "X1*X2 + X2*X1"),
        ("mixed-deg4", "X1^4 + X1*X2*X1*X2 - 0.5*X2^2 + 1"),
    ]
    .into_iter()
    .map(|(name, text)| (name, parse(text).expect("fixture parses")))
    .collect()
}

/// `X1 X2 X1 X2 ...` of length `n`.
pub fn alternating_word(n: usize) -> NcPolynomial {
    let text: Vec<&str> = (0..n)
        .map(|i| if i % 2 == 0 { "X1" } else { "X2" })
        .collect();
    parse(&text.join("*")).expect("word parses")
}
