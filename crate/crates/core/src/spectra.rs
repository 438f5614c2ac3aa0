//! Spectra of compressed polynomials, Hausdorff distances, and q-sweeps.
//!
//! The compression of `P(A)` to Fock levels `0..=N` is `Q_N P(A) Q_N`:
//! the full operator is applied to each basis word and the result projected
//! back. Its eigenvalues lie in the convex hull of `sigma(P(A))`, so edges
//! converge from inside; interior gaps of the true spectrum are not
//! resolved by compressions.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{certify_norm, Budget};
use crate::error::{check_open_q, Error, Result};
use crate::fock::FockSpace;
use crate::ncpoly::{Letter, NcPolynomial, Word};
use crate::numfmt::sig17;

/// Matrix of `Q_N P(A) Q_N` in an orthonormal basis of levels `0..=N`.
#[derive(Debug, Clone)]
pub struct Compression {
    /// Tensor-basis words indexing rows and columns, by level then
    /// lexicographically.
    pub words: Vec<Word>,
    pub matrix: DMatrix<f64>,
}

impl Compression {
    /// `max |H - H^T|`.
    pub fn symmetry_defect(&self) -> f64 {
        let m = &self.matrix;
        let mut defect = 0.0f64;
        for i in 0..m.nrows() {
            for j in i + 1..m.ncols() {
                defect = defect.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        defect
    }
}

/// All words of length `0..=level` over `d` letters.
pub fn truncated_basis(level: usize, d: usize) -> Vec<Word> {
    let mut out = vec![Word::empty()];
    let mut frontier = vec![Word::empty()];
    for _ in 0..level {
        let mut next = Vec::with_capacity(frontier.len() * d);
        for w in &frontier {
            for l in 1..=d {
                let mut letters = w.letters().to_vec();
                letters.push(l as Letter);
                next.push(Word::from_vec_unchecked(letters));
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Compression of `P(A)` over `d >= P.dim()` generators, without any
/// self-adjointness requirement.
pub fn compress(p: &NcPolynomial, q: f64, level: usize, d: usize) -> Result<Compression> {
    check_open_q(q)?;
    let d = d.max(p.dim());
    let space = FockSpace::new(q, d)?;
    let words = truncated_basis(level, d);
    let dim = words.len();
    let index = |w: &Word| -> usize {
        // position of w in truncated_basis order
        let offset: usize = (0..w.len()).map(|k| d.pow(k as u32)).sum();
        let rank = w
            .letters()
            .iter()
            .fold(0usize, |acc, &l| acc * d + (l as usize - 1));
        offset + rank
    };

    // Operator in the tensor basis: column j holds P(A) e_{w_j}.
    let mut op = DMatrix::<f64>::zeros(dim, dim);
    for (j, w) in words.iter().enumerate() {
        let image = space.apply_polynomial(p, &space.basis(w.clone()), Some(level))?;
        for (v, c) in image.terms() {
            op[(index(v), j)] = c;
        }
    }

    // Block-diagonal Cholesky factor of the Gram matrix.
    let mut chol = DMatrix::<f64>::zeros(dim, dim);
    let mut seen_types = std::collections::BTreeSet::new();
    for w in &words {
        let t = w.letter_type();
        if !seen_types.insert(t.clone()) {
            continue;
        }
        let block = space.gram_block(&t);
        let l = block.cholesky()?.l();
        let idx: Vec<usize> = block.words.iter().map(index).collect();
        for (a, &ia) in idx.iter().enumerate() {
            for (b, &ib) in idx.iter().enumerate().take(a + 1) {
                chol[(ia, ib)] = l[(a, b)];
            }
        }
    }

    // H = L^T M L^{-T}; with Y = L^{-1} M^T, M L^{-T} = Y^T.
    let y = chol
        .solve_lower_triangular(&op.transpose())
        .ok_or_else(|| Error::InvalidArgument("singular Gram factor".into()))?;
    let matrix = chol.transpose() * y.transpose();
    Ok(Compression { words, matrix })
}

fn require_self_adjoint(p: &NcPolynomial) -> Result<()> {
    if p.is_self_adjoint() {
        return Ok(());
    }
    let names: Vec<String> = p
        .asymmetric_terms()
        .iter()
        .map(|w| format!("{w:?}"))
        .collect();
    Err(Error::NotSelfAdjoint(names.join(", ")))
}

/// Symmetric matrix of the compression of a self-adjoint `P` to levels
/// `0..=level`.
pub fn truncated_matrix(p: &NcPolynomial, q: f64, level: usize) -> Result<DMatrix<f64>> {
    truncated_matrix_with_dim(p, q, level, p.dim())
}

pub fn truncated_matrix_with_dim(
    p: &NcPolynomial,
    q: f64,
    level: usize,
    d: usize,
) -> Result<DMatrix<f64>> {
    require_self_adjoint(p)?;
    if level < p.degree() {
        return Err(Error::LevelBelowDegree {
            level,
            degree: p.degree(),
        });
    }
    let c = compress(p, q, level, d)?;
    let m = c.matrix;
    Ok((&m + m.transpose()) * 0.5)
}

/// Largest singular value of the compression; a lower bound on `||P(A)||`
/// for any `P`.
pub fn compressed_norm(p: &NcPolynomial, q: f64, level: usize, d: usize) -> Result<f64> {
    let c = compress(p, q, level, d)?;
    Ok(c.matrix.singular_values().max())
}

/// Eigenvalues of a compression, with the data that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEstimate {
    pub q: f64,
    pub level: usize,
    /// Canonical polynomial text.
    pub poly: String,
    /// Sorted ascending, multiplicities kept.
    pub eigenvalues: Vec<f64>,
}

impl SpectrumEstimate {
    pub fn max_abs(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }
}

pub fn spectrum_estimate(p: &NcPolynomial, q: f64, level: usize) -> Result<SpectrumEstimate> {
    spectrum_estimate_with_dim(p, q, level, p.dim())
}

pub fn spectrum_estimate_with_dim(
    p: &NcPolynomial,
    q: f64,
    level: usize,
    d: usize,
) -> Result<SpectrumEstimate> {
    let h = truncated_matrix_with_dim(p, q, level, d)?;
    let mut eigenvalues: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    Ok(SpectrumEstimate {
        q,
        level,
        poly: p.to_string(),
        eigenvalues,
    })
}

fn directed(from: &[f64], sorted_to: &[f64]) -> f64 {
    from.iter()
        .map(|&x| {
            let i = sorted_to.partition_point(|&y| y < x);
            let mut best = f64::INFINITY;
            if i < sorted_to.len() {
                best = best.min((sorted_to[i] - x).abs());
            }
            if i > 0 {
                best = best.min((x - sorted_to[i - 1]).abs());
            }
            best
        })
        .fold(0.0, f64::max)
}

/// Hausdorff distance between two finite nonempty sets of reals.
pub fn hausdorff_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument(
            "Hausdorff distance needs nonempty sets".into(),
        ));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::InvalidArgument("NaN in point set".into()));
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    Ok(directed(&sa, &sb).max(directed(&sb, &sa)))
}

/// One grid point of a q-sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub q: f64,
    pub lower: f64,
    pub upper: f64,
    pub direct_upper: f64,
    pub n_used: usize,
    pub level_used: usize,
    pub exhausted_budget: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub target_gap: f64,
    pub budget: Budget,
    /// Also compute spectra at this truncation level.
    pub spectrum_level: Option<usize>,
    /// Number of generators; raised to the polynomial's own if smaller.
    pub d: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            target_gap: 0.25,
            budget: Budget::default(),
            spectrum_level: None,
            d: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    /// Present when `spectrum_level` was set; aligned with `rows`.
    pub spectra: Option<Vec<SpectrumEstimate>>,
}

/// `steps` equally spaced points from `q_from` to `q_to` inclusive.
pub fn q_grid(q_from: f64, q_to: f64, steps: usize) -> Result<Vec<f64>> {
    if steps < 2 {
        return Err(Error::InvalidArgument(format!(
            "a sweep needs at least 2 steps, got {steps}"
        )));
    }
    check_open_q(q_from)?;
    check_open_q(q_to)?;
    let last = (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| {
            let t = i as f64 / last;
            q_from * (1.0 - t) + q_to * t
        })
        .collect())
}

/// Norm certificates (and optionally spectra) across a uniform q grid.
/// Grid points run in parallel; rows come back in grid order.
pub fn sweep(
    p: &NcPolynomial,
    q_from: f64,
    q_to: f64,
    steps: usize,
    options: &SweepOptions,
) -> Result<SweepOutput> {
    let grid = q_grid(q_from, q_to, steps)?;
    let p = p.clone().with_dim(options.d);
    let results: Vec<Result<(SweepRow, Option<SpectrumEstimate>)>> = grid
        .par_iter()
        .map(|&q| {
            let cert = certify_norm(&p, q, options.target_gap, &options.budget)?;
            let row = SweepRow {
                q,
                lower: cert.lower,
                upper: cert.upper,
                direct_upper: cert.upper_direct,
                n_used: cert.n_used,
                level_used: cert.level_used(),
                exhausted_budget: cert.exhausted_budget,
            };
            let spectrum = options
                .spectrum_level
                .map(|n| spectrum_estimate_with_dim(&p, q, n, p.dim()))
                .transpose()?;
            Ok((row, spectrum))
        })
        .collect();
    let mut rows = Vec::with_capacity(steps);
    let mut spectra = options.spectrum_level.map(|_| Vec::with_capacity(steps));
    for r in results {
        let (row, s) = r?;
        rows.push(row);
        if let (Some(all), Some(s)) = (spectra.as_mut(), s) {
            all.push(s);
        }
    }
    Ok(SweepOutput { rows, spectra })
}

pub const SWEEP_CSV_HEADER: [&str; 6] = [
    "q",
    "lower",
    "upper",
    "direct_upper",
    "n_used",
    "level_used",
];

/// Writes rows as CSV with the header `q,lower,upper,direct_upper,n_used,level_used`;
/// floats carry 17 significant digits.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let io = |e: csv::Error| Error::InvalidArgument(format!("CSV output failed: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_CSV_HEADER).map_err(io)?;
    for r in rows {
        w.write_record([
            sig17(r.q),
            sig17(r.lower),
            sig17(r.upper),
            sig17(r.direct_upper),
            r.n_used.to_string(),
            r.level_used.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::InvalidArgument(format!("CSV output failed: {e}")))?;
    Ok(())
}
