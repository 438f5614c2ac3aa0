//! Numerics for q-Gaussian operators on the q-deformed Fock space.
//!
//! The crate computes joint moments (by the pair-partition formula and by
//! direct action on the Fock space), certified two-sided bounds on operator
//! norms of polynomials in q-Gaussians, and spectra of finite compressions.
//!
//! Modules, bottom-up:
//! - [`ncpoly`]: noncommutative polynomials, parser and formatter.
//! - [`combinatorics`]: inversions, pair partitions, crossing numbers.
//! - [`wick`]: moments by enumeration of pair partitions.
//! - [`fock`]: the truncated q-Fock-space engine.
//! - [`bounds`]: Haagerup constant and norm certificates.
//! - [`spectra`]: compressed matrices, eigenvalues, Hausdorff distances, q-sweeps.

pub mod bounds;
pub mod combinatorics;
pub mod error;
pub mod fock;
pub mod ncpoly;
pub mod numfmt;
pub mod spectra;
mod sum;
pub mod wick;

pub use bounds::{
    certify_norm, direct_upper, direct_upper_aggregated, haagerup_constant, powered_bounds,
    rd_upper, Budget, BudgetReport, HaagerupConstant, NormCertificate, PoweredBounds,
};
pub use combinatorics::{crossings, inversions, pair_partitions, PairPartition};
pub use error::{Error, Result};
pub use fock::{FockSpace, GramBlock, LeveledVector};
pub use ncpoly::{format, parse, Letter, NcPolynomial, ParseError, Word};
pub use spectra::{
    hausdorff_distance, spectrum_estimate, sweep, truncated_matrix, SpectrumEstimate, SweepOptions,
    SweepRow,
};
pub use wick::{moment_oracle, wick_moment};
