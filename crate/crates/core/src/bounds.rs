//! Certified bounds on `||P(A)||` for polynomials in q-Gaussians.
//!
//! Two facts drive everything here:
//!
//! - for a homogeneous Wick component of degree `k`,
//!   `||sum_{|w|=k} a_w e_w^(q)|| <= (k+1) C_|q|^{3/2} ||sum_{|w|=k} a_w e_w^(q)||_2`
//!   with `1 / C_|q| = prod_{m>=1} (1 - |q|^m)`;
//! - `||P||_{2n} = tau[(P*P)^n]^{1/(2n)}` increases to `||P||` as `n` grows.
//!
//! Applying the first bound to `(P*P)^n`, which has degree `2mn`, gives
//! `||P||^{2n} <= (2mn+1)^{3/2} C^{3/2} ||(P*P)^n||_2`, whose `2n`-th root
//! tends to `||P||`. Together with the `L^{2n}` lower bounds this squeezes
//! the norm from both sides.

use std::fmt;

use thiserror::Error;

use crate::error::{check_open_q, Error, Result};
use crate::fock::{max_block_dim, FockSpace, LeveledVector};
use crate::ncpoly::{NcPolynomial, Word};

/// Relative tolerance used when a caller does not pick one.
pub const DEFAULT_REL_TOL: f64 = 1e-13;

/// Hard cap on the escalation schedule for polynomials whose Fock level
/// never grows (constants).
const MAX_N: usize = 1 << 20;

/// `C_|q| = 1 / prod_{m>=1} (1 - |q|^m)`, truncated with a certified tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HaagerupConstant {
    pub q_abs: f64,
    pub value: f64,
    /// Number of factors multiplied.
    pub truncation_terms: usize,
    /// Upper bound on the neglected part of `log C`.
    pub tail_bound: f64,
}

impl HaagerupConstant {
    /// `C^{3/2}`, the factor in the per-level inequality.
    pub fn three_halves(&self) -> f64 {
        self.value.powf(1.5)
    }
}

/// Evaluates the Haagerup constant so that the neglected tail of
/// `log C = -sum log(1 - |q|^m)` is at most `rel_tol`.
pub fn haagerup_constant(q: f64, rel_tol: f64) -> Result<HaagerupConstant> {
    check_open_q(q)?;
    if rel_tol.is_nan() || rel_tol <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "rel_tol must be positive, got {rel_tol}"
        )));
    }
    let x = q.abs();
    // sum_{m>M} -log(1 - x^m) <= x^{M+1} / ((1 - x)(1 - x^{M+1}))
    let tail = |m: usize| {
        let xm = x.powi(m as i32 + 1);
        xm / ((1.0 - x) * (1.0 - xm))
    };
    let mut terms = 0usize;
    let mut log_c = 0.0;
    let mut xm = 1.0;
    while tail(terms) > rel_tol {
        terms += 1;
        xm *= x;
        log_c -= (-xm).ln_1p();
    }
    Ok(HaagerupConstant {
        q_abs: x,
        value: log_c.exp(),
        truncation_terms: terms,
        tail_bound: tail(terms),
    })
}

fn default_constant(q: f64) -> Result<HaagerupConstant> {
    haagerup_constant(q, DEFAULT_REL_TOL)
}

/// `sum_k (k+1) C^{3/2} ||P_k||_2` over the Wick levels `P_k` of `P`.
pub fn direct_upper(p: &NcPolynomial, q: f64) -> Result<f64> {
    let c = default_constant(q)?.three_halves();
    let levels = FockSpace::new(q, p.dim())?.level_l2_norms(p)?;
    Ok(levels
        .iter()
        .map(|&(k, norm)| (k + 1) as f64 * c * norm)
        .sum())
}

/// The coarser `(m+1)^{3/2} C^{3/2} ||P||_2`, `m = deg P`.
pub fn direct_upper_aggregated(p: &NcPolynomial, q: f64) -> Result<f64> {
    let c = default_constant(q)?.three_halves();
    let l2 = FockSpace::new(q, p.dim())?.l2_norm(p)?;
    Ok(((p.degree() + 1) as f64).powf(1.5) * c * l2)
}

/// `[C (2 deg(P) n + 1)^D]^{1/(2n)} * l2_of_power^{1/(2n)}`, the upper bound
/// implied by a rapid-decay inequality `||X|| <= C (deg X + 1)^D ||X||_2`
/// applied to `X = (P*P)^n` with `l2_of_power = ||(P*P)^n||_2`.
pub fn rd_upper(c: f64, d: f64, p: &NcPolynomial, n: usize, l2_of_power: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("rd_upper requires n >= 1".into()));
    }
    if c < 0.0 || d < 0.0 || l2_of_power < 0.0 {
        return Err(Error::InvalidArgument(
            "rd_upper requires C, D and the L2 norm to be nonnegative".into(),
        ));
    }
    Ok(rd_upper_ln(c, d, p.degree(), n, l2_of_power.ln()))
}

fn rd_upper_ln(c: f64, d: f64, degree: usize, n: usize, ln_l2: f64) -> f64 {
    let prefactor = c.ln() + d * ((2 * degree * n + 1) as f64).ln();
    ((prefactor + ln_l2) / (2 * n) as f64).exp()
}

/// Resource limits for the powered bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    /// Highest Fock level a computation may populate.
    pub max_level: usize,
    /// Largest letter-type block at that level.
    pub max_block_dim: u128,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_level: 256,
            max_block_dim: 4096,
        }
    }
}

impl Budget {
    /// Sizing of a computation that reaches Fock level `level` over `d`
    /// generators, or a report if it does not fit.
    pub fn check(&self, n: usize, level: usize, d: usize) -> std::result::Result<(), BudgetReport> {
        let block = max_block_dim(level, d);
        if level > self.max_level || block > self.max_block_dim {
            return Err(BudgetReport {
                n,
                level,
                block_dim: block,
                vector_len: level_dim(level, d),
                budget: *self,
            });
        }
        Ok(())
    }
}

/// `d^level`, saturating.
fn level_dim(level: usize, d: usize) -> u128 {
    (d as u128).checked_pow(level as u32).unwrap_or(u128::MAX)
}

/// Why a powered bound was refused.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct BudgetReport {
    pub n: usize,
    /// Fock level the computation would reach.
    pub level: usize,
    /// Largest Gram block at that level.
    pub block_dim: u128,
    /// Number of basis words at that level.
    pub vector_len: u128,
    pub budget: Budget,
}

impl fmt::Display for BudgetReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "n = {} needs Fock level {} ({} words, largest block {}); budget allows level <= {} and block <= {}",
            self.n,
            self.level,
            self.vector_len,
            self.block_dim,
            self.budget.max_level,
            self.budget.max_block_dim
        )
    }
}

/// Lower and upper bounds from the `n`-th power of `P*P`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoweredBounds {
    pub n: usize,
    /// `tau[(P*P)^n]^{1/(2n)}`.
    pub lower: f64,
    /// `[(2mn+1)^{3/2} C^{3/2}]^{1/(2n)} tau[(P*P)^{2n}]^{1/(4n)}`.
    pub upper: f64,
    /// `ln tau[(P*P)^n]`.
    pub ln_moment: f64,
    /// `ln ||(P*P)^n||_2 = ln tau[(P*P)^{2n}] / 2`.
    pub ln_l2_of_power: f64,
    /// Fock level `2mn` reached by `(P*P)^n e_0`.
    pub level: usize,
}

impl PoweredBounds {
    pub fn l2_of_power(&self) -> f64 {
        self.ln_l2_of_power.exp()
    }
}

/// Repeatedly applies `op` to `v`, renormalizing after each step; returns the
/// vector and the log of the accumulated scale. With `prune = Some(s)`,
/// step `j` of `steps` keeps only levels from which `s * (steps - 1 - j)`
/// further levels of descent can still reach the vacuum.
fn apply_repeated(
    space: &FockSpace,
    op: &NcPolynomial,
    mut v: LeveledVector,
    steps: usize,
    prune: Option<usize>,
) -> Result<(LeveledVector, f64)> {
    let mut ln_scale = 0.0;
    for j in 0..steps {
        let keep = prune.map(|s| s * (steps - 1 - j));
        v = space.apply_polynomial(op, &v, keep)?;
        let s = v.max_abs();
        if s == 0.0 {
            return Ok((v, f64::NEG_INFINITY));
        }
        v.scale(1.0 / s);
        ln_scale += s.ln();
    }
    Ok((v, ln_scale))
}

/// `ln tau[(P*P)^n]` and `ln tau[(P*P)^{2n}]`, computed on the Fock space
/// without expanding the powers symbolically.
fn power_moments(space: &FockSpace, p: &NcPolynomial, n: usize) -> Result<(f64, f64)> {
    let star = p.adjoint().multiply(p);
    let step_drop = star.degree();
    let (eta, ln_eta) = apply_repeated(space, &star, space.vacuum(), n, None)?;
    let ln_tau_n = ln_eta + eta.coeff(&Word::empty()).max(0.0).ln();
    let (zeta, ln_zeta) = apply_repeated(space, &star, eta, n, Some(step_drop))?;
    let ln_tau_2n = ln_eta + ln_zeta + zeta.coeff(&Word::empty()).max(0.0).ln();
    Ok((ln_tau_n, ln_tau_2n))
}

/// Powered bounds at a fixed `n`, using the default Haagerup tolerance.
pub fn powered_bounds(
    p: &NcPolynomial,
    q: f64,
    n: usize,
    budget: &Budget,
) -> Result<PoweredBounds> {
    let c = default_constant(q)?;
    powered_bounds_with(p, q, n, budget, &c)
}

fn powered_bounds_with(
    p: &NcPolynomial,
    q: f64,
    n: usize,
    budget: &Budget,
    c: &HaagerupConstant,
) -> Result<PoweredBounds> {
    check_open_q(q)?;
    if n == 0 {
        return Err(Error::InvalidArgument(
            "powered bounds require n >= 1".into(),
        ));
    }
    if p.is_zero() {
        return Err(Error::InvalidArgument(
            "powered bounds are undefined for the zero polynomial".into(),
        ));
    }
    let m = p.degree();
    let level = 2 * m * n;
    budget.check(n, level, p.dim())?;
    let space = FockSpace::new(q, p.dim())?;
    let (ln_tau_n, ln_tau_2n) = power_moments(&space, p, n)?;
    let ln_l2 = 0.5 * ln_tau_2n;
    Ok(PoweredBounds {
        n,
        lower: (ln_tau_n / (2 * n) as f64).exp(),
        upper: rd_upper_ln(c.three_halves(), 1.5, m, n, ln_l2),
        ln_moment: ln_tau_n,
        ln_l2_of_power: ln_l2,
        level,
    })
}

/// A certified bracket `lower <= ||P(A)|| <= upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormCertificate {
    pub lower: f64,
    pub upper: f64,
    pub upper_direct: f64,
    /// Largest `n` whose powered bounds were computed (0 if none).
    pub n_used: usize,
    pub degree_m: usize,
    pub q: f64,
    pub haagerup: f64,
    /// The escalation stopped on the budget rather than on the gap.
    pub exhausted_budget: bool,
    /// Powered bounds in escalation order.
    pub steps: Vec<PoweredBounds>,
    /// Set when the budget refused a step.
    pub refusal: Option<BudgetReport>,
}

impl NormCertificate {
    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }

    /// Fock level reached by the largest computed power.
    pub fn level_used(&self) -> usize {
        2 * self.degree_m * self.n_used
    }

    fn trivial(q: f64, haagerup: f64) -> Self {
        NormCertificate {
            lower: 0.0,
            upper: 0.0,
            upper_direct: 0.0,
            n_used: 0,
            degree_m: 0,
            q,
            haagerup,
            exhausted_budget: false,
            steps: Vec::new(),
            refusal: None,
        }
    }

    fn start(p: &NcPolynomial, q: f64, c: &HaagerupConstant) -> Result<Self> {
        let upper_direct = direct_upper(p, q)?;
        // ||P||_2 <= ||P||
        let l2 = FockSpace::new(q, p.dim())?.l2_norm(p)?;
        Ok(NormCertificate {
            lower: l2,
            upper: upper_direct,
            upper_direct,
            n_used: 0,
            degree_m: p.degree(),
            q,
            haagerup: c.value,
            exhausted_budget: false,
            steps: Vec::new(),
            refusal: None,
        })
    }

    fn absorb(&mut self, b: PoweredBounds) {
        self.lower = self.lower.max(b.lower);
        self.upper = self.upper.min(b.upper);
        self.n_used = b.n;
        self.steps.push(b);
    }
}

/// Squeezes `||P(A)||` by escalating `n = 1, 2, 4, ...` until
/// `upper - lower <= target_gap` or the budget refuses the next step.
pub fn certify_norm(
    p: &NcPolynomial,
    q: f64,
    target_gap: f64,
    budget: &Budget,
) -> Result<NormCertificate> {
    check_open_q(q)?;
    if target_gap.is_nan() || target_gap <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "target gap must be positive, got {target_gap}"
        )));
    }
    let c = default_constant(q)?;
    if p.is_zero() {
        return Ok(NormCertificate::trivial(q, c.value));
    }
    let mut cert = NormCertificate::start(p, q, &c)?;
    let mut n = 1;
    while cert.gap() > target_gap {
        if n > MAX_N {
            cert.exhausted_budget = true;
            break;
        }
        match powered_bounds_with(p, q, n, budget, &c) {
            Ok(b) => cert.absorb(b),
            Err(Error::Budget(report)) => {
                cert.exhausted_budget = true;
                cert.refusal = Some(report);
                break;
            }
            Err(e) => return Err(e),
        }
        n *= 2;
    }
    Ok(cert)
}

/// Certificate from a single fixed `n`, without escalation.
pub fn certify_norm_fixed(
    p: &NcPolynomial,
    q: f64,
    n: usize,
    budget: &Budget,
) -> Result<NormCertificate> {
    check_open_q(q)?;
    let c = default_constant(q)?;
    if p.is_zero() {
        return Ok(NormCertificate::trivial(q, c.value));
    }
    let mut cert = NormCertificate::start(p, q, &c)?;
    match powered_bounds_with(p, q, n, budget, &c) {
        Ok(b) => cert.absorb(b),
        Err(Error::Budget(report)) => {
            cert.exhausted_budget = true;
            cert.refusal = Some(report);
        }
        Err(e) => return Err(e),
    }
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::moment_fock;
    use crate::ncpoly::parse;

    fn x1() -> NcPolynomial {
        parse("X1").unwrap()
    }

    /// Direct product over m = 1..=terms.
    fn product_oracle_n(q: f64, terms: i32) -> f64 {
        let x = q.abs();
        1.0 / (1..=terms).map(|m| 1.0 - x.powi(m)).product::<f64>()
    }

    fn product_oracle(q: f64) -> f64 {
        product_oracle_n(q, 200)
    }

    #[test]
    fn haagerup_examples() {
        let c0 = haagerup_constant(0.0, 1e-12).unwrap();
        assert_eq!(c0.value, 1.0);
        assert_eq!(c0.truncation_terms, 0);
        let c = haagerup_constant(0.5, 1e-10).unwrap();
        assert!((c.value - 3.462746619455).abs() < 1e-6);
        assert!((c.value / product_oracle(0.5) - 1.0).abs() < 1e-9);
        assert_eq!(haagerup_constant(-0.5, 1e-10).unwrap().value, c.value);
        assert!(haagerup_constant(1.0, 1e-10).is_err());
        assert!(haagerup_constant(0.5, 0.0).is_err());
    }

    #[test]
    fn haagerup_tail_respects_tolerance() {
        for tol in [1e-3, 1e-8, 1e-14] {
            let c = haagerup_constant(0.9, tol).unwrap();
            assert!(c.tail_bound <= tol);
            let rel = (c.value / product_oracle_n(0.9, 2000) - 1.0).abs();
            assert!(rel <= 2.0 * tol + 1e-12, "tol {tol}: rel {rel}");
        }
    }

    #[test]
    fn direct_upper_examples() {
        assert!((direct_upper(&x1(), 0.0).unwrap() - 2.0).abs() < 1e-14);
        let c = haagerup_constant(0.5, DEFAULT_REL_TOL)
            .unwrap()
            .three_halves();
        let du = direct_upper(&x1(), 0.5).unwrap();
        assert!((du - 2.0 * c).abs() < 1e-12);
        assert!((du - 12.886).abs() < 2e-3);
        let one = direct_upper(&NcPolynomial::one(), 0.5).unwrap();
        assert!((one - c).abs() < 1e-12);
    }

    #[test]
    fn aggregated_variant_is_looser() {
        for q in [-0.6, 0.0, 0.4] {
            let p = parse("X1*X2 + X2*X1 + X1^3 - 2").unwrap();
            assert!(
                direct_upper(&p, q).unwrap() <= direct_upper_aggregated(&p, q).unwrap() + 1e-12
            );
        }
    }

    #[test]
    fn powered_examples() {
        let b = Budget::default();
        let pb = powered_bounds(&x1(), 0.0, 1, &b).unwrap();
        assert!((pb.lower - 1.0).abs() < 1e-14);
        let expected = 3f64.powf(0.75) * 2f64.powf(0.25);
        assert!((pb.upper - expected).abs() < 1e-12);
        assert!((pb.upper - 2.711).abs() < 1e-3);
        let pb = powered_bounds(&x1(), 0.0, 2, &b).unwrap();
        assert!((pb.lower - 2f64.powf(0.25)).abs() < 1e-14);
        for q in [-0.3, 0.7] {
            let pb = powered_bounds(&NcPolynomial::one(), q, 1, &b).unwrap();
            assert!((pb.lower - 1.0).abs() < 1e-15);
        }
        assert!(powered_bounds(&NcPolynomial::zero(), 0.0, 1, &b).is_err());
        assert!(powered_bounds(&x1(), 0.0, 0, &b).is_err());
    }

    #[test]
    fn power_moments_match_symbolic_powers() {
        let b = Budget::default();
        for (poly, q) in [
            ("X1 + 0.5*X2", 0.4),
            ("X1*X2 - X2^2", -0.6),
            ("X1^2 + 1", 0.0),
        ] {
            let p = parse(poly).unwrap();
            for n in 1..=3 {
                let pb = powered_bounds(&p, q, n, &b).unwrap();
                let tau_n = moment_fock(&p.star_power(n).unwrap(), q).unwrap();
                let tau_2n = moment_fock(&p.star_power(2 * n).unwrap(), q).unwrap();
                assert!((pb.ln_moment - tau_n.ln()).abs() < 1e-11, "{poly} n={n}");
                assert!(
                    (2.0 * pb.ln_l2_of_power - tau_2n.ln()).abs() < 1e-11,
                    "{poly} n={n}"
                );
            }
        }
    }

    #[test]
    fn rd_upper_examples() {
        let p = x1();
        let u = rd_upper(1.0, 1.5, &p, 1, 2f64.sqrt()).unwrap();
        assert!((u - 2.711).abs() < 1e-3);
        let u = rd_upper(1.0, 0.0, &p, 3, 64.0).unwrap();
        assert!((u - 64f64.powf(1.0 / 6.0)).abs() < 1e-14);
    }

    #[test]
    fn rd_upper_reproduces_powered_upper() {
        let b = Budget::default();
        for (poly, q) in [("X1", 0.5), ("X1*X2 + X2*X1", -0.3), ("X1^2 - X2", 0.1)] {
            let p = parse(poly).unwrap();
            let c = haagerup_constant(q, DEFAULT_REL_TOL)
                .unwrap()
                .three_halves();
            for n in [1, 2, 3] {
                let pb = powered_bounds(&p, q, n, &b).unwrap();
                let u = rd_upper(c, 1.5, &p, n, pb.l2_of_power()).unwrap();
                assert!((u - pb.upper).abs() <= 1e-13 * pb.upper, "{poly} n={n}");
            }
        }
    }

    #[test]
    fn budget_refusal_reports_sizing() {
        let b = Budget {
            max_level: 8,
            max_block_dim: 4096,
        };
        let err = powered_bounds(&x1(), 0.0, 5, &b).unwrap_err();
        match err {
            Error::Budget(r) => {
                assert_eq!(r.level, 10);
                assert!(r.to_string().contains("level 10"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let tight = Budget {
            max_level: 100,
            max_block_dim: 5,
        };
        assert!(matches!(
            powered_bounds(&parse("X1+X2").unwrap(), 0.0, 2, &tight),
            Err(Error::Budget(_))
        ));
    }

    #[test]
    fn certify_examples() {
        let b = Budget::default();
        let cert = certify_norm(&x1(), 0.0, 0.8, &b).unwrap();
        assert!(cert.lower <= 2.0 && 2.0 <= cert.upper);
        assert!(cert.gap() <= 0.8);
        assert!(cert.n_used <= 16);
        assert!(!cert.exhausted_budget);

        let cert = certify_norm(&x1(), 0.5, 0.8, &b).unwrap();
        let edge = 2.0 / 0.5f64.sqrt();
        assert!(cert.lower <= edge && edge <= cert.upper);

        let cert = certify_norm(&NcPolynomial::zero(), 0.3, 0.1, &b).unwrap();
        assert_eq!((cert.lower, cert.upper), (0.0, 0.0));
    }

    #[test]
    fn certify_flags_exhausted_budget() {
        let b = Budget {
            max_level: 4,
            max_block_dim: 4096,
        };
        let cert = certify_norm(&x1(), 0.0, 1e-3, &b).unwrap();
        assert!(cert.exhausted_budget);
        assert_eq!(cert.n_used, 2);
        assert_eq!(cert.refusal.as_ref().unwrap().n, 4);
        assert!(cert.lower <= 2.0 && 2.0 <= cert.upper);
    }

    #[test]
    fn certificate_steps_are_monotone() {
        let b = Budget::default();
        let p = parse("X1*X2 + X2*X1 + 0.5*X1").unwrap();
        let cert = certify_norm(&p, 0.2, 1e-9, &b).unwrap();
        assert!(cert.steps.len() >= 2);
        for pair in cert.steps.windows(2) {
            assert!(pair[1].lower >= pair[0].lower - 1e-12);
            assert!(pair[0].lower <= pair[0].upper);
        }
        assert!(cert.lower <= cert.upper + 1e-9);
        assert!(cert.lower <= cert.upper_direct + 1e-9);
    }

    #[test]
    fn constant_polynomial_converges_without_budget() {
        let cert =
            certify_norm(&NcPolynomial::constant(-3.0), 0.6, 1e-3, &Budget::default()).unwrap();
        assert!(cert.lower <= 3.0 + 1e-12 && 3.0 <= cert.upper + 1e-12);
        assert!(cert.gap() <= 1e-3);
    }
}
