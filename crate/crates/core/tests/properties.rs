use proptest::prelude::*;
use qgauss_core::fock::{self, FockSpace, LeveledVector};
use qgauss_core::spectra::{compress, compressed_norm};
use qgauss_core::{
    certify_norm, format, haagerup_constant, hausdorff_distance, moment_oracle, parse,
    spectrum_estimate, Budget, Letter, NcPolynomial, Word,
};

fn word(letters: &[Letter]) -> Word {
    Word::new(letters.to_vec()).unwrap()
}

fn arb_word(d: u16, max_len: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(1..=d, 0..=max_len).prop_map(|v| Word::new(v).unwrap())
}

/// Polynomials with small integer coefficients, so ring identities hold
/// bit-for-bit.
fn int_poly(d: u16, max_len: usize) -> impl Strategy<Value = NcPolynomial> {
    prop::collection::vec((arb_word(d, max_len), -3i32..=3), 0..5)
        .prop_map(|ts| NcPolynomial::from_terms(ts.into_iter().map(|(w, c)| (w, c as f64))))
}

fn real_poly(d: u16, max_len: usize) -> impl Strategy<Value = NcPolynomial> {
    prop::collection::vec((arb_word(d, max_len), -2.0f64..2.0), 1..5)
        .prop_map(NcPolynomial::from_terms)
}

fn self_adjoint(p: &NcPolynomial) -> NcPolynomial {
    (p + &p.adjoint()).scale(0.5)
}

fn terms(d: u16, max_len: usize) -> impl Strategy<Value = Vec<(Word, f64)>> {
    prop::collection::vec((arb_word(d, max_len), -1.0f64..1.0), 0..6)
}

fn permutations(m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(m - 1) {
        for pos in 0..=p.len() {
            let mut np = p.clone();
            np.insert(pos, m - 1);
            out.push(np);
        }
    }
    out
}

/// `sum over pi in S_m of q^inv(pi) * prod_k [w_k = v_pi(k)]`.
fn q_inner_by_permutations(w: &[Letter], v: &[Letter], q: f64) -> f64 {
    if w.len() != v.len() {
        return 0.0;
    }
    let m = w.len();
    permutations(m)
        .into_iter()
        .filter(|pi| (0..m).all(|k| w[k] == v[pi[k]]))
        .map(|pi| {
            let inv = (0..m)
                .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
                .filter(|&(i, j)| pi[i] > pi[j])
                .count();
            q.powi(inv as i32)
        })
        .sum()
}

fn all_words(len: usize, d: u16) -> Vec<Vec<Letter>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|w| {
                (1..=d).map(move |l| {
                    let mut x = w.clone();
                    x.push(l);
                    x
                })
            })
            .collect();
    }
    out
}

#[test]
fn q_inner_matches_permutation_sum_exhaustively() {
    for q in [-0.9, -0.3, 0.0, 0.45, 0.8] {
        let space = FockSpace::new(q, 2).unwrap();
        for len in 0..=6 {
            let words = all_words(len, 2);
            for w in &words {
                for v in &words {
                    let expected = q_inner_by_permutations(w, v, q);
                    let got = space.q_inner(&word(w), &word(v));
                    assert!(
                        (got - expected).abs() <= 1e-12 * expected.abs().max(1.0),
                        "q={q} w={w:?} v={v:?}: {got} vs {expected}"
                    );
                }
            }
        }
    }
}

#[test]
fn q_inner_three_letters_matches_permutation_sum() {
    let space = FockSpace::new(-0.6, 3).unwrap();
    for len in 0..=4 {
        let words = all_words(len, 3);
        for w in &words {
            for v in &words {
                let expected = q_inner_by_permutations(w, v, -0.6);
                assert!((space.q_inner(&word(w), &word(v)) - expected).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn sixth_moment_counts_crossings() {
    // tau(X1^6) = 5 + 6q + 3q^2 + q^3: sample at four points and recover
    // the cubic's coefficients.
    let qs = [-0.5, 0.0, 0.25, 0.75];
    let x6 = parse("X1^6").unwrap();
    let ys: Vec<f64> = qs.iter().map(|&q| moment_oracle(&x6, q).unwrap()).collect();
    let vandermonde = nalgebra::Matrix4::from_fn(|i, j| qs[i].powi(j as i32));
    let coeffs = vandermonde
        .lu()
        .solve(&nalgebra::Vector4::from_column_slice(&ys))
        .unwrap();
    for (c, expected) in coeffs.iter().zip([5.0, 6.0, 3.0, 1.0]) {
        assert!((c - expected).abs() < 1e-9, "{coeffs}");
    }
}

#[test]
fn top_eigenvalue_of_single_variable_truncations_increases() {
    let x1 = parse("X1").unwrap();
    for q in [-0.5, 0.0, 0.5] {
        let mut prev = f64::NEG_INFINITY;
        for level in 1..=60 {
            let top = *spectrum_estimate(&x1, q, level)
                .unwrap()
                .eigenvalues
                .last()
                .unwrap();
            assert!(top >= prev - 1e-10, "q={q} level={level}: {top} < {prev}");
            assert!(top <= 2.0 / (1.0 - q).sqrt() + 1e-10);
            prev = top;
        }
    }
}

#[test]
fn haagerup_constant_matches_long_product() {
    for i in 1..=18 {
        let q = -0.95 + 0.1 * i as f64;
        let c = haagerup_constant(q, 1e-13).unwrap();
        let x = q.abs();
        let oracle: f64 = 1.0 / (1..=5000).map(|m| 1.0 - x.powi(m)).product::<f64>();
        assert!(
            (c.value - oracle).abs() <= 1e-11 * oracle,
            "q={q}: {} vs {oracle}",
            c.value
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn ring_axioms_hold_exactly(a in int_poly(3, 3), b in int_poly(3, 3), c in int_poly(3, 3)) {
        prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert_eq!(&(&a + &b) * &c, &(&a * &c) + &(&b * &c));
        prop_assert_eq!(&a * &NcPolynomial::one(), a.clone());
        prop_assert!((&a - &a).is_zero());
    }

    #[test]
    fn adjoint_is_an_involutive_anti_homomorphism(a in int_poly(3, 4), b in int_poly(3, 4)) {
        prop_assert_eq!((&a * &b).adjoint(), &b.adjoint() * &a.adjoint());
        prop_assert_eq!((&a + &b).adjoint(), &a.adjoint() + &b.adjoint());
        prop_assert_eq!(a.adjoint().adjoint(), a.clone());
    }

    #[test]
    fn format_then_parse_is_identity(p in real_poly(4, 4)) {
        let text = format(&p);
        let back = parse(&text).unwrap();
        prop_assert_eq!(&back, &p);
        prop_assert_eq!(format(&back), text);
    }

    #[test]
    fn parse_then_format_is_idempotent(p in int_poly(3, 3), k in 1u32..4) {
        let messy = format!("({}) * (X1 + 1)^{k} - adj({})", format(&p), format(&p));
        let once = format(&parse(&messy).unwrap());
        let twice = format(&parse(&once).unwrap());
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn star_squares_have_nonnegative_moments(p in real_poly(2, 3), q in -1.0f64..=1.0) {
        let pp = &p.adjoint() * &p;
        prop_assert!(moment_oracle(&pp, q).unwrap() >= -1e-10);
    }

    #[test]
    fn fock_and_wick_moments_agree(p in real_poly(3, 6), q in -0.99f64..0.99) {
        let w = moment_oracle(&p, q).unwrap();
        let f = fock::moment_fock(&p, q).unwrap();
        prop_assert!((w - f).abs() <= 1e-10 * (1.0 + w.abs()), "{} vs {}", w, f);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn creation_is_adjoint_to_annihilation(
        q in -0.95f64..0.95,
        u in terms(3, 4),
        v in terms(3, 5),
        i in 1usize..=3,
    ) {
        let u = LeveledVector::from_terms(u, q, 3);
        let v = LeveledVector::from_terms(v, q, 3);
        let space = FockSpace::new(q, 3).unwrap();
        let lhs = space.inner(&space.create(i, &u, None).unwrap(), &v);
        let rhs = space.inner(&u, &space.annihilate(i, &v).unwrap());
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn gram_blocks_are_positive_definite(
        q in -0.95f64..=0.95,
        counts in prop::collection::vec(0usize..=3, 1..=3),
    ) {
        let mut letter_type: Vec<Letter> = Vec::new();
        for (idx, &c) in counts.iter().enumerate() {
            letter_type.extend(std::iter::repeat_n((idx + 1) as Letter, c));
        }
        letter_type.truncate(6);
        let block = fock::gram_block(&letter_type, q).unwrap();
        prop_assert!(block.cholesky().is_ok(), "type {:?} at q = {}", letter_type, q);
    }

    #[test]
    fn levels_are_orthogonal(q in -0.95f64..0.95, u in arb_word(2, 3), v in arb_word(2, 3),
                             a in -2.0f64..2.0, b in -2.0f64..2.0) {
        prop_assume!(u.len() != v.len());
        let space = FockSpace::new(q, 2).unwrap();
        let x = LeveledVector::from_terms([(u.clone(), a)], q, 2);
        let y = LeveledVector::from_terms([(v.clone(), b)], q, 2);
        let mut sum = x.clone();
        sum.add_scaled(&y, 1.0);
        let lhs = space.inner(&sum, &sum);
        let rhs = space.inner(&x, &x) + space.inner(&y, &y);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn pythagoras_across_levels(p in real_poly(2, 4), q in -0.95f64..0.95) {
        let space = FockSpace::new(q, 2).unwrap();
        let xi = space.vacuum_expand(&p).unwrap();
        let total = space.inner(&xi, &xi);
        let by_level: f64 = space
            .level_l2_norms(&p)
            .unwrap()
            .iter()
            .map(|(_, n)| n * n)
            .sum();
        prop_assert!((total - by_level).abs() <= 1e-12 * (1.0 + total));
    }

    #[test]
    fn hausdorff_is_a_metric(
        a in prop::collection::vec(-10.0f64..10.0, 1..8),
        b in prop::collection::vec(-10.0f64..10.0, 1..8),
        c in prop::collection::vec(-10.0f64..10.0, 1..8),
    ) {
        let d = |x: &[f64], y: &[f64]| hausdorff_distance(x, y).unwrap();
        prop_assert_eq!(d(&a, &a), 0.0);
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert!(d(&a, &b) >= 0.0);
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
        let mut shuffled = a.clone();
        shuffled.reverse();
        shuffled.extend_from_slice(&a);
        prop_assert_eq!(d(&a, &shuffled), 0.0);
    }

    #[test]
    fn hausdorff_of_translate(a in prop::collection::vec(-10.0f64..10.0, 1..8), t in -3.0f64..3.0) {
        let b: Vec<f64> = a.iter().map(|x| x + t).collect();
        let h = hausdorff_distance(&a, &b).unwrap();
        prop_assert!(h <= t.abs() + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn compressions_of_self_adjoint_polys_are_symmetric(
        p in real_poly(2, 4),
        q in -0.9f64..0.9,
        extra in 0usize..=4,
    ) {
        let h = self_adjoint(&p).with_dim(2);
        let level = (h.degree() + extra).clamp(1, 8);
        let c = compress(&h, q, level, 2).unwrap();
        prop_assert!(c.symmetry_defect() <= 1e-10, "defect {}", c.symmetry_defect());
    }

    #[test]
    fn compressed_norm_grows_with_level(p in real_poly(2, 2), q in -0.9f64..0.9) {
        let start = p.degree().max(1);
        let mut prev = 0.0;
        for level in start..start + 3 {
            let n = compressed_norm(&p, q, level, 2).unwrap();
            prop_assert!(n >= prev - 1e-10, "level {}: {} < {}", level, n, prev);
            prev = n;
        }
    }

    #[test]
    fn certified_bracket_contains_compression_spectrum(p in real_poly(2, 2), q in -0.8f64..0.8) {
        let h = self_adjoint(&p);
        prop_assume!(!h.is_zero());
        let cert = certify_norm(&h, q, 0.5, &Budget { max_level: 16, ..Budget::default() }).unwrap();
        let estimate = spectrum_estimate(&h, q, h.degree() + 4).unwrap();
        prop_assert!(cert.lower <= cert.upper);
        prop_assert!(estimate.max_abs() <= cert.upper * (1.0 + 1e-9) + 1e-12,
            "eigenvalue {} above certified {}", estimate.max_abs(), cert.upper);
    }

    #[test]
    fn certificate_steps_tighten(p in real_poly(2, 2), q in -0.8f64..0.8) {
        prop_assume!(!p.is_zero());
        let cert = certify_norm(&p, q, 1e-3, &Budget { max_level: 24, ..Budget::default() }).unwrap();
        for pair in cert.steps.windows(2) {
            prop_assert!(pair[1].lower >= pair[0].lower - 1e-9 * pair[0].lower.max(1.0));
        }
        prop_assert!(cert.lower <= cert.upper + 1e-12);
        prop_assert!(cert.upper <= cert.upper_direct);
    }
}
