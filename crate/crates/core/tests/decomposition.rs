use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use subseq::counting::{count_subsequences, CountMode};
use subseq::decomposition::{coeff_c_general, decompose, identity_checks, v_level};
use subseq::moments::{residual_bound_exact, sigma1_sq_exact};
use subseq::{Alphabet, ExactDist, Pattern, SourceDist, Symbol};

fn pattern(s: &str, k: usize) -> Pattern {
    let d = SourceDist::uniform(Alphabet::latin(k).unwrap());
    Pattern::parse(s, &d).unwrap()
}

fn text_from_index(mut idx: usize, n: usize) -> Vec<Symbol> {
    (0..n)
        .map(|_| {
            let b = (idx & 1) as Symbol;
            idx >>= 1;
            b
        })
        .collect()
}

fn weight(text: &[Symbol], dist: &ExactDist) -> BigRational {
    text.iter().map(|&x| dist.prob(x).clone()).product()
}

/// Counts `alpha` in `C([n], m)` with `alpha_{gamma_k} = beta_k` by walking
/// every index set.
fn count_alphas(beta: &[usize], gamma: &[usize], n: usize, m: usize) -> u64 {
    let mut alpha: Vec<usize> = (1..=m).collect();
    let mut hits = 0;
    loop {
        if beta.iter().zip(gamma).all(|(&b, &g)| alpha[g - 1] == b) {
            hits += 1;
        }
        let Some(t) = (0..m).rev().find(|&t| alpha[t] < n - m + t + 1) else {
            return hits;
        };
        alpha[t] += 1;
        for u in t + 1..m {
            alpha[u] = alpha[u - 1] + 1;
        }
    }
}

fn random_subset(rng: &mut ChaCha8Rng, bound: usize, size: usize) -> Vec<usize> {
    let mut all: Vec<usize> = (1..=bound).collect();
    for i in 0..size {
        let j = rng.gen_range(i..bound);
        all.swap(i, j);
    }
    let mut s = all[..size].to_vec();
    s.sort_unstable();
    s
}

#[test]
fn general_coefficients_count_index_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let beta = random_subset(&mut rng, 8, 2);
        let gamma = random_subset(&mut rng, 3, 2);
        let c = coeff_c_general(&beta, &gamma, 8, 3).unwrap();
        assert_eq!(
            c,
            BigUint::from(count_alphas(&beta, &gamma, 8, 3)),
            "{beta:?} {gamma:?}"
        );
    }
}

#[test]
fn levels_sum_to_normalized_count_on_random_texts() {
    let d = ExactDist::from_fractions(&[(1, 2), (1, 2)]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..100 {
        let text: Vec<Symbol> = (0..10).map(|_| rng.gen_range(0..2)).collect();
        let wbits: Vec<Symbol> = (0..3).map(|_| rng.gen_range(0..2)).collect();
        let w = Pattern::new(wbits, &SourceDist::uniform(Alphabet::latin(2).unwrap())).unwrap();
        let z = count_subsequences(&text, &w, CountMode::Exact)
            .exact
            .unwrap();
        let z_star = BigRational::from_integer(BigInt::from(z)) / d.prob_of(w.word());
        let sum = (0..=3).fold(BigRational::zero(), |s, l| {
            s + v_level(&text, &d, &w, l).unwrap()
        });
        assert_eq!(sum, z_star);
    }
}

#[test]
fn residual_vanishes_on_every_binary_text_of_length_eight() {
    let d = ExactDist::from_fractions(&[(1, 2), (1, 2)]).unwrap();
    let w = pattern("aba", 2);
    for idx in 0..256 {
        let r = decompose(&text_from_index(idx, 8), &d, &w).unwrap();
        assert!(r.residual.is_zero(), "text #{idx}");
        assert_eq!(r.v[0], BigRational::from_integer(56.into()));
    }
}

/// Weighted moments of all levels over every binary text of length `n`.
struct Exhaustive {
    mean: Vec<BigRational>,
    cross: Vec<Vec<BigRational>>,
    /// `E[(Z* - V_1)^2]` and `E[Z* - V_1]`.
    rest_sq: BigRational,
    rest_mean: BigRational,
}

fn exhaustive(n: usize, dist: &ExactDist, w: &Pattern) -> Exhaustive {
    let levels = w.len() + 1;
    let mut mean = vec![BigRational::zero(); levels];
    let mut cross = vec![vec![BigRational::zero(); levels]; levels];
    let mut rest_sq = BigRational::zero();
    let mut rest_mean = BigRational::zero();
    for idx in 0..(1usize << n) {
        let text = text_from_index(idx, n);
        let pr = weight(&text, dist);
        let r = decompose(&text, dist, w).unwrap();
        for l in 0..levels {
            mean[l] += &pr * &r.v[l];
            for (k, c) in cross[l].iter_mut().enumerate() {
                *c += &pr * &r.v[l] * &r.v[k];
            }
        }
        let rest = &r.z_star - &r.v[1];
        rest_mean += &pr * &rest;
        rest_sq += &pr * &rest * &rest;
    }
    Exhaustive {
        mean,
        cross,
        rest_sq,
        rest_mean,
    }
}

#[test]
fn levels_are_orthogonal_under_the_source_law() {
    for (n, probs, word) in [
        (8, [(1, 2), (1, 2)], "aba"),
        (9, [(1, 3), (2, 3)], "abb"),
        (10, [(3, 10), (7, 10)], "ab"),
    ] {
        let d = ExactDist::from_fractions(&probs).unwrap();
        let w = pattern(word, 2);
        let e = exhaustive(n, &d, &w);
        for l in 1..e.mean.len() {
            assert!(e.mean[l].is_zero(), "E V_{l} != 0 for {word}");
        }
        for l in 0..e.mean.len() {
            for k in 0..e.mean.len() {
                if l != k {
                    let cov = &e.cross[l][k] - &e.mean[l] * &e.mean[k];
                    assert!(cov.is_zero(), "Cov(V_{l}, V_{k}) = {cov} for {word}");
                }
            }
        }
    }
}

#[test]
fn first_level_variance_equals_sigma1() {
    for (n, probs, word) in [
        (10, [(1, 2), (1, 2)], "aba"),
        (9, [(1, 3), (2, 3)], "abba"),
        (8, [(1, 5), (4, 5)], "ba"),
    ] {
        let d = ExactDist::from_fractions(&probs).unwrap();
        let w = pattern(word, 2);
        let e = exhaustive(n, &d, &w);
        let var_v1 = &e.cross[1][1] - &e.mean[1] * &e.mean[1];
        assert_eq!(var_v1, sigma1_sq_exact(&d, &w, n).unwrap(), "{word}");
    }
}

#[test]
fn remainder_variance_obeys_the_residual_bound() {
    let d = ExactDist::from_fractions(&[(1, 2), (1, 2)]).unwrap();
    for (n, word) in [(10, "aba"), (10, "ab"), (9, "bba"), (10, "a")] {
        let w = pattern(word, 2);
        let m = w.len();
        assert!((m * m) as f64 <= n as f64, "B = 1 requires m <= sqrt(n)");
        let e = exhaustive(n, &d, &w);
        let var_rest = &e.rest_sq - &e.rest_mean * &e.rest_mean;
        let (bound, applicable) = residual_bound_exact(&d, n, m).unwrap();
        assert!(applicable);
        assert!(var_rest <= bound, "{word}: {var_rest} > {bound}");
    }
}

#[test]
fn identity_checks_from_examples() {
    assert!(identity_checks(6, 3, 1).unwrap().holds());
    assert!(identity_checks(9, 4, 2).unwrap().holds());
    for m in 1..=5 {
        let r = identity_checks(7, m, m).unwrap();
        assert!(r.holds());
        assert_eq!(r.columns_checked, 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn residual_is_exactly_zero(
        text in prop::collection::vec(0..3u8, 0..12),
        word in prop::collection::vec(0..3u8, 1..5),
        p0 in 1..8i64,
        p1 in 1..8i64,
    ) {
        let total = p0 + p1 + 4;
        let d = ExactDist::from_fractions(&[(p0, total), (p1, total), (4, total)]).unwrap();
        let w = Pattern::new(word, &SourceDist::uniform(Alphabet::latin(3).unwrap())).unwrap();
        let r = decompose(&text, &d, &w).unwrap();
        prop_assert!(r.residual.is_zero());
        let c = subseq::moments::binomial_exact(text.len() as u64, w.len() as u64);
        prop_assert_eq!(&r.v[0], &BigRational::from_integer(BigInt::from(c)));
        prop_assert!(r.per_level_sq.iter().all(|x| *x >= BigRational::zero()));
        prop_assert_eq!(r.per_level_sq.len(), w.len() + 1);
    }
}
