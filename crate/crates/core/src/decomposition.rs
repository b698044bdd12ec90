//! Exact Hoeffding decomposition `Z* = sum_l V_l` of the normalized count
//! `Z* = Z / p_w` on a realized text.
//!
//! Everything here is rational arithmetic: the identities are exact, so a
//! nonzero residual is a bug, not rounding.

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Serialize, Serializer};

use crate::counting::{count_subsequences, CountMode};
use crate::error::{Error, Result};
use crate::moments::binom::binomial_exact;
use crate::source::{ExactDist, Pattern, Symbol};

/// Largest `C(n, l) C(m, l)` a single level may enumerate.
pub const LEVEL_LIMIT: u64 = 10_000_000;

/// `phi_a(x) = 1{x = a} / p_a - 1`.
pub fn phi(dist: &ExactDist, a: Symbol, x: Symbol) -> Result<BigRational> {
    check_symbol(dist, a)?;
    check_symbol(dist, x)?;
    let minus_one = -BigRational::one();
    Ok(if a == x {
        dist.prob(a).recip() + minus_one
    } else {
        minus_one
    })
}

fn check_symbol(dist: &ExactDist, a: Symbol) -> Result<()> {
    if usize::from(a) >= dist.len() {
        return Err(Error::OutOfRange(format!(
            "symbol index {a} outside an alphabet of {} letters",
            dist.len()
        )));
    }
    Ok(())
}

fn check_index_set(set: &[usize], bound: usize, name: &str) -> Result<()> {
    let increasing = set.windows(2).all(|w| w[0] < w[1]);
    let in_range = set.iter().all(|&x| (1..=bound).contains(&x));
    if !increasing || !in_range {
        return Err(Error::OutOfRange(format!(
            "{name} = {set:?} must be strictly increasing within 1..={bound}"
        )));
    }
    Ok(())
}

/// `c(beta, gamma)`: the number of `alpha` in `C([n], m)` with
/// `alpha_gamma = beta`, i.e. the product of gap binomials
/// `C(beta_k - beta_{k-1} - 1, gamma_k - gamma_{k-1} - 1)` with sentinels
/// `beta_0 = gamma_0 = 0`, `beta_{l+1} = n + 1`, `gamma_{l+1} = m + 1`.
/// Indices are 1-based.
pub fn coeff_c_general(beta: &[usize], gamma: &[usize], n: usize, m: usize) -> Result<BigUint> {
    if beta.len() != gamma.len() {
        return Err(Error::OutOfRange(format!(
            "beta and gamma must have equal sizes, got {} and {}",
            beta.len(),
            gamma.len()
        )));
    }
    check_index_set(beta, n, "beta")?;
    check_index_set(gamma, m, "gamma")?;
    let bs = std::iter::once(0)
        .chain(beta.iter().copied())
        .chain([n + 1]);
    let gs = std::iter::once(0)
        .chain(gamma.iter().copied())
        .chain([m + 1]);
    let pts: Vec<(usize, usize)> = bs.zip(gs).collect();
    let mut acc = BigUint::one();
    for w in pts.windows(2) {
        let (db, dg) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
        if db < dg {
            return Ok(BigUint::zero());
        }
        acc *= binomial_exact((db - 1) as u64, (dg - 1) as u64);
    }
    Ok(acc)
}

/// Calls `f` on every strictly increasing 1-based `k`-subset of `1..=n`,
/// in lexicographic order (once, on the empty set, for `k = 0`).
fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut set: Vec<usize> = (1..=k).collect();
    loop {
        f(&set);
        let Some(t) = (0..k).rev().find(|&t| set[t] < n - k + t + 1) else {
            return;
        };
        set[t] += 1;
        for u in t + 1..k {
            set[u] = set[u - 1] + 1;
        }
    }
}

/// Exact binomials as signed integers for `0 <= r <= rows`, `0 <= c <= cols`.
struct SignedBinomials {
    cols: usize,
    data: Vec<BigInt>,
}

impl SignedBinomials {
    fn new(rows: usize, cols: usize) -> Self {
        let mut data = Vec::with_capacity((rows + 1) * (cols + 1));
        for r in 0..=rows {
            for c in 0..=cols {
                data.push(BigInt::from(binomial_exact(r as u64, c as u64)));
            }
        }
        SignedBinomials { cols, data }
    }

    fn get(&self, r: usize, c: usize) -> &BigInt {
        &self.data[r * (self.cols + 1) + c]
    }
}

fn check_level_size(n: usize, m: usize, ell: usize) -> Result<()> {
    let size = binomial_exact(n as u64, ell as u64) * binomial_exact(m as u64, ell as u64);
    if size > BigUint::from(LEVEL_LIMIT) {
        return Err(Error::TooLarge {
            what: "C(n, l) C(m, l)",
            size: size.to_string(),
            limit: LEVEL_LIMIT.to_string(),
        });
    }
    Ok(())
}

fn check_inputs(text: &[Symbol], dist: &ExactDist, pattern: &Pattern) -> Result<()> {
    if pattern.is_empty() {
        return Err(Error::EmptyPattern);
    }
    if pattern.alphabet_size() != dist.len() {
        return Err(Error::AlphabetMismatch {
            pattern: pattern.alphabet_size(),
            dist: dist.len(),
        });
    }
    text.iter().try_for_each(|&x| check_symbol(dist, x))
}

/// Shared state of the `beta` walk for one fixed `gamma`.
struct LevelWalk<'a> {
    text: &'a [Symbol],
    word: &'a [Symbol],
    /// `p_a = num[a] / den[a]`.
    num: &'a [BigInt],
    den: &'a [BigInt],
    binom: &'a SignedBinomials,
    n: usize,
    m: usize,
}

impl LevelWalk<'_> {
    /// Sum over admissible `beta_k, ..., beta_l` of the gap binomials times
    /// the integer numerators `den_a 1{x = a} - num_a` of `phi`, where
    /// `acc` already holds the factors for `k - 1` chosen positions.
    fn sum(&self, gamma: &[usize], k: usize, prev_b: usize, prev_g: usize, acc: &BigInt) -> BigInt {
        if k == gamma.len() {
            let last = self.binom.get(self.n - prev_b, self.m - prev_g);
            return acc * last;
        }
        let g = gamma[k];
        let dg = g - prev_g;
        let a = usize::from(self.word[g - 1]);
        let hi = self.n - (self.m - g);
        let mut total = BigInt::zero();
        // Any beta_k closer than dg to prev_b has a zero gap binomial.
        for b in prev_b + dg..=hi {
            let gap = self.binom.get(b - prev_b - 1, dg - 1);
            let phi_num = if usize::from(self.text[b - 1]) == a {
                &self.den[a] - &self.num[a]
            } else {
                -&self.num[a]
            };
            let next = acc * gap * phi_num;
            total += self.sum(gamma, k + 1, b, g, &next);
        }
        total
    }
}

/// `V_l = sum_{beta, gamma} c(beta, gamma) prod_k phi_{w_{gamma_k}}(xi_{beta_k})`.
pub fn v_level(
    text: &[Symbol],
    dist: &ExactDist,
    pattern: &Pattern,
    ell: usize,
) -> Result<BigRational> {
    check_inputs(text, dist, pattern)?;
    let (n, m) = (text.len(), pattern.len());
    if ell > m {
        return Err(Error::OutOfRange(format!(
            "level l = {ell} exceeds m = {m}"
        )));
    }
    check_level_size(n, m, ell)?;
    let binom = SignedBinomials::new(n, m);
    let num: Vec<BigInt> = dist.probs().iter().map(|p| p.numer().clone()).collect();
    let den: Vec<BigInt> = dist.probs().iter().map(|p| p.denom().clone()).collect();
    Ok(v_level_with(text, pattern, ell, &binom, &num, &den))
}

fn v_level_with(
    text: &[Symbol],
    pattern: &Pattern,
    ell: usize,
    binom: &SignedBinomials,
    num: &[BigInt],
    den: &[BigInt],
) -> BigRational {
    let (n, m) = (text.len(), pattern.len());
    if m > n {
        return BigRational::zero();
    }
    let walk = LevelWalk {
        text,
        word: pattern.word(),
        num,
        den,
        binom,
        n,
        m,
    };
    let mut level = BigRational::zero();
    let visit = |gamma: &[usize]| {
        let s = walk.sum(gamma, 0, 0, 0, &BigInt::one());
        if !s.is_zero() {
            // Each phi factor has denominator num_a for its letter a.
            let d: BigInt = gamma
                .iter()
                .map(|&g| &num[usize::from(pattern.word()[g - 1])])
                .product();
            level += BigRational::new(s, d);
        }
    };
    for_each_subset(m, ell, visit);
    level
}

fn ser_rational<S: Serializer>(x: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

fn ser_rationals<S: Serializer>(xs: &[BigRational], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(xs.iter().map(|x| x.to_string()))
}

#[derive(Clone, Debug, Serialize)]
pub struct DecompositionReport {
    pub n: usize,
    pub m: usize,
    /// The exact source probabilities used, e.g. `"1/2"`.
    pub probabilities: Vec<String>,
    pub z: String,
    /// `Z* = Z / p_w`.
    #[serde(serialize_with = "ser_rational")]
    pub z_star: BigRational,
    /// `V_0, ..., V_m`.
    #[serde(serialize_with = "ser_rationals")]
    pub v: Vec<BigRational>,
    /// `Z* - sum_l V_l`; zero by construction of the decomposition.
    #[serde(serialize_with = "ser_rational")]
    pub residual: BigRational,
    #[serde(serialize_with = "ser_rationals")]
    pub per_level_sq: Vec<BigRational>,
}

/// All levels `V_0..V_m` together with `Z*` and the residual.
pub fn decompose(
    text: &[Symbol],
    dist: &ExactDist,
    pattern: &Pattern,
) -> Result<DecompositionReport> {
    check_inputs(text, dist, pattern)?;
    let (n, m) = (text.len(), pattern.len());
    for ell in 0..=m {
        check_level_size(n, m, ell)?;
    }
    let binom = SignedBinomials::new(n, m);
    let num: Vec<BigInt> = dist.probs().iter().map(|p| p.numer().clone()).collect();
    let den: Vec<BigInt> = dist.probs().iter().map(|p| p.denom().clone()).collect();
    let v: Vec<BigRational> = (0..=m)
        .map(|ell| v_level_with(text, pattern, ell, &binom, &num, &den))
        .collect();
    let z = count_subsequences(text, pattern, CountMode::Exact)
        .exact
        .expect("exact mode yields an exact count");
    let z_star = BigRational::from_integer(BigInt::from(z.clone())) / dist.prob_of(pattern.word());
    let residual = v.iter().fold(z_star.clone(), |r, x| r - x);
    let per_level_sq = v.iter().map(|x| x * x).collect();
    Ok(DecompositionReport {
        n,
        m,
        probabilities: dist.describe(),
        z: z.to_string(),
        z_star,
        v,
        residual,
        per_level_sq,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityRecord {
    pub n: usize,
    pub m: usize,
    pub ell: usize,
    /// Every `gamma` column satisfies `sum_beta c(beta, gamma) = C(n, m)`.
    pub column_sums_hold: bool,
    /// Every `beta` row satisfies `sum_gamma c(beta, gamma) = C(n-l, m-l)`.
    pub row_sums_hold: bool,
    pub columns_checked: usize,
    pub rows_checked: usize,
    pub failures: Vec<String>,
}

impl IdentityRecord {
    pub fn holds(&self) -> bool {
        self.column_sums_hold && self.row_sums_hold
    }
}

/// Checks both marginal identities of `c(beta, gamma)` by full enumeration.
pub fn identity_checks(n: usize, m: usize, ell: usize) -> Result<IdentityRecord> {
    if m > n || ell > m {
        return Err(Error::OutOfRange(format!(
            "identity checks need l <= m <= n, got n={n}, m={m}, l={ell}"
        )));
    }
    check_level_size(n, m, ell)?;
    let total = binomial_exact(n as u64, m as u64);
    let per_row = binomial_exact((n - ell) as u64, (m - ell) as u64);
    let mut rows: HashMap<Vec<usize>, BigUint> = HashMap::new();
    let mut failures = Vec::new();
    let mut columns_checked = 0;
    let mut betas = Vec::new();
    for_each_subset(n, ell, |b| betas.push(b.to_vec()));
    let mut check_column = |gamma: &[usize]| {
        let mut col = BigUint::zero();
        for beta in &betas {
            let c = coeff_c_general(beta, gamma, n, m).expect("valid index sets");
            *rows.entry(beta.clone()).or_default() += &c;
            col += c;
        }
        columns_checked += 1;
        if col != total {
            failures.push(format!(
                "column gamma={gamma:?}: sum {col} != C(n,m) = {total}"
            ));
        }
    };
    for_each_subset(m, ell, &mut check_column);
    let column_sums_hold = failures.is_empty();
    let mut row_sums_hold = true;
    for (beta, sum) in &rows {
        if *sum != per_row {
            row_sums_hold = false;
            failures.push(format!(
                "row beta={beta:?}: sum {sum} != C(n-l,m-l) = {per_row}"
            ));
        }
    }
    failures.sort();
    Ok(IdentityRecord {
        n,
        m,
        ell,
        column_sums_hold,
        row_sums_hold,
        columns_checked,
        rows_checked: rows.len(),
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::coeff_c_exact;
    use crate::source::{Alphabet, SourceDist};

    fn half() -> ExactDist {
        ExactDist::from_fractions(&[(1, 2), (1, 2)]).unwrap()
    }

    fn pattern(s: &str) -> Pattern {
        let d = SourceDist::uniform(Alphabet::new("ab").unwrap());
        Pattern::parse(s, &d).unwrap()
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn phi_values_and_mean_zero() {
        let d = half();
        assert_eq!(phi(&d, 0, 0).unwrap(), rat(1, 1));
        assert_eq!(phi(&d, 0, 1).unwrap(), rat(-1, 1));
        let d = ExactDist::from_fractions(&[(1, 5), (3, 10), (1, 2)]).unwrap();
        for a in 0..3u8 {
            let mean: BigRational = (0..3u8)
                .map(|x| d.prob(x) * phi(&d, a, x).unwrap())
                .fold(BigRational::zero(), |s, t| s + t);
            assert!(mean.is_zero());
        }
        assert!(phi(&d, 3, 0).is_err());
    }

    #[test]
    fn single_index_coefficients_match_cij() {
        let (n, m) = (9, 4);
        for i in 1..=n {
            for j in 1..=m {
                let general = coeff_c_general(&[i], &[j], n, m).unwrap();
                assert_eq!(general, coeff_c_exact(i, j, n, m).unwrap());
            }
        }
    }

    #[test]
    fn full_level_coefficient_is_one_or_zero() {
        assert_eq!(
            coeff_c_general(&[2, 4, 7], &[1, 2, 3], 8, 3).unwrap(),
            BigUint::one()
        );
        assert_eq!(
            coeff_c_general(&[], &[], 8, 3).unwrap(),
            BigUint::from(56u32)
        );
        assert!(coeff_c_general(&[2, 2], &[1, 2], 8, 3).is_err());
        assert!(coeff_c_general(&[2], &[1, 2], 8, 3).is_err());
        assert!(coeff_c_general(&[9], &[1], 8, 3).is_err());
    }

    #[test]
    fn level_zero_is_the_binomial() {
        let d = half();
        let w = pattern("aba");
        let text = [0u8, 1, 1, 0, 0, 1, 0];
        assert_eq!(v_level(&text, &d, &w, 0).unwrap(), rat(35, 1));
    }

    #[test]
    fn level_one_matches_single_index_form() {
        let d = ExactDist::from_fractions(&[(3, 10), (7, 10)]).unwrap();
        let w = pattern("abb");
        let text = [1u8, 0, 0, 1, 1, 0, 1, 1];
        let (n, m) = (text.len(), w.len());
        let mut direct = BigRational::zero();
        for i in 1..=n {
            for j in 1..=m {
                let c = BigRational::from_integer(coeff_c_exact(i, j, n, m).unwrap().into());
                direct += c * phi(&d, w.word()[j - 1], text[i - 1]).unwrap();
            }
        }
        assert_eq!(v_level(&text, &d, &w, 1).unwrap(), direct);
    }

    #[test]
    fn text_equal_to_pattern() {
        let d = ExactDist::from_fractions(&[(1, 3), (2, 3)]).unwrap();
        let w = pattern("abba");
        let r = decompose(w.word(), &d, &w).unwrap();
        assert_eq!(r.z, "1");
        assert_eq!(r.z_star, d.prob_of(w.word()).recip());
        assert!(r.residual.is_zero());
    }

    #[test]
    fn text_without_first_letter() {
        let d = half();
        let w = pattern("ab");
        let r = decompose(&[1, 1, 1, 1, 1], &d, &w).unwrap();
        assert!(r.z_star.is_zero());
        assert!(r.residual.is_zero());
        let sum = r.v.iter().fold(BigRational::zero(), |s, x| s + x);
        assert!(sum.is_zero());
    }

    #[test]
    fn identity_examples() {
        for (n, m, ell) in [(6, 3, 1), (9, 4, 2), (7, 3, 3), (5, 2, 0)] {
            let r = identity_checks(n, m, ell).unwrap();
            assert!(r.holds(), "{r:?}");
        }
        let r = identity_checks(6, 3, 3).unwrap();
        assert_eq!(r.columns_checked, 1);
        assert_eq!(r.rows_checked, 20);
    }

    #[test]
    fn refuses_oversized_levels() {
        let d = half();
        let w = pattern(&"ab".repeat(10));
        let text = vec![0u8; 60];
        assert!(matches!(
            v_level(&text, &d, &w, 10),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn report_serializes_fractions() {
        let d = ExactDist::from_fractions(&[(1, 3), (2, 3)]).unwrap();
        let w = pattern("ab");
        let r = decompose(&[0, 1, 1], &d, &w).unwrap();
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["z"], "2");
        assert_eq!(json["z_star"], "9");
        assert_eq!(json["residual"], "0");
        assert_eq!(json["v"][0], "3");
        assert_eq!(json["probabilities"][0], "1/3");
    }
}
