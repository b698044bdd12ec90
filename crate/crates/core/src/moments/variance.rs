//! `E[Z]`, the first-projection variance `sigma_1^2` and the bounds around it.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use super::binom::{binomial_exact, log_binomial, BinomialTable};
use super::hypergeom::pi_row_into;
use crate::error::{Error, Result};
use crate::lognum::LogNum;
use crate::source::{ensure_same_alphabet, ExactDist, Pattern, SourceDist, MAX_DENOMINATOR};

/// Largest `n` accepted by the exact rational routines.
pub const EXACT_MAX_N: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Arithmetic {
    Exact,
    StableFloat,
}

fn check_lengths(n: usize, m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::EmptyPattern);
    }
    if n < m {
        return Err(Error::TextTooShort { n, m });
    }
    Ok(())
}

fn check_exact_size(n: usize) -> Result<()> {
    if n > EXACT_MAX_N {
        return Err(Error::TooLarge {
            what: "n for exact arithmetic",
            size: n.to_string(),
            limit: EXACT_MAX_N.to_string(),
        });
    }
    Ok(())
}

fn big(x: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(x.into())
}

/// `E[Z] = C(n, m) p_w`.
pub fn expected_count(dist: &SourceDist, pattern: &Pattern, n: usize) -> Result<LogNum> {
    ensure_same_alphabet(pattern, dist)?;
    let m = pattern.len();
    check_lengths(n, m)?;
    Ok(log_binomial(n as i64, m as i64) * LogNum::from_ln(pattern.log_pw()))
}

/// Exact rational `C(n, m) p_w`, for `n <= 500`.
pub fn expected_count_exact(dist: &ExactDist, pattern: &Pattern, n: usize) -> Result<BigRational> {
    let m = pattern.len();
    check_lengths(n, m)?;
    check_exact_size(n)?;
    Ok(big(binomial_exact(n as u64, m as u64)) * dist.prob_of(pattern.word()))
}

/// `c(i, j) = C(i-1, j-1) C(n-i, m-j)`, 1-based.
pub fn coeff_c(i: usize, j: usize, n: usize, m: usize) -> Result<LogNum> {
    check_coeff_args(i, j, n, m)?;
    let (i, j, n, m) = (i as i64, j as i64, n as i64, m as i64);
    Ok(log_binomial(i - 1, j - 1) * log_binomial(n - i, m - j))
}

pub fn coeff_c_exact(i: usize, j: usize, n: usize, m: usize) -> Result<num_bigint::BigUint> {
    check_coeff_args(i, j, n, m)?;
    let (i, j, n, m) = (i as u64, j as u64, n as u64, m as u64);
    Ok(binomial_exact(i - 1, j - 1) * binomial_exact(n - i, m - j))
}

fn check_coeff_args(i: usize, j: usize, n: usize, m: usize) -> Result<()> {
    if i == 0 || i > n || j == 0 || j > m {
        return Err(Error::OutOfRange(format!(
            "c(i, j) needs 1 <= i <= n and 1 <= j <= m, got i={i}, j={j}, n={n}, m={m}"
        )));
    }
    Ok(())
}

/// `sum_a (s_a - p_a)^2 / p_a` where `s_a = sum_{j: w_j = a} pi(i, j)`.
///
/// Equal to `sum_a s_a^2 / p_a - 1` whenever `sum_a s_a = 1`, but without the
/// subtraction of two O(1) numbers.
fn normalized_tau_sq(row: &[f64], pattern: &Pattern, dist: &SourceDist, sums: &mut [f64]) -> f64 {
    sums.fill(0.0);
    for (&pi, &a) in row.iter().zip(pattern.word()) {
        sums[usize::from(a)] += pi;
    }
    sums.iter()
        .zip(dist.probs())
        .map(|(s, p)| (s - p) * (s - p) / p)
        .sum()
}

/// `tau_i^2 = Var V_{1,i}`, in log space.
pub fn tau_sq(
    i: usize,
    dist: &SourceDist,
    pattern: &Pattern,
    n: usize,
    arithmetic: Arithmetic,
) -> Result<LogNum> {
    ensure_same_alphabet(pattern, dist)?;
    let m = pattern.len();
    check_lengths(n, m)?;
    if i == 0 || i > n {
        return Err(Error::OutOfRange(format!(
            "tau_sq needs 1 <= i <= n, got i={i}, n={n}"
        )));
    }
    match arithmetic {
        Arithmetic::StableFloat => {
            let mut row = vec![0.0; m];
            let mut sums = vec![0.0; dist.len()];
            pi_row_into(i, n, m, &mut row)?;
            let t = normalized_tau_sq(&row, pattern, dist, &mut sums);
            Ok(LogNum::from_f64(t) * log_binomial(n as i64 - 1, m as i64 - 1).powi(2))
        }
        Arithmetic::Exact => {
            let exact = dist.rationalize(MAX_DENOMINATOR)?;
            let table = BinomialTable::new(n, m);
            let v = tau_sq_exact_with(i, &exact, pattern, n, &table)?;
            Ok(super::binom::lognum_from_rational(&v))
        }
    }
}

/// Exact `tau_i^2 = sum_a p_a^{-1} (sum_{j: w_j=a} c(i,j))^2 - C(n-1,m-1)^2`.
pub fn tau_sq_exact(
    i: usize,
    dist: &ExactDist,
    pattern: &Pattern,
    n: usize,
) -> Result<BigRational> {
    let m = pattern.len();
    check_lengths(n, m)?;
    check_exact_size(n)?;
    let table = BinomialTable::new(n, m);
    tau_sq_exact_with(i, dist, pattern, n, &table)
}

fn tau_sq_exact_with(
    i: usize,
    dist: &ExactDist,
    pattern: &Pattern,
    n: usize,
    table: &BinomialTable,
) -> Result<BigRational> {
    let m = pattern.len();
    if pattern.alphabet_size() != dist.len() {
        return Err(Error::AlphabetMismatch {
            pattern: pattern.alphabet_size(),
            dist: dist.len(),
        });
    }
    if i == 0 || i > n {
        return Err(Error::OutOfRange(format!(
            "tau_sq needs 1 <= i <= n, got i={i}, n={n}"
        )));
    }
    let (ii, nn, mm) = (i as i64, n as i64, m as i64);
    let mut sums = vec![num_bigint::BigUint::zero(); dist.len()];
    for (j, &a) in pattern.word().iter().enumerate() {
        let j = j as i64 + 1;
        let c = table.get(ii - 1, j - 1) * table.get(nn - ii, mm - j);
        sums[usize::from(a)] += c;
    }
    let mut acc = BigRational::zero();
    for (a, s) in sums.into_iter().enumerate() {
        if !s.is_zero() {
            let s = big(s);
            acc += &s * &s / dist.prob(a as u8);
        }
    }
    let c11 = big(table.get(nn - 1, mm - 1).clone());
    Ok(acc - &c11 * &c11)
}

/// `sigma_1^2 = sum_i tau_i^2`, the variance of the first Hoeffding
/// projection of `Z* = Z / p_w`.
pub fn sigma1_sq(dist: &SourceDist, pattern: &Pattern, n: usize) -> Result<LogNum> {
    let scaled = sigma1_sq_scaled(dist, pattern, n)?;
    let m = pattern.len() as i64;
    Ok(LogNum::from_f64(scaled) * log_binomial(n as i64 - 1, m - 1).powi(2))
}

/// `sigma_1^2 / C(n-1, m-1)^2`, an O(n) plain float.
pub fn sigma1_sq_scaled(dist: &SourceDist, pattern: &Pattern, n: usize) -> Result<f64> {
    ensure_same_alphabet(pattern, dist)?;
    let m = pattern.len();
    check_lengths(n, m)?;
    let mut row = vec![0.0; m];
    let mut sums = vec![0.0; dist.len()];
    let mut total = 0.0;
    for i in 1..=n {
        pi_row_into(i, n, m, &mut row)?;
        total += normalized_tau_sq(&row, pattern, dist, &mut sums);
    }
    Ok(total)
}

/// Exact rational `sigma_1^2`, for `n <= 500`.
pub fn sigma1_sq_exact(dist: &ExactDist, pattern: &Pattern, n: usize) -> Result<BigRational> {
    let m = pattern.len();
    check_lengths(n, m)?;
    check_exact_size(n)?;
    let table = BinomialTable::new(n, m);
    (1..=n).try_fold(BigRational::zero(), |acc, i| {
        Ok(acc + tau_sq_exact_with(i, dist, pattern, n, &table)?)
    })
}

/// `xi_l = B^l C(n, l) C(n-l, m-l)^2`, the upper bound on `Var V_l`.
pub fn xi_bound(ell: usize, dist: &SourceDist, n: usize, m: usize) -> Result<LogNum> {
    check_ell(ell, n, m)?;
    let (l, n, m) = (ell as i64, n as i64, m as i64);
    Ok(LogNum::from_f64(dist.b_const()).powi(l as i32)
        * log_binomial(n, l)
        * log_binomial(n - l, m - l).powi(2))
}

pub fn xi_bound_exact(ell: usize, dist: &ExactDist, n: usize, m: usize) -> Result<BigRational> {
    check_ell(ell, n, m)?;
    let (l, n, m) = (ell as u64, n as u64, m as u64);
    let c = big(binomial_exact(n - l, m - l));
    Ok(num_traits::pow(dist.b_const(), ell) * big(binomial_exact(n, l)) * &c * &c)
}

fn check_ell(ell: usize, n: usize, m: usize) -> Result<()> {
    check_lengths(n, m)?;
    if ell == 0 || ell > m {
        return Err(Error::OutOfRange(format!(
            "xi_l needs 1 <= l <= m, got l={ell}, m={m}"
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ResidualBound {
    /// `B^2 m^2 C(n-1, m-1)^2`.
    pub value: LogNum,
    /// Whether `m <= sqrt(n / B)`, the hypothesis under which `value`
    /// bounds `Var(Z* - V_1)`.
    pub applicable: bool,
}

/// Bound on the variance of everything beyond the first projection.
pub fn residual_bound(dist: &SourceDist, n: usize, m: usize) -> Result<ResidualBound> {
    check_lengths(n, m)?;
    let b = dist.b_const();
    let mf = m as f64;
    let value = LogNum::from_f64(b * mf).powi(2) * log_binomial(n as i64 - 1, m as i64 - 1).powi(2);
    Ok(ResidualBound {
        value,
        applicable: mf * mf * b <= n as f64,
    })
}

pub fn residual_bound_exact(dist: &ExactDist, n: usize, m: usize) -> Result<(BigRational, bool)> {
    check_lengths(n, m)?;
    let b = dist.b_const();
    let c = big(binomial_exact(n as u64 - 1, m as u64 - 1));
    let mm = big(m as u64);
    let applicable = &mm * &mm * &b <= big(n as u64);
    Ok((&b * &b * &mm * &mm * &c * &c, applicable))
}

/// `n C(n-1, m-1)^2 ||q - p||^2`, a lower bound on `sigma_1^2`.
pub fn lk_lower_bound(dist: &SourceDist, pattern: &Pattern, n: usize) -> Result<LogNum> {
    let d = crate::source::proportion_distance(pattern, dist)?;
    let m = pattern.len();
    check_lengths(n, m)?;
    Ok(LogNum::from_f64(n as f64 * d * d) * log_binomial(n as i64 - 1, m as i64 - 1).powi(2))
}

pub fn lk_lower_bound_exact(dist: &ExactDist, pattern: &Pattern, n: usize) -> Result<BigRational> {
    let m = pattern.len();
    check_lengths(n, m)?;
    let dist_sq = pattern
        .proportions_exact()
        .iter()
        .zip(dist.probs())
        .map(|(q, p)| {
            let diff = BigRational::new((*q.numer()).into(), (*q.denom()).into()) - p;
            &diff * &diff
        })
        .fold(BigRational::zero(), |acc, x| acc + x);
    let c = big(binomial_exact(n as u64 - 1, m as u64 - 1));
    Ok(big(n as u64) * &c * &c * dist_sq)
}

/// `sum_a p_a (1/p_a - 1)`, which is `|A| - 1` for every source.
pub fn letter_variance_sum(dist: &SourceDist) -> f64 {
    dist.probs().iter().map(|p| p * (1.0 / p - 1.0)).sum()
}

pub fn letter_variance_sum_exact(dist: &ExactDist) -> BigRational {
    dist.probs()
        .iter()
        .map(|p| p * (p.recip() - BigRational::one()))
        .fold(BigRational::zero(), |acc, x| acc + x)
}
