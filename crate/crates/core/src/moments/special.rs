//! Alternating and random patterns.

use num_bigint::BigInt;
use serde::Serialize;

use super::binom::{binomial_exact, log_binomial, BinomialTable};
use super::hypergeom::pi_row_into;
use super::variance::letter_variance_sum;
use crate::error::{Error, Result};
use crate::lognum::LogNum;
use crate::source::SourceDist;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SignedSum {
    pub value: LogNum,
    /// The positive and negative halves cancelled below double resolution
    /// and `value` was declared zero.
    pub cancelled: bool,
}

fn check_alt(i: usize, n: usize, m: usize) -> Result<()> {
    if m == 0 || m > n || i == 0 || i > n {
        return Err(Error::OutOfRange(format!(
            "alternating tau needs 1 <= i <= n and 1 <= m <= n, got i={i}, n={n}, m={m}"
        )));
    }
    Ok(())
}

/// `tau_i = sum_j (-1)^j C(i-1, j-1) C(n-i, m-j)` for the alternating pattern
/// over an unbiased binary source.
///
/// Even and odd `j` are accumulated separately (same-sign log sums), so the
/// only lossy step is the final subtraction.
pub fn alternating_tau(i: usize, n: usize, m: usize) -> Result<SignedSum> {
    check_alt(i, n, m)?;
    let (ii, nn, mm) = (i as i64, n as i64, m as i64);
    let mut even = LogNum::ZERO;
    let mut odd = LogNum::ZERO;
    for j in 1..=mm {
        let c = log_binomial(ii - 1, j - 1) * log_binomial(nn - ii, mm - j);
        if j % 2 == 0 {
            even = even + c;
        } else {
            odd = odd + c;
        }
    }
    let (value, cancelled) = even.add_flagged(-odd);
    Ok(SignedSum { value, cancelled })
}

pub fn alternating_tau_exact(i: usize, n: usize, m: usize) -> Result<BigInt> {
    check_alt(i, n, m)?;
    let (i, n, m) = (i as u64, n as u64, m as u64);
    let mut acc = BigInt::from(0);
    for j in 1..=m {
        let c = BigInt::from(binomial_exact(i - 1, j - 1) * binomial_exact(n - i, m - j));
        if j % 2 == 0 {
            acc += c;
        } else {
            acc -= c;
        }
    }
    Ok(acc)
}

/// Exact `sigma_1^2 = sum_i tau_i^2` for the alternating pattern, unbiased
/// binary source.
pub fn alternating_sigma1_exact(n: usize, m: usize) -> Result<BigInt> {
    check_alt(1, n, m)?;
    let table = BinomialTable::new(n, m);
    let (nn, mm) = (n as i64, m as i64);
    let mut total = BigInt::from(0);
    for i in 1..=nn {
        let mut tau = BigInt::from(0);
        for j in 1..=mm {
            let c = BigInt::from(table.get(i - 1, j - 1) * table.get(nn - i, mm - j));
            if j % 2 == 0 {
                tau += c;
            } else {
                tau -= c;
            }
        }
        total += &tau * &tau;
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct RandomPatternSigma {
    /// `E[sigma_1^2(W)]` for `W` drawn from the source.
    pub expected: LogNum,
    /// `A_1 = sum_a p_a (1/p_a - 1)`.
    pub a1: f64,
    /// `sum_i sum_j pi(i, j)^2`.
    pub pi_sq_sum: f64,
    /// `E[sigma_1^2(W)] / ((n / sqrt m) C(n-1, m-1)^2)`.
    pub ratio: f64,
}

/// Expected first-projection variance of a random pattern of length `m`:
/// `A_1 C(n-1, m-1)^2 sum_{i,j} pi(i, j)^2`.
pub fn random_pattern_expected_sigma1(
    dist: &SourceDist,
    n: usize,
    m: usize,
) -> Result<RandomPatternSigma> {
    if m == 0 {
        return Err(Error::EmptyPattern);
    }
    if m > n {
        return Err(Error::TextTooShort { n, m });
    }
    let a1 = letter_variance_sum(dist);
    let mut row = vec![0.0; m];
    let mut pi_sq_sum = 0.0;
    for i in 1..=n {
        pi_row_into(i, n, m, &mut row)?;
        pi_sq_sum += row.iter().map(|x| x * x).sum::<f64>();
    }
    let c2 = log_binomial(n as i64 - 1, m as i64 - 1).powi(2);
    Ok(RandomPatternSigma {
        expected: LogNum::from_f64(a1 * pi_sq_sum) * c2,
        a1,
        pi_sq_sum,
        ratio: a1 * pi_sq_sum * (m as f64).sqrt() / n as f64,
    })
}
