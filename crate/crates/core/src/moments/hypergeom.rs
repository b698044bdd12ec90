//! Hypergeometric rows `pi(i, .)` and the parity bias of a hypergeometric
//! variable.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;

use super::binom::binomial_exact;
use crate::error::{Error, Result};

/// Support `[j_lo, j_hi]` (1-based) of `j -> c(i, j)`.
pub(crate) fn row_support(i: usize, n: usize, m: usize) -> (usize, usize) {
    let lo = if m + i > n { m + i - n } else { 1 }.max(1);
    let hi = m.min(i);
    (lo, hi)
}

/// `pi(i, j) = c(i, j) / C(n-1, m-1)` for `j = 1..=m` (entry `j - 1`),
/// the law of `X + 1` with `X ~ HG(n-1, m-1, i-1)`.
///
/// Built outward from the mode `ceil(i m / (n+1))` with the ratio
/// `pi(i,j+1)/pi(i,j) = (i-j)(m-j) / (j(n-i-m+j+1))`, then normalized, so no
/// intermediate binomial is ever formed.
pub fn pi_row(i: usize, n: usize, m: usize) -> Result<Vec<f64>> {
    let mut row = vec![0.0; m];
    pi_row_into(i, n, m, &mut row)?;
    Ok(row)
}

/// [`pi_row`] writing into a caller-provided buffer of length `m`.
pub fn pi_row_into(i: usize, n: usize, m: usize, row: &mut [f64]) -> Result<()> {
    if m == 0 || m > n || i == 0 || i > n {
        return Err(Error::OutOfRange(format!(
            "pi_row needs 1 <= i <= n and 1 <= m <= n, got i={i}, n={n}, m={m}"
        )));
    }
    assert_eq!(row.len(), m);
    row.fill(0.0);
    let (lo, hi) = row_support(i, n, m);
    let mode = (i * m).div_ceil(n + 1).clamp(lo, hi);
    let ratio = |j: usize| -> f64 {
        let num = (i - j) as f64 * (m - j) as f64;
        let den = j as f64 * (n + j + 1 - i - m) as f64;
        num / den
    };
    row[mode - 1] = 1.0;
    let mut v = 1.0;
    for (j, slot) in (mode..hi).zip(row[mode..hi].iter_mut()) {
        v *= ratio(j);
        if v == 0.0 {
            break;
        }
        *slot = v;
    }
    v = 1.0;
    for j in (lo..mode).rev() {
        v /= ratio(j);
        if v == 0.0 {
            break;
        }
        row[j - 1] = v;
    }
    let total: f64 = row[lo - 1..hi].iter().sum();
    for x in &mut row[lo - 1..hi] {
        *x /= total;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct HgSignBias {
    /// `E(-1)^X`.
    pub bias: f64,
    /// `exp(-2 Var X)`.
    pub bound: f64,
    pub variance: f64,
}

/// `E(-1)^X` from the exact pmf of `X ~ HG(n, k, l)` (population `n`, `k`
/// marked, `l` drawn) together with the bound `exp(-2 Var X)`.
pub fn hg_sign_bias(n: u64, k: u64, l: u64) -> Result<HgSignBias> {
    if k > n || l > n {
        return Err(Error::OutOfRange(format!(
            "HG(n={n}, k={k}, l={l}) needs k <= n and l <= n"
        )));
    }
    let lo = (l + k).saturating_sub(n);
    let hi = k.min(l);
    let mut numer = BigInt::from(0);
    for x in lo..=hi {
        let term = BigInt::from(binomial_exact(k, x) * binomial_exact(n - k, l - x));
        if x % 2 == 0 {
            numer += term;
        } else {
            numer -= term;
        }
    }
    let denom = BigInt::from(binomial_exact(n, l));
    let bias = BigRational::new(numer, denom)
        .to_f64()
        .expect("bias is in [-1, 1]");
    let variance = if n < 2 {
        0.0
    } else {
        let (n, k, l) = (n as f64, k as f64, l as f64);
        k * (n - k) * l * (n - l) / (n * n * (n - 1.0))
    };
    Ok(HgSignBias {
        bias,
        bound: (-2.0 * variance).exp(),
        variance,
    })
}
